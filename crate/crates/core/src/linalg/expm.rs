//! Matrix exponential via scaling-and-squaring with a diagonal Pade
//! approximant.
//!
//! The matrix is scaled by `2^-s` until its 1-norm drops below 0.5,
//! approximated with the degree-6 diagonal Pade rational (accurate to
//! well beyond double precision at that norm), then squared `s` times.
//! Inputs with 1-norm above `1e6` are rejected rather than silently
//! overflowing.

use super::factor::lu_factor;
use super::matrix::Matrix;
use super::LinalgError;

/// Degree-6 diagonal Pade coefficients for the exponential.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15_840.0,
    1.0 / 665_280.0,
];

/// Norm threshold below which the degree-6 approximant is applied
/// directly.
const THETA: f64 = 0.5;

const NORM_LIMIT: f64 = 1e6;

/// Matrix exponential `exp(A)`.
pub fn expm(a: &Matrix) -> Result<Matrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = a.norm_one();
    if norm > NORM_LIMIT {
        return Err(LinalgError::NormTooLarge { norm });
    }

    let s = if norm > THETA { (norm / THETA).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale(0.5f64.powi(s as i32));

    let mut result = pade6(&scaled)?;
    for _ in 0..s {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// Degree-6 diagonal Pade approximant of `exp(A)` for small-norm `A`.
fn pade6(a: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a.rows();
    let eye = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    // split into even powers and A * (even powers)
    let even = eye
        .scale(PADE6[0])
        .add(&a2.scale(PADE6[2]))
        .add(&a4.scale(PADE6[4]))
        .add(&a6.scale(PADE6[6]));
    let odd_core = eye
        .scale(PADE6[1])
        .add(&a2.scale(PADE6[3]))
        .add(&a4.scale(PADE6[5]));
    let odd = a.matmul(&odd_core);

    // numerator even + odd, denominator even - odd
    let numer = even.add(&odd);
    let denom = even.sub(&odd);
    let lu = lu_factor(&denom, 0.0)?;
    Ok(lu.solve_matrix(&numer))
}
