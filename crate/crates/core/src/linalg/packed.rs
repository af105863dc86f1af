//! Symmetric-matrix packing and the bilinear pairing used to write
//! quadratic forms as inner products.
//!
//! A symmetric `n x n` matrix `P` is stored as the length `n(n+1)/2`
//! vector of its unique entries, diagonal first, then off-diagonals row
//! by row:
//!
//! ```text
//! [P11 .. Pnn, P12 .. P1n, P23 .. P2n, ..., P(n-1)n]
//! ```
//!
//! The companion pairing `oplus(x, y)` is defined so that
//! `dot(oplus(x, y), pack(P)) == x' P y` for every symmetric `P`; it is
//! what lets quadratic constraints become linear rows in the packed
//! unknowns.

use super::matrix::{dot, Matrix};
use super::LinalgError;

/// Number of unique entries of a symmetric `n x n` matrix.
#[inline]
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packed vector of the unique entries of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedSym {
    n: usize,
    data: Vec<f64>,
}

impl PackedSym {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != packed_len(n) {
            return Err(LinalgError::DimensionMismatch(format!(
                "packed vector for n={} must have length {}, got {}",
                n,
                packed_len(n),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Packed index of entry `(i, j)` with `i <= j`.
#[inline]
pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    if i == j {
        i
    } else {
        // diagonal block, then full off-diagonal rows above row i,
        // then the offset within row i
        n + i * (2 * n - i - 1) / 2 + (j - i - 1)
    }
}

/// Pack a symmetric matrix into its unique-entry vector.
pub fn sym_pack(p: &Matrix) -> Result<PackedSym, LinalgError> {
    if !p.is_square() {
        return Err(LinalgError::NonSquare { rows: p.rows(), cols: p.cols() });
    }
    if !p.is_symmetric(1e-12) {
        return Err(LinalgError::NotSymmetric);
    }
    let n = p.rows();
    let mut data = vec![0.0; packed_len(n)];
    for i in 0..n {
        data[i] = p[(i, i)];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            data[packed_index(n, i, j)] = p[(i, j)];
        }
    }
    PackedSym::new(n, data)
}

/// Expand a packed vector back into the full symmetric matrix.
pub fn sym_unpack(p: &PackedSym) -> Matrix {
    let n = p.n();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = p.data()[i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = p.data()[packed_index(n, i, j)];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Bilinear pairing of two vectors: products on the diagonal slots,
/// symmetrized cross terms on the off-diagonal slots.
pub fn oplus(x: &[f64], y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if x.len() != y.len() {
        return Err(LinalgError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    let mut out = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        out.push(x[i] * y[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(x[i] * y[j] + x[j] * y[i]);
        }
    }
    Ok(out)
}

/// Quadratic form `x' P y` evaluated through the packed representation.
pub fn quad_form(p: &PackedSym, x: &[f64], y: &[f64]) -> Result<f64, LinalgError> {
    if x.len() != p.n() {
        return Err(LinalgError::LengthMismatch { left: x.len(), right: p.n() });
    }
    let w = oplus(x, y)?;
    Ok(dot(&w, p.data()))
}
