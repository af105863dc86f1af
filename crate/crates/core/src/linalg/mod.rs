//! Dense real linear algebra: matrices, symmetric packing, the bilinear
//! pairing for quadratic forms, factorizations, Kronecker products, and
//! the matrix exponential.
//!
//! Everything here operates on immutable values and owns no shared
//! state, so all operations are freely usable across threads.

mod expm;
mod factor;
mod matrix;
mod packed;

pub use expm::expm;
pub use factor::{cholesky, is_positive_definite, kron, lu_factor, lu_solve, LuFactors};
pub use matrix::{dot, norm2, Matrix};
pub use packed::{oplus, packed_len, quad_form, sym_pack, sym_unpack, PackedSym};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("vector length mismatch ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix 1-norm {norm:.3e} too large for the exponential")]
    NormTooLarge { norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry encountered")]
    NonFinite,
}
