//! Data-driven stability and performance certificates for LTI systems.
//!
//! Given a single recorded trajectory of an unknown linear
//! time-invariant system, this crate learns quadratic certificates by
//! assembling and solving small dense linear programs:
//!
//! - a Lyapunov function proving asymptotic stability,
//! - the exact solution of a Lyapunov equation from sampled data,
//! - an upper bound on the output energy from a given initial state,
//! - an invariant ellipsoid bounding the output peak,
//! - an upper bound on the L2 / RMS gain.
//!
//! Each learned quantity can be validated against a model-based oracle
//! (Kronecker-product Lyapunov solves, observability gramians, a
//! frequency-sweep H-infinity norm) computed with plain dense linear
//! algebra; no semidefinite programming is involved anywhere.
//!
//! Module map:
//!
//! - [`linalg`] — dense matrices, symmetric packing, the quadratic-form
//!   pairing, factorizations, matrix exponential.
//! - [`trajectory`] — simulation, finite differencing, CSV interchange.
//! - [`lp`] — dense two-phase simplex over free variables.
//! - [`certificates`] — data-matrix assembly and the five learners.
//! - [`oracles`] — model-based ground truth for every certificate.

pub mod certificates;
pub mod exec;
pub mod linalg;
pub mod lp;
pub mod oracles;
pub mod trajectory;

pub use linalg::{Matrix, PackedSym};
