//! Numerical laboratory for the stability of analog and digital quantum
//! simulation of local observables under noise.
//!
//! Small lattice systems are treated with dense linear algebra so that every
//! error functional is computed exactly and compared against the closed-form
//! right-hand sides in [`bounds`].

pub mod bounds;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod operators;
pub mod rng;
pub mod trotter;

pub use error::{Result, StabError};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix, row-major.
pub type CMatrix = ndarray::Array2<C64>;
/// Dense complex vector.
pub type CVector = ndarray::Array1<C64>;

/// Largest Hilbert-space dimension handled densely (12 qubits).
pub const MAX_DIM: usize = 4096;
