//! Simulation and analysis of a cavity-QED protocol that entangles two
//! three-level Rydberg atoms through cavity-assisted collisions.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense complex vectors/matrices, Kronecker products, a
//!   Hermitian eigensolver, matrix exponentials and partial traces.
//! - [`hilbert`]: the composite atom ⊗ atom ⊗ field space, basis indexing
//!   and embedded ladder operators.
//! - [`hamiltonians`]: interaction-picture, static-frame and dispersive
//!   Hamiltonians plus cavity collapse operators.
//! - [`dynamics`]: exact, time-stepped, Lindblad and closed-form propagators.
//! - [`protocol`]: the pulse/collision sequence that produces the maximally
//!   entangled two-qutrit state, timing-error models and phase calibration.
//! - [`analysis`]: fidelities, Schmidt data, parameter sweeps and the
//!   physical-units report.
//!
//! All numerical kernels are generic over the scalar type through [`Real`];
//! `f64` is the intended precision for production runs and the concrete
//! aliases at the crate root ([`C64`], [`CMatrix64`], ...) refer to it.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub mod analysis;
pub mod dynamics;
pub mod hamiltonians;
pub mod hilbert;
pub mod linalg;
pub mod protocol;

/// Floating-point scalar underlying all complex arithmetic in this crate.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with the
/// precision of the type; the contract tolerances quoted throughout the crate
/// documentation are the `f64` values.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Hermiticity gate: inputs with `max |A - A†|` above this (relative to
    /// the largest entry) are rejected by the spectral routines.
    const HERM_TOL: Self;
    /// Default self-consistency tolerance for step-doubling convergence
    /// checks in the time steppers.
    const STEP_TOL: Self;
}

impl Real for f64 {
    const HERM_TOL: f64 = 1e-12;
    const STEP_TOL: f64 = 1e-8;
}

impl Real for f32 {
    const HERM_TOL: f32 = 1e-4;
    const STEP_TOL: f32 = 1e-4;
}

/// Convert an `f64` literal into the working scalar type.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("numeric literal out of range for scalar type")
}

/// Complex number over the working scalar.
pub type Cplx<T> = Complex<T>;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Single-precision complex scalar.
pub type C32 = Complex<f32>;

/// Double-precision dense complex matrix.
pub type CMatrix64 = linalg::CMatrix<f64>;
/// Double-precision dense complex vector.
pub type CVector64 = linalg::CVector<f64>;
/// Single-precision dense complex matrix.
pub type CMatrix32 = linalg::CMatrix<f32>;
/// Single-precision dense complex vector.
pub type CVector32 = linalg::CVector<f32>;

/// Errors shared by every module in the crate.
///
/// Diagnostics are reported in `f64` regardless of the working scalar.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A spectral routine received a matrix that is not Hermitian within
    /// tolerance.
    #[error("matrix is not Hermitian: max |A - A†| entry {deviation:e} exceeds tolerance {tolerance:e}")]
    NonHermitianInput { deviation: f64, tolerance: f64 },

    /// Operand shapes are incompatible.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A basis label addresses a photon number beyond the Fock cutoff.
    #[error("photon number {n} out of range (max {n_max})")]
    PhotonOutOfRange { n: usize, n_max: usize },

    /// Step doubling failed to reach self-consistency.
    #[error("propagator failed to converge: residual {residual:e} above tolerance {tolerance:e} at {steps} steps")]
    ConvergenceFailure {
        residual: f64,
        tolerance: f64,
        steps: usize,
    },

    /// A configuration value violates its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Phase calibration received a state with no diagonal support.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
