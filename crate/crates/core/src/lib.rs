//! Numerical toolkit for time-dependent finite-level Hamiltonians.
//!
//! The pipeline is `schedules` (H(t), dH/dt) → `spectral` (gauge-tracked
//! eigenframes and nonadiabatic couplings) → `propagator` (Schrödinger
//! integration, adiabatic amplitudes) → `criteria` / `passages`
//! (adiabaticity functionals, exact bounds, Landau–Zener–Stückelberg
//! analytics). `scenario` wires everything behind configuration documents.
//!
//! Units: ħ = 1, every frequency is an angular frequency.

pub mod bessel;
pub mod criteria;
pub mod error;
pub mod ode;
pub mod passages;
pub mod propagator;
pub mod report;
pub mod scenario;
pub mod schedules;
pub mod spectral;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute eigenvalue of a Hermitian matrix, i.e. its spectral norm.
pub fn spectral_norm(h: &CMatrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    h.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, e| acc.max(e.abs()))
}
