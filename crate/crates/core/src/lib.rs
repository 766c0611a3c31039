//! Numerical laboratory for a one-dimensional Dirac field coupled to a
//! nonlinear oscillator at `x = 0`:
//!
//! ```text
//! i d/dt psi = D_m psi - D_m^{-1} delta(x) F(psi(0, t)),   D_m = alpha d/dx + m beta
//! ```
//!
//! * [`model`]: parameters, nonlinearity, Dirac operator, energy and norms.
//! * [`solitary`]: closed-form two-frequency solitary waves and their certificates.
//! * [`evolution`]: split-step time integration and an integral-form cross-check.
//! * [`diagnostics`]: trace spectra, modulus flatness and fits to the solitary manifold.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod initial;
pub mod io;
pub mod model;
pub mod numerics;
pub mod solitary;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Grid, ModelParams, SpinorField, SpinorValue};
