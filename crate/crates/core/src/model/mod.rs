//! Model constants, parameters, the Dirac operator and the energy functional.

mod field;
mod operators;
mod params;

pub use field::{Grid, SpinorField, SpinorValue};
pub use operators::{
    derivative, dirac_apply, dirac_inverse_delta, dirac_symbol, energy, norms, spectrum,
    DiracMatrices, Norms, PointKernel,
};
pub(crate) use operators::{local_h1, origin_value, weighted_spectral_sum, window_weight};
pub use params::{Mode, ModelParams, Nonlinearity};
