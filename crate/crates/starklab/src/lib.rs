//! Reflection coefficient asymptotics and Stark-Wannier resonances for
//! `H = -d^2/dx^2 + 2 cos(2 pi x) - eps x`.
//!
//! The crate is generic over the scalar type ([`Real`]): `f64` for quick
//! shallow work, [`BigFloat`] (MPFR) wherever `e^rho`-sized contrasts appear.

pub mod bigfloat;
pub mod compare;
pub mod cplx;
pub mod error;
pub mod exp_sums;
pub mod models;
pub mod oracle;
pub mod par;
pub mod report;
pub mod resonance;
pub mod scalar;
pub mod types;

pub use bigfloat::BigFloat;
pub use error::{Result, StarkError};
pub use scalar::Real;
pub use types::{
    epsilon_from_omega, make_spectral_params, scaled_coords, EnergyPoint, ModelValue, PrecisionContext,
    RationalTag, SpectralParams,
};

pub type C64 = num_complex::Complex<f64>;
pub type CBig = num_complex::Complex<BigFloat>;
pub type Params64 = SpectralParams<f64>;
pub type ParamsBig = SpectralParams<BigFloat>;
