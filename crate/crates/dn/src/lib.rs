//! Numerical toolkit for mixed-order (Douglis-Nirenberg) elliptic systems
//! with a spectral parameter: symbol calculus, parameter-ellipticity
//! verification with explicit constants, a periodic pseudospectral engine,
//! parameter-dependent norms, and a dense spectral experiment harness.

pub mod config;
pub mod ellipticity;
pub mod error;
pub mod example;
pub mod fourier;
pub mod norms;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
