//! Electron transfer through site networks with two absorbing sinks:
//! non-Hermitian spectra, superradiance transitions, efficiency switching
//! and its classical and thermal counterparts.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod network;
pub mod spectral;
pub mod sweep;
pub mod units;

pub use error::{Error, NumericalError, Result, ValidationError};

pub type C64 = num_complex::Complex<f64>;
pub type CMatrix = nalgebra::DMatrix<C64>;
