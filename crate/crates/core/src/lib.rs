//! Numerical toolkit for the eigenvalue distribution of the time-frequency
//! localization operator `T = R_I P_J R_I` with `J = [-1/2, 1/2]`, `I = [-D/2, D/2]`.

pub mod analysis;
pub mod calibration;
pub mod cutoff;
pub mod error;
pub mod localcosine;
pub mod partition;
pub mod quadrature;
pub mod sampled;
pub mod spectral;
pub mod whitney;

pub use error::{Error, Result};
