pub mod error;
pub mod experiments;
pub mod multivariate;
mod quad;
pub mod spectral;
pub mod symbols;
pub mod univariate;

pub use error::{Error, Result};
