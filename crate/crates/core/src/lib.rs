pub mod analysis;
pub mod error;
pub mod experiment;
pub mod lstsq;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
