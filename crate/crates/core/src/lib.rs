pub mod analytic;
pub mod classify;
pub mod error;
pub mod gibbs;
pub mod padic;
pub mod potts;
pub mod sampling;

pub use error::{ModelError, PadicError};
pub use padic::{PadicNorm, PadicNumber};
pub use potts::{FieldVector, ModelParams, SpinAction};
