pub mod algebra;
pub mod error;

pub use error::{Error, Result};
pub mod curve;
pub mod tr;
pub mod xy;
pub mod laplace;
pub mod io;
