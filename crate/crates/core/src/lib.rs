//! Forward and inverse Born series for the Helmholtz equation with a cubic
//! (Kerr) nonlinearity on the unit interval and the unit disk.

pub mod cli;
pub mod convergence;
pub mod discretization;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod inverse;

pub use error::{Error, Result};
