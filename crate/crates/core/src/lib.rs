//! Continued-fraction digit processes and the dimension of their measures.

pub mod cf;
pub mod deviations;
pub mod dimension;
pub mod error;
pub mod fexp;
pub mod gauss;
pub mod mc;
pub mod process;
pub mod repro;

pub use error::{Error, Result};
