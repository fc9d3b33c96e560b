//! File formats, input parsing and the command-line pipeline built on
//! `cape-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod input;
pub mod options;
pub mod report;
pub mod validate;

pub use error::{AppError, Result};
