//! Multi-task semi-supervised binary classification with a large-dimensional
//! calibration layer.

pub mod bench;
pub mod calibration;
pub mod classifier;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod theory;

pub use error::{Error, Result};
