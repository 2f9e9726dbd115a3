//! Linear and combinatorial layer of quilted Floer theory.

pub mod error;
pub mod linalg;
pub mod intlin;
pub mod symplinalg;
pub mod corrlin;
pub mod maslov;
pub mod grading;
pub mod quilt;
pub mod toric;

pub use error::{Error, Result};
