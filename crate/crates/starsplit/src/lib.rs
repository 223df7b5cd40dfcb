pub mod error;
pub mod forms;
pub mod linalg;
pub mod metric;
pub mod expr;
pub mod complex_structure;
pub mod analysis;
pub mod operators;
pub mod search;
pub mod catalog;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
pub use forms::Form;
pub use metric::HermitianMetric;
pub use complex_structure::{InvariantComplexManifold, PullbackMap};
pub use num_complex::Complex64;

pub const DEFAULT_TOL: f64 = 1e-10;
