pub mod error;
pub mod numerics;
pub mod flux_models;
pub mod moment_tensor;
pub mod exact_solutions;
pub mod fv_solver;
pub mod estimate_lab;

pub use error::{Error, Result};
