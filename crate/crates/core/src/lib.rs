pub mod confidence;
pub mod environments;
pub mod error;
pub mod estimation;
pub mod expectation;
pub mod geometry;
pub mod harness;
pub mod lc_lucb;
pub mod linalg;
pub mod lp_solver;
pub mod nonlinear;

pub use error::{Error, Result};
