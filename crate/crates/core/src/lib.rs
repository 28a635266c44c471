//! Numerical engine for a population with a diffusing disperser stage and an
//! age-structured sedentary stage, coupled through the total sedentary
//! population and its age-weighted recruitment.

pub mod equilibrium;
pub mod error;
pub mod grid;
mod kernel;
mod linalg;
pub mod rates;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{build_grid, Discretization};
pub use linalg::Tridiagonal;
