pub mod acceptance;
pub mod cluster_geometry;
pub mod error;
pub mod greens;
pub mod ground_state;
pub mod nlep;
pub mod pde_sim;
pub mod reduced_problem;
pub mod stability;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = nalgebra::Vector2<f64>;
