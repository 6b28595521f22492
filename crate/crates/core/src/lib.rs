//! Planning, inference and explanation of an automated vehicle's decisions.
//!
//! Geometry, trajectory features and divergences are generic over
//! [`scalar::Scalar`]; the aliases below fix them to `f64`, the type used by
//! the planner and the Bayes network.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod causal;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod grammar;
pub mod maneuver;
pub mod planner;
pub mod recognition;
pub mod reward;
pub mod scalar;
pub mod world;

pub use error::{Error, Result};

pub type Point = geometry::Point2<f64>;
pub type Polyline = geometry::Polyline<f64>;
pub type Projection = geometry::Projection<f64>;
pub type Features = maneuver::TrajectoryFeatures<f64>;
