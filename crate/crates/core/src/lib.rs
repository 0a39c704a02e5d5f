//! Heterogeneous-team informative sampling at desk scale.
//!
//! The pipeline runs aerial texture segmentation into a class map, renders a
//! drivability scoremap from a learned per-class table, trains a softmax
//! policy-gradient coverage planner on that scoremap, and follows the planned
//! waypoints in a grid simulator with a behavior-cloned steering network. The
//! traversal feedback updates the drivability table and closes the loop.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod local;
pub mod planner;
pub mod pnm;
pub mod rng;
pub mod scoremap;
pub mod sim;
pub mod texture;

pub use error::{Error, Result};
pub use grid::{ClassMap, GridPose, ScoreMap};
