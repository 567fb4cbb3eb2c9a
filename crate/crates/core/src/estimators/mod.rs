//! Upper and lower bounds for the Kobayashi distance.

mod bounds;
mod graph;

pub use bounds::{shell_integral_lower, BoundKind, BoundResult, Estimator, PathKind, PathSpec};
pub use graph::{GraphReport, MeshParams};
