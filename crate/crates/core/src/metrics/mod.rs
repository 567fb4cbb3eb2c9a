//! Infinitesimal metrics and their integrated forms.

pub mod ball;
mod models;
mod quadrature;

pub use ball::{ball_distance, ball_metric};
pub use models::{inscribed_ball_metric, Branch, MetricKind, MetricModel, PsiSpec};
pub use quadrature::{integrate_metric, PathIntegral, NODE_CAP, REL_TOL};
