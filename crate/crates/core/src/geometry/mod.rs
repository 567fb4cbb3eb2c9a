//! Model domains and their boundary geometry.

mod chi;
pub mod defining;
mod directional;
mod domain;
mod inscribed;
mod levi;
mod projection;

pub use chi::ChiReport;
pub use defining::{DefiningFunction, Ellipsoid, FnDefiningFunction, Polynomial};
pub use directional::{DirectionalDistance, DEFAULT_ANGLES};
pub use domain::{DomainKind, DomainModel};
pub use inscribed::InscribedBall;
pub use levi::{complex_tangent_basis, LeviClass, LeviReport};
pub use projection::{newton_project, BoundaryFrame, Projection};
