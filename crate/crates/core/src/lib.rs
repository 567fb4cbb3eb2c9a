//! Boundary geometry and Kobayashi-distance bounds on model domains in ℂⁿ.
//!
//! The crate computes the comparison quantities `A_D`, `B_D`, `H_D`, `F_D`
//! for pairs of points near the boundary of a domain, upper bounds for the
//! Kobayashi distance from explicit path constructions and graph search,
//! explicit lower bounds, and the harness that checks two-sided estimates as
//! empirical constant envelopes.

// `!(x <= y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cx;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod quantities;
pub mod sampling;
pub mod shell;

pub use cx::{Cx, CxPoint, CxVector};
pub use error::{Error, Result};
pub use geometry::{BoundaryFrame, DomainKind, DomainModel, LeviClass, LeviReport};
