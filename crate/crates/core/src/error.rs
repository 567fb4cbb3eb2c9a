use thiserror::Error;

/// Errors raised by the geometry, estimator and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionNoConverge { iterations: usize, residual: f64 },

    #[error("point at depth {depth:e} lies outside the collar of width {collar:e}")]
    OutsideCollar { depth: f64, collar: f64 },

    #[error("nearest boundary point is not unique")]
    AmbiguousProjection,

    #[error("point is not inside the domain (defining function = {value:e})")]
    NotInDomain { value: f64 },

    #[error("fewer than two usable boundary samples near the anchor")]
    DegenerateSampling,

    #[error("ball of radius {radius:e} is not contained in the domain")]
    NotInterior { radius: f64 },

    #[error("pair is outside regime {expected}")]
    RegimeMismatch { expected: &'static str },

    #[error("path leaves the domain at parameter {parameter:.6} of segment {segment}")]
    PathExitsDomain { segment: usize, parameter: f64 },

    #[error("lifted point at height {height:e} leaves the domain or its collar")]
    LiftExitsDomain { height: f64 },

    #[error("endpoints are not connected in the search graph")]
    DisconnectedGraph,

    #[error("invalid ψ specification: {0}")]
    InvalidPsi(String),

    #[error("point lies outside the unit ball")]
    OutsideBall,

    #[error("cannot parse domain `{spec}`: {reason}")]
    DomainParse { spec: String, reason: String },

    #[error("config line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    #[error("cannot fit an envelope to an empty sample stream")]
    EmptyStream,

    #[error("curve violates its constraints: {0}")]
    ConstraintViolation(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
