//! Experiment orchestration: configuration, pair sampling, envelopes and
//! report output.

mod config;
mod envelope;
mod experiment;
mod output;
mod sampler;

pub use config::{ExperimentConfig, OutputFormat};
pub use envelope::{fit_envelope, EnvelopeReport, STABILITY_TOL};
pub use experiment::{
    default_anchor, exact_distance, run_experiment, setup, snap_anchor, ExperimentReport, RegimeCounts, SampleRow,
    Violation, QUADRATURE_TOL, SYMMETRY_DEPTH,
};
pub use output::{fmt17, fmt_opt, write_csv, write_json_lines};
pub use sampler::{PairSampler, SampledPair};
