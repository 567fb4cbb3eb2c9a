use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for refinement stability of percentile envelopes.
pub const STABILITY_TOL: f64 = 0.1;

/// Order-independent summary of a statistic over samples.
///
/// All finite samples are kept sorted, so merging partial envelopes gives
/// exactly the envelope of the concatenated stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub name: String,
    pub count: usize,
    /// Samples that were NaN or infinite; they are excluded from the summary.
    pub nonfinite: usize,
    pub min: f64,
    pub p01: f64,
    pub p50: f64,
    pub p99: f64,
    pub max: f64,
    /// Set by [`EnvelopeReport::check_refinement`].
    pub stable: Option<bool>,
    #[serde(skip)]
    sorted: Vec<f64>,
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl EnvelopeReport {
    fn from_sorted(name: String, sorted: Vec<f64>, nonfinite: usize) -> Result<Self> {
        if sorted.is_empty() {
            return Err(Error::EmptyStream);
        }
        Ok(EnvelopeReport {
            name,
            count: sorted.len() + nonfinite,
            nonfinite,
            min: sorted[0],
            p01: percentile(&sorted, 1.0),
            p50: percentile(&sorted, 50.0),
            p99: percentile(&sorted, 99.0),
            max: sorted[sorted.len() - 1],
            stable: None,
            sorted,
        })
    }

    /// `true` if every sample was finite.
    pub fn is_finite(&self) -> bool {
        self.nonfinite == 0 && self.min.is_finite() && self.max.is_finite()
    }

    /// `max / min` of the finite samples.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    /// `p99 / p01` of the finite samples.
    pub fn percentile_spread(&self) -> f64 {
        self.p99 / self.p01
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn merge(&self, other: &EnvelopeReport) -> Result<EnvelopeReport> {
        let mut all = Vec::with_capacity(self.sorted.len() + other.sorted.len());
        let (mut i, mut j) = (0, 0);
        while i < self.sorted.len() && j < other.sorted.len() {
            if self.sorted[i] <= other.sorted[j] {
                all.push(self.sorted[i]);
                i += 1;
            } else {
                all.push(other.sorted[j]);
                j += 1;
            }
        }
        all.extend_from_slice(&self.sorted[i..]);
        all.extend_from_slice(&other.sorted[j..]);
        Self::from_sorted(self.name.clone(), all, self.nonfinite + other.nonfinite)
    }

    /// Compares with the envelope of twice as many samples: p01 and p99 must
    /// agree within [`STABILITY_TOL`]. Sets and returns the flag.
    pub fn check_refinement(&mut self, doubled: &EnvelopeReport) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= STABILITY_TOL * a.abs().max(b.abs());
        let ok =
            self.is_finite() == doubled.is_finite() && close(self.p01, doubled.p01) && close(self.p99, doubled.p99);
        self.stable = Some(ok);
        ok
    }
}

/// Fits an envelope to a stream of samples.
pub fn fit_envelope<I: IntoIterator<Item = f64>>(name: &str, samples: I) -> Result<EnvelopeReport> {
    let mut nonfinite = 0;
    let mut v: Vec<f64> = samples
        .into_iter()
        .filter(|x| {
            let ok = x.is_finite();
            nonfinite += usize::from(!ok);
            ok
        })
        .collect();
    v.sort_by(f64::total_cmp);
    EnvelopeReport::from_sorted(name.to_string(), v, nonfinite)
}
