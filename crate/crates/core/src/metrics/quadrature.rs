//! Length of polylines in a metric model by adaptive Simpson quadrature.

use serde::{Deserialize, Serialize};

use super::models::{MetricKind, MetricModel};
use crate::cx::{CxPoint, CxVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathIntegral {
    pub value: f64,
    /// Smallest boundary distance met at a quadrature node.
    pub min_delta: f64,
    pub nodes: usize,
    /// True if some segment hit the node cap before converging.
    pub capped: bool,
}

pub const REL_TOL: f64 = 1e-6;
pub const NODE_CAP: usize = 1 << 14;
const MAX_DEPTH: usize = 48;

struct Segment<'a> {
    model: &'a MetricModel,
    a: &'a CxPoint,
    dir: CxVector,
    index: usize,
    min_delta: f64,
    nodes: usize,
    budget: usize,
    capped: bool,
}

impl Segment<'_> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        self.nodes += 1;
        let p = self.a.offset(t, &self.dir);
        let frame = match self.model.domain.boundary_frame(&p) {
            Ok(f) => f,
            Err(Error::NotInDomain { .. }) => {
                return Err(Error::PathExitsDomain {
                    segment: self.index,
                    parameter: t,
                })
            }
            Err(e) => return Err(e),
        };
        self.min_delta = self.min_delta.min(frame.delta);
        match self.model.kind {
            MetricKind::KappaUpperDisc | MetricKind::KappaUpperInscribed { .. } => {
                if matches!(self.model.kind, MetricKind::KappaUpperDisc) {
                    self.model.eval(&p, &self.dir)
                } else {
                    Ok(self.model.eval_in_frame(&frame, &self.dir))
                }
            }
            _ => {
                if !frame.unique {
                    return Err(Error::AmbiguousProjection);
                }
                Ok(self.model.eval_in_frame(&frame, &self.dir))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn adapt(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: usize) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let both = left + right;
        let err = both - whole;
        if err.abs() <= 15.0 * REL_TOL * both.abs() {
            return Ok(both + err / 15.0);
        }
        if depth >= MAX_DEPTH || self.nodes + 4 > self.budget {
            self.capped = true;
            return Ok(both + err / 15.0);
        }
        Ok(self.adapt(a, m, fa, flm, fm, left, depth + 1)? + self.adapt(m, b, fm, frm, fb, right, depth + 1)?)
    }

    fn piece(&mut self, a: f64, b: f64) -> Result<f64> {
        let fa = self.eval(a)?;
        let fb = self.eval(b)?;
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.adapt(a, b, fa, fm, fb, whole, 0)
    }
}

/// Break points in `[0, 1]` so that a linearly varying depth changes by at
/// most a factor 2 on each piece.
fn depth_splits(d0: f64, d1: f64) -> Vec<f64> {
    let (lo, hi) = (d0.min(d1), d0.max(d1));
    let mut ts = vec![0.0];
    if lo > 0.0 && hi / lo > 2.0 {
        let k = (hi / lo).log2().ceil() as usize;
        for i in 1..k {
            let d = lo * (hi / lo).powf(i as f64 / k as f64);
            let t = (d - d0) / (d1 - d0);
            ts.push(t);
        }
        ts.sort_by(f64::total_cmp);
    }
    ts.push(1.0);
    ts
}

/// `∫ M(γ(t); γ'(t)) dt` along the polyline through `path`.
pub fn integrate_metric(model: &MetricModel, path: &[CxPoint]) -> Result<PathIntegral> {
    let mut out = PathIntegral {
        value: 0.0,
        min_delta: f64::INFINITY,
        nodes: 0,
        capped: false,
    };
    for (index, pair) in path.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dir = b - a;
        if dir.norm() == 0.0 {
            continue;
        }
        let d = &model.domain;
        let depth = |p: &CxPoint| -> Result<f64> {
            match d.boundary_frame(p) {
                Ok(f) => Ok(f.delta),
                Err(Error::NotInDomain { .. }) => Err(Error::PathExitsDomain {
                    segment: index,
                    parameter: if std::ptr::eq(p, a) { 0.0 } else { 1.0 },
                }),
                Err(e) => Err(e),
            }
        };
        let splits = depth_splits(depth(a)?, depth(b)?);
        let mut seg = Segment {
            model,
            a,
            dir,
            index,
            min_delta: f64::INFINITY,
            nodes: 0,
            budget: NODE_CAP,
            capped: false,
        };
        for w in splits.windows(2) {
            // Four initial panels per piece keep narrow features from hiding
            // between the first Simpson nodes.
            for q in 0..4 {
                let t0 = w[0] + (w[1] - w[0]) * q as f64 / 4.0;
                let t1 = w[0] + (w[1] - w[0]) * (q + 1) as f64 / 4.0;
                out.value += seg.piece(t0, t1)?;
            }
        }
        out.min_delta = out.min_delta.min(seg.min_delta);
        out.nodes += seg.nodes;
        out.capped |= seg.capped;
    }
    if out.min_delta.is_infinite() {
        out.min_delta = match path.first() {
            Some(p) => model.domain.boundary_frame(p).map(|f| f.delta).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
    }
    Ok(out)
}
