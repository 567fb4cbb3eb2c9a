use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{GraphReport, MeshParams};
use crate::cx::CxPoint;
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainModel, LeviClass};
use crate::metrics::{integrate_metric, MetricKind, MetricModel};
use crate::quantities::{pair_record, ClaimRegime, ConcaveRegime, PairContext, PairRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Segment,
    NormalLift,
    Graph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    pub vertices: Vec<CxPoint>,
    /// Lift height `3 B_D(z, w)` for normal lifts.
    pub lift_height: Option<f64>,
    pub case: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub kind: BoundKind,
    pub method: String,
    /// Closed-form comparison value (e.g. `4 A_D` or `log A_D + 10`).
    pub cap: Option<f64>,
    /// True when the value uses a model metric with an unknown constant
    /// rather than a certified one.
    pub model: bool,
    /// True when the bound is outside its proven range of validity.
    pub heuristic: bool,
    pub notes: Vec<String>,
    pub path: Option<PathSpec>,
    pub graph: Option<GraphReport>,
}

impl BoundResult {
    pub(crate) fn new(value: f64, kind: BoundKind, method: &str) -> Self {
        BoundResult {
            value,
            kind,
            method: method.to_string(),
            cap: None,
            model: false,
            heuristic: false,
            notes: Vec::new(),
            path: None,
            graph: None,
        }
    }

    fn zero(kind: BoundKind, method: &str) -> Self {
        let mut r = Self::new(0.0, kind, method);
        r.notes.push("z = w".into());
        r
    }
}

/// Bound estimators for pairs near one boundary point.
#[derive(Clone, Debug)]
pub struct Estimator {
    pub ctx: PairContext,
    /// Certified upper metric (inscribed tangent balls).
    pub upper: MetricModel,
    /// Upper model metric for the non-semipositive track.
    pub model_upper: MetricModel,
    pub levi: LeviClass,
    pub mesh: MeshParams,
}

impl Estimator {
    pub fn new(ctx: PairContext) -> Result<Self> {
        let domain = ctx.domain.clone();
        let upper = MetricModel::kappa_upper(domain.clone(), &ctx.anchor)?;
        let model_upper = MetricModel::new(
            domain.clone(),
            MetricKind::DntUpper {
                c: ctx.constants.dnt_upper,
            },
        )?;
        let levi = domain.levi_classify(&ctx.anchor)?.classification;
        Ok(Estimator {
            ctx,
            upper,
            model_upper,
            levi,
            mesh: MeshParams::default(),
        })
    }

    pub fn with_mesh(mut self, mesh: MeshParams) -> Self {
        self.mesh = mesh;
        self
    }

    pub fn domain(&self) -> &Arc<DomainModel> {
        &self.ctx.domain
    }

    fn concave_track(&self) -> bool {
        self.levi == LeviClass::NonSemipositive
    }

    pub fn record(&self, z: &CxPoint, w: &CxPoint) -> Result<PairRecord> {
        pair_record(&self.ctx, z, w)
    }

    /// Orders a pair so that the first point is at least as deep.
    fn oriented<'a>(&self, z: &'a CxPoint, w: &'a CxPoint) -> Result<(&'a CxPoint, &'a CxPoint)> {
        let d = self.domain();
        Ok(if d.depth(z)? >= d.depth(w)? { (z, w) } else { (w, z) })
    }

    fn segment_with(&self, metric: &MetricModel, z: &CxPoint, w: &CxPoint, rec: &PairRecord) -> Result<BoundResult> {
        let path = vec![z.clone(), w.clone()];
        let integral = integrate_metric(metric, &path)?;
        let mut r = BoundResult::new(integral.value, BoundKind::Upper, "segment");
        r.cap = Some(4.0 * rec.a);
        r.model = !matches!(metric.kind, MetricKind::KappaUpperInscribed { .. });
        r.notes.push(format!("metric {}", metric.kind.name()));
        r.notes.push(format!("quadrature nodes {}", integral.nodes));
        if integral.capped {
            r.notes.push("quadrature node cap reached".into());
        }
        r.path = Some(PathSpec {
            kind: PathKind::Segment,
            vertices: path,
            lift_height: None,
            case: Some(if self.concave_track() { "concave-a" } else { "claim-a" }.into()),
        });
        Ok(r)
    }

    /// Integral of the upper metric along `[z, w]`; requires regime (a).
    pub fn upper_bound_segment(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let (z, w) = self.oriented(z, w)?;
        let rec = self.record(z, w)?;
        if rec.is_degenerate() {
            return Ok(BoundResult::zero(BoundKind::Upper, "segment"));
        }
        if self.concave_track() {
            if rec.concave != ConcaveRegime::A {
                return Err(Error::RegimeMismatch { expected: "concave-a" });
            }
        } else if rec.claim != ClaimRegime::A {
            return Err(Error::RegimeMismatch { expected: "claim-a" });
        }
        self.segment_with(&self.upper, z, w, &rec)
    }

    /// The polyline `z → π(z) + h n → π(w) + h n → w`.
    pub fn lift_path(&self, z: &CxPoint, w: &CxPoint, height: f64) -> Result<Vec<CxPoint>> {
        let d = self.domain();
        if !(height < d.frame_limit) {
            return Err(Error::LiftExitsDomain { height });
        }
        let fz = d.unique_frame(z)?;
        let fw = d.unique_frame(w)?;
        let zl = fz.foot.offset(height, &fz.normal);
        let wl = fw.foot.offset(height, &fw.normal);
        for p in [&zl, &wl] {
            if !d.contains(p)
                || d.depth(p)
                    .map_or(true, |dp| (dp - height).abs() > 1e-9 * height.max(1.0))
            {
                return Err(Error::LiftExitsDomain { height });
            }
        }
        Ok(vec![z.clone(), zl, wl, w.clone()])
    }

    fn lift_with(&self, metric: &MetricModel, z: &CxPoint, w: &CxPoint, rec: &PairRecord) -> Result<BoundResult> {
        let height = 3.0 * rec.b;
        let path = self.lift_path(z, w, height)?;
        let integral = integrate_metric(metric, &path)?;
        let mut r = BoundResult::new(integral.value, BoundKind::Upper, "normal-lift");
        r.model = !matches!(metric.kind, MetricKind::KappaUpperInscribed { .. });
        r.cap = Some(if self.concave_track() {
            rec.b.sqrt()
        } else {
            rec.a.ln() + 10.0
        });
        r.notes.push(format!("metric {}", metric.kind.name()));
        r.notes.push(format!("lift height {height:e}"));
        r.path = Some(PathSpec {
            kind: PathKind::NormalLift,
            vertices: path,
            lift_height: Some(height),
            case: Some(if self.concave_track() { "concave-b" } else { "claim-b" }.into()),
        });
        Ok(r)
    }

    /// Integral of the upper metric along the lift at height `3 B_D(z,w)`;
    /// requires regime (b).
    pub fn upper_bound_normal_lift(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let (z, w) = self.oriented(z, w)?;
        let rec = self.record(z, w)?;
        if rec.is_degenerate() {
            return Ok(BoundResult::zero(BoundKind::Upper, "normal-lift"));
        }
        if self.concave_track() {
            if rec.concave != ConcaveRegime::B {
                return Err(Error::RegimeMismatch { expected: "concave-b" });
            }
        } else if rec.claim != ClaimRegime::B {
            return Err(Error::RegimeMismatch { expected: "claim-b" });
        }
        self.lift_with(&self.upper, z, w, &rec)
    }

    /// Segment in regime (a), lift in regime (b), for the certified metric.
    pub fn upper_bound_claim(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let (z, w) = self.oriented(z, w)?;
        let rec = self.record(z, w)?;
        if rec.is_degenerate() {
            return Ok(BoundResult::zero(BoundKind::Upper, "claim"));
        }
        let regime_a = if self.concave_track() {
            rec.concave == ConcaveRegime::A
        } else {
            rec.claim == ClaimRegime::A
        };
        if regime_a {
            self.segment_with(&self.upper, z, w, &rec)
        } else {
            self.lift_with(&self.upper, z, w, &rec)
        }
    }

    /// Smaller of the segment and lift integrals of the non-semipositive
    /// upper model metric `C(|X_u|/√δ + |X|)`; a path whose segment leaves
    /// the domain is skipped.
    pub fn upper_bound_model(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let (z, w) = self.oriented(z, w)?;
        let rec = self.record(z, w)?;
        if rec.is_degenerate() {
            return Ok(BoundResult::zero(BoundKind::Upper, "model"));
        }
        let seg = self.segment_with(&self.model_upper, z, w, &rec);
        let lift = self.lift_with(&self.model_upper, z, w, &rec);
        let mut best = match (seg, lift) {
            (Ok(a), Ok(b)) => {
                if a.value <= b.value {
                    a
                } else {
                    b
                }
            }
            (Ok(a), Err(_)) => a,
            (Err(_), Ok(b)) => b,
            (Err(e), Err(_)) => return Err(e),
        };
        best.method = format!("model-{}", best.method);
        best.cap = Some(rec.b.sqrt());
        Ok(best)
    }

    /// `½ log(1 + 1/δ_D(z; z − w))` with `z` the point nearer the boundary.
    pub fn lower_bound_halflog(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let d = self.domain();
        let (deep, shallow) = self.oriented(z, w)?;
        let (z, w) = (shallow, deep);
        let x = z - w;
        if x.norm() == 0.0 {
            return Ok(BoundResult::zero(BoundKind::Lower, "halflog"));
        }
        let dd = d.directional_distance(z, &x)?;
        let mut r = BoundResult::new(0.5 * (1.0 / dd.value).ln_1p(), BoundKind::Lower, "halflog");
        if let Some(m) = dd.angles {
            r.notes.push(format!("directional distance from {m} angles"));
        }
        if self.levi != LeviClass::StronglyPseudoconvex {
            r.heuristic = true;
            r.notes.push(format!("anchor is {}; bound not proven there", self.levi));
        }
        Ok(r)
    }

    /// `c_low · F_D(z, w)`; on the shell also the closed radial integral.
    pub fn lower_bound_f(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        let rec = self.record(z, w)?;
        let c = self.ctx.constants.c_low;
        let mut r = BoundResult::new(c * rec.f, BoundKind::Lower, "F");
        r.model = true;
        r.notes.push(format!("c_low = {c}"));
        if let DomainKind::Shell { .. } = self.domain().kind {
            r.notes
                .push(format!("shell integral {:.17e}", shell_integral_lower(z, w)));
        }
        Ok(r)
    }

    /// All applicable bounds for a pair; errors of individual methods are
    /// reported as notes rather than aborting.
    pub fn all_bounds(&self, z: &CxPoint, w: &CxPoint, methods: &[PathKind]) -> Vec<(String, Result<BoundResult>)> {
        let mut out = Vec::new();
        for m in methods {
            match m {
                PathKind::Segment => out.push(("segment".into(), self.upper_bound_segment(z, w))),
                PathKind::NormalLift => out.push(("lift".into(), self.upper_bound_normal_lift(z, w))),
                PathKind::Graph => out.push(("graph".into(), self.upper_bound_graph(z, w))),
            }
        }
        out.push(("claim".into(), self.upper_bound_claim(z, w)));
        if self.concave_track() {
            out.push(("model".into(), self.upper_bound_model(z, w)));
        }
        out.push(("halflog".into(), self.lower_bound_halflog(z, w)));
        out.push(("F".into(), self.lower_bound_f(z, w)));
        out
    }
}

/// `|z − w| + |√(|z|² − 1) − √(|w|² − 1)|` for points of the shell.
pub fn shell_integral_lower(z: &CxPoint, w: &CxPoint) -> f64 {
    z.distance(w) + ((z.norm_sqr() - 1.0).sqrt() - (w.norm_sqr() - 1.0).sqrt()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cx::{Cx, CxVector};
    use crate::metrics::ball_distance;
    use crate::quantities::ModelConstants;

    fn pt(v: &[(f64, f64)]) -> CxPoint {
        v.iter().map(|&(a, b)| Cx::new(a, b)).collect()
    }

    fn ball_est() -> Estimator {
        let d = Arc::new(DomainModel::unit_ball(2));
        Estimator::new(PairContext::with_chi(
            d,
            CxVector::basis(2, 0),
            ModelConstants::default(),
            1.0,
        ))
        .unwrap()
    }

    fn shell_est() -> Estimator {
        let d = Arc::new(DomainModel::shell(2, 4.0).unwrap());
        Estimator::new(PairContext::with_chi(
            d,
            CxVector::basis(2, 0),
            ModelConstants::default(),
            1.0,
        ))
        .unwrap()
    }

    #[test]
    fn segment_example() {
        let e = ball_est();
        let z = pt(&[(0.99, 0.0), (0.0, 0.0)]);
        let w = pt(&[(0.99, 0.0), (1e-4, 0.0)]);
        let r = e.upper_bound_segment(&z, &w).unwrap();
        let exact = ball_distance(&z, &w).unwrap();
        assert!(r.value <= r.cap.unwrap());
        assert!(r.value >= exact - 1e-6 * exact);
        assert_eq!(e.upper_bound_segment(&z, &z).unwrap().value, 0.0);
        let far = pt(&[(0.0, 0.0), (0.99, 0.0)]);
        assert!(matches!(
            e.upper_bound_segment(&z, &far),
            Err(Error::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn lift_respects_the_cap_on_the_ball() {
        let e = ball_est();
        let z = pt(&[(0.995, 0.0), (0.0, 0.0)]);
        let w = pt(&[(0.99, 0.05), (0.03, 0.0)]);
        let r = e.upper_bound_normal_lift(&z, &w).unwrap();
        let exact = ball_distance(&z, &w).unwrap();
        assert!(r.value >= exact);
        assert!(r.value <= r.cap.unwrap(), "{} > {}", r.value, r.cap.unwrap());
        assert_eq!(r.path.unwrap().vertices.len(), 4);
    }

    #[test]
    fn shell_lift_dominates_f() {
        let e = shell_est();
        assert_eq!(e.levi, LeviClass::NonSemipositive);
        let z = pt(&[(1.01, 0.0), (0.0, 0.0)]);
        let w = CxVector::from_slice(&[Cx::from_polar(1.01, 0.1), Cx::new(0.0, 0.0)]);
        let up = e.upper_bound_normal_lift(&z, &w).unwrap();
        let lo = e.lower_bound_f(&z, &w).unwrap();
        assert!(up.value.is_finite() && up.value >= lo.value);
        let m = e.upper_bound_model(&z, &w).unwrap();
        assert!(m.model && m.value.is_finite());
    }

    #[test]
    fn halflog_examples() {
        let e = ball_est();
        let z = pt(&[(0.5, 0.0), (0.0, 0.0)]);
        let w = pt(&[(0.6, 0.0), (0.0, 0.0)]);
        let r = e.lower_bound_halflog(&z, &w).unwrap();
        assert!(r.value <= ball_distance(&z, &w).unwrap());
        let z = pt(&[(0.9, 0.0), (0.0, 0.0)]);
        let w = pt(&[(-0.9, 0.0), (0.0, 0.0)]);
        assert!(e.lower_bound_halflog(&z, &w).unwrap().value <= 2.9444);
        assert_eq!(e.lower_bound_halflog(&z, &z).unwrap().value, 0.0);
        assert!(
            shell_est()
                .lower_bound_halflog(&pt(&[(1.01, 0.0), (0.0, 0.0)]), &pt(&[(1.02, 0.0), (0.0, 0.0)]))
                .unwrap()
                .heuristic
        );
    }

    #[test]
    fn f_examples() {
        let e = ball_est();
        let (a, b): (f64, f64) = (0.01, 0.05);
        let z = pt(&[(1.0 - a, 0.0), (0.0, 0.0)]);
        let w = pt(&[(1.0 - b, 0.0), (0.0, 0.0)]);
        let f = e.lower_bound_f(&z, &w).unwrap().value;
        assert!((f - ((a - b).abs() + (a.sqrt() - b.sqrt()).abs())).abs() < 1e-14);
        assert!(f <= ((1.0 - a).atanh() - (1.0 - b).atanh()).abs());
        assert_eq!(e.lower_bound_f(&z, &z).unwrap().value, 0.0);
    }

    #[test]
    fn shell_closed_integral() {
        let z = pt(&[(1.21, 0.0), (0.0, 0.0)]);
        let w = pt(&[(1.0, 0.0), (0.1, 0.0)]);
        let v = shell_integral_lower(&z, &w);
        let hand = (1.21f64 * 1.21 - 1.0).sqrt() - (1.01f64 - 1.0).sqrt() + (0.21f64 * 0.21 + 0.01).sqrt();
        assert!((v - hand).abs() < 1e-14);
    }
}
