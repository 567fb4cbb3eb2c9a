//! Infinitesimal metric models evaluated from boundary frames.

use std::fmt;
use std::sync::Arc;

use crate::cx::{CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryFrame, DomainModel};

/// Weight `ψ` of the Finsler models; `∫₀¹ |ψ(x)|/x dx` must be finite.
#[derive(Clone)]
pub enum PsiSpec {
    Zero,
    /// `ψ(x) = coefficient · x^exponent`, `exponent > 0`.
    Power {
        coefficient: f64,
        exponent: f64,
    },
    /// A user function with its normal integral `∫₀¹ ψ(x)/x dx`.
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        integral: f64,
    },
}

impl fmt::Debug for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSpec::Zero => write!(f, "Zero"),
            PsiSpec::Power { coefficient, exponent } => {
                write!(f, "Power({coefficient}·x^{exponent})")
            }
            PsiSpec::Custom { integral, .. } => write!(f, "Custom(∫={integral})"),
        }
    }
}

impl PsiSpec {
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        let p = PsiSpec::Power { coefficient, exponent };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PsiSpec::Zero => Ok(()),
            PsiSpec::Power { coefficient, exponent } => {
                if !(*exponent > 0.0) {
                    return Err(Error::InvalidPsi(format!(
                        "x^{exponent}/x is not integrable at 0; the exponent must be positive"
                    )));
                }
                if !(coefficient.is_finite() && *coefficient > -1.0) {
                    return Err(Error::InvalidPsi(format!(
                        "coefficient {coefficient} must be finite and > −1 so that 1 + ψ stays positive"
                    )));
                }
                Ok(())
            }
            PsiSpec::Custom { integral, .. } => {
                if integral.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPsi("custom ψ needs a finite normal integral".into()))
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PsiSpec::Zero => 0.0,
            PsiSpec::Power { coefficient, exponent } => coefficient * x.powf(*exponent),
            PsiSpec::Custom { f, .. } => f(x),
        }
    }

    /// `∫₀¹ ψ(x)/x dx`.
    pub fn normal_integral(&self) -> f64 {
        match self {
            PsiSpec::Zero => 0.0,
            PsiSpec::Power { coefficient, exponent } => coefficient / exponent,
            PsiSpec::Custom { integral, .. } => *integral,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

#[derive(Clone, Debug)]
pub enum MetricKind {
    /// Exact metric of the ball of radius `radius` tangent to ∂D at `π(u)`;
    /// an upper bound for `κ_D` when that ball lies in D.
    KappaUpperInscribed { radius: f64 },
    /// `1/δ_D(u; X)`.
    KappaUpperDisc,
    /// Square root of either side of the two-sided strongly pseudoconvex
    /// estimate with constant `c`, each branch as displayed.
    BbModel { c: f64, branch: Branch },
    /// `C (|X_u|/√δ + |X|)`.
    DntUpper { c: f64 },
    /// `c (|X_u|/√δ + |X|)`.
    DntLower { c: f64 },
    /// `(1+ψ(δ)) |X_u|/(2δ) + C|X|/√δ`.
    FinslerF { psi: PsiSpec, c: f64 },
    /// `max{(1+ψ(δ)) |X_u|/(2δ), C|X|/√δ}`.
    FinslerG { psi: PsiSpec, c: f64 },
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::KappaUpperInscribed { .. } => "kappa-upper-inscribed",
            MetricKind::KappaUpperDisc => "kappa-upper-disc",
            MetricKind::BbModel {
                branch: Branch::Upper, ..
            } => "bb-model-upper",
            MetricKind::BbModel {
                branch: Branch::Lower, ..
            } => "bb-model-lower",
            MetricKind::DntUpper { .. } => "dnt-upper",
            MetricKind::DntLower { .. } => "dnt-lower",
            MetricKind::FinslerF { .. } => "finsler-F",
            MetricKind::FinslerG { .. } => "finsler-G",
        }
    }
}

/// A Finsler (pseudo)metric on a domain.
#[derive(Clone, Debug)]
pub struct MetricModel {
    pub domain: Arc<DomainModel>,
    pub kind: MetricKind,
}

/// Inscribed-ball metric from `δ`, `|X_u|`, `|X|` and the ball radius.
/// Past depth `r` the ball of radius `δ` about the point, also tangent at
/// the foot, is used instead.
pub fn inscribed_ball_metric(delta: f64, xu: f64, x: f64, r: f64) -> f64 {
    let r = r.max(delta);
    let m = delta * (2.0 * r - delta);
    let t = (r - delta) * xu / m;
    (x * x / m + t * t).sqrt()
}

impl MetricModel {
    pub fn new(domain: Arc<DomainModel>, kind: MetricKind) -> Result<Self> {
        match &kind {
            MetricKind::FinslerF { psi, c } | MetricKind::FinslerG { psi, c } => {
                psi.validate()?;
                positive(*c, "C")?;
            }
            MetricKind::BbModel { c, .. } | MetricKind::DntUpper { c } | MetricKind::DntLower { c } => {
                positive(*c, "constant")?
            }
            MetricKind::KappaUpperInscribed { radius } => positive(*radius, "radius")?,
            MetricKind::KappaUpperDisc => {}
        }
        Ok(MetricModel { domain, kind })
    }

    /// Inscribed-ball upper metric using the domain's inscribed radius near
    /// `anchor`.
    pub fn kappa_upper(domain: Arc<DomainModel>, anchor: &CxPoint) -> Result<Self> {
        let radius = domain.inscribed_radius_near(anchor)?;
        Self::new(domain, MetricKind::KappaUpperInscribed { radius })
    }

    pub fn eval(&self, z: &CxPoint, x: &CxVector) -> Result<f64> {
        if let MetricKind::KappaUpperDisc = self.kind {
            if x.norm() == 0.0 {
                return Ok(0.0);
            }
            return Ok(1.0 / self.domain.directional_distance(z, x)?.value);
        }
        let frame = self.domain.boundary_frame(z)?;
        if matches!(self.kind, MetricKind::KappaUpperInscribed { .. }) {
            // Any nearest point gives a valid tangent ball.
            return Ok(self.eval_in_frame(&frame, x));
        }
        if !frame.unique {
            return Err(Error::AmbiguousProjection);
        }
        Ok(self.eval_in_frame(&frame, x))
    }

    /// Evaluates with a precomputed frame (not for [`MetricKind::KappaUpperDisc`]).
    pub fn eval_in_frame(&self, frame: &BoundaryFrame, x: &CxVector) -> f64 {
        let delta = frame.delta;
        let xu = x.herm(&frame.normal).norm();
        let xn = x.norm();
        match &self.kind {
            MetricKind::KappaUpperInscribed { radius } => inscribed_ball_metric(delta, xu, xn, *radius),
            MetricKind::KappaUpperDisc => unreachable!("disc metric needs the domain"),
            MetricKind::BbModel { c, branch } => {
                let sd = delta.sqrt();
                let v = match branch {
                    Branch::Upper => (1.0 + c * sd).powi(2) * xu * xu / (4.0 * delta) + c * xn * xn / delta,
                    Branch::Lower => (1.0 - c * sd).powi(2) * xu * xu / (4.0 * delta * delta) + xn * xn / (c * delta),
                };
                v.sqrt()
            }
            MetricKind::DntUpper { c } | MetricKind::DntLower { c } => c * (xu / delta.sqrt() + xn),
            MetricKind::FinslerF { psi, c } => (1.0 + psi.eval(delta)) * xu / (2.0 * delta) + c * xn / delta.sqrt(),
            MetricKind::FinslerG { psi, c } => {
                ((1.0 + psi.eval(delta)) * xu / (2.0 * delta)).max(c * xn / delta.sqrt())
            }
        }
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive, got {v}")))
    }
}
