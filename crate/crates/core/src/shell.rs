//! The shell `D_R = B(0,R) \ B̄(0,1)` near its inner (concave) boundary.
//!
//! Pairs are parametrized as `z = (1+ε₁, 0)` and
//! `w = (1+ε₂)(e^{iη} cos β, sin β, 0, …)`; curves between them as
//! `γ(t) = (1+ρ)(e^{iθ₁} cos α, ζ sin α)` with `|ζ| = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::geometry::DomainModel;
use crate::par::{map_slice, Execution};
use crate::quantities::{pair_record, ModelConstants, PairContext};
use crate::sampling::sample_rng;
use rand::Rng;

pub const CURVE_NODES: usize = 1024;
pub const DEFAULT_C0: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellPair {
    pub eps1: f64,
    pub eps2: f64,
    pub eta: f64,
    pub beta: f64,
    pub outer: f64,
    pub dim: usize,
}

impl ShellPair {
    pub fn new(eps1: f64, eps2: f64, eta: f64, beta: f64, outer: f64) -> Result<Self> {
        let sp = ShellPair {
            eps1,
            eps2,
            eta,
            beta,
            outer,
            dim: 2,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.dim = dim;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("shell pair: {m}")));
        if !(self.eps2 > 0.0 && self.eps1 >= self.eps2) {
            return bad("need ε₁ ≥ ε₂ > 0");
        }
        if !(self.eta > -PI && self.eta <= PI) {
            return bad("η must lie in (−π, π]");
        }
        if !(0.0..=PI / 2.0).contains(&self.beta) {
            return bad("β must lie in [0, π/2]");
        }
        if !(self.outer > 1.0) || 1.0 + self.eps1 >= self.outer {
            return bad("points must lie in the shell");
        }
        if self.dim < 2 {
            return bad("dimension must be at least 2");
        }
        Ok(())
    }

    pub fn z(&self) -> CxPoint {
        let mut z = CxVector::zeros(self.dim);
        z[0] = Cx::new(1.0 + self.eps1, 0.0);
        z
    }

    pub fn w(&self) -> CxPoint {
        let r = 1.0 + self.eps2;
        let mut w = CxVector::zeros(self.dim);
        w[0] = Cx::from_polar(r * self.beta.cos(), self.eta);
        w[1] = Cx::new(r * self.beta.sin(), 0.0);
        w
    }

    pub fn domain(&self) -> Result<DomainModel> {
        DomainModel::shell(self.dim, self.outer)
    }
}

/// `(z − w)_z = (1+ε₁) − (1+ε₂) e^{iη} cos β`.
pub fn shell_normal_component(sp: &ShellPair) -> Cx {
    Cx::new(1.0 + sp.eps1, 0.0) - Cx::from_polar((1.0 + sp.eps2) * sp.beta.cos(), sp.eta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub h: f64,
    pub h_r: f64,
    /// `β + min(√|η|, |η|/√ε₁)`.
    pub surrogate: f64,
    pub ratio: f64,
    /// `(ε₁−ε₂) + β² ≤ c₀|η|`.
    pub gate: bool,
    /// `|Re (z−w)_z| / ((ε₁−ε₂) + η² + β²)`.
    pub tag_re: f64,
    /// `|(z−w)_z| / ((ε₁−ε₂) + |η| + β²)`.
    pub tag_abs: f64,
}

fn shell_context(sp: &ShellPair) -> Result<PairContext> {
    let d = Arc::new(sp.domain()?);
    Ok(PairContext::with_chi(
        d,
        CxVector::basis(sp.dim, 0),
        ModelConstants::default(),
        1.0,
    ))
}

/// Exact `H_D` against the surrogate `β + min(√|η|, |η|/√ε₁)`.
pub fn shell_h_asymptotics(sp: &ShellPair, c0: f64) -> Result<AsymptoticsReport> {
    if !(c0 > 0.0 && c0 <= 1e-2) {
        return Err(Error::InvalidInput(format!("c₀ = {c0} must lie in (0, 1e-2]")));
    }
    let rec = pair_record(&shell_context(sp)?, &sp.z(), &sp.w())?;
    let e = sp.eta.abs();
    let surrogate = sp.beta + e.sqrt().min(e / sp.eps1.sqrt());
    let de = sp.eps1 - sp.eps2;
    let b2 = sp.beta * sp.beta;
    let xz = shell_normal_component(sp);
    Ok(AsymptoticsReport {
        h: rec.h,
        h_r: rec.h_r,
        surrogate,
        ratio: rec.h / surrogate,
        gate: de + b2 <= c0 * e,
        tag_re: xz.re.abs() / (de + e * e + b2),
        tag_abs: xz.norm() / (de + e + b2),
    })
}

/// A curve sampled on a uniform grid of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellCurve {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Unit vectors of `ℂ^{n−1}`.
    pub zeta: Vec<CxVector>,
}

impl ShellCurve {
    pub fn nodes(&self) -> usize {
        self.rho.len()
    }

    /// Checks the node invariants and the boundary conditions of `sp`.
    pub fn check(&self, sp: &ShellPair) -> Result<()> {
        let n = self.nodes();
        let bad = |m: String| Err(Error::ConstraintViolation(m));
        if n < 3 || self.theta.len() != n || self.alpha.len() != n || self.zeta.len() != n {
            return bad("node arrays differ in length or are too short".into());
        }
        if let Some(i) = self.rho.iter().position(|&r| !(r > 0.0)) {
            return bad(format!("ρ ≤ 0 at node {i}"));
        }
        if let Some(i) = self.zeta.iter().position(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return bad(format!("|ζ| ≠ 1 at node {i}"));
        }
        let tol = 1e-12;
        let ends = [
            (self.rho[0], sp.eps1, "ρ(0)"),
            (self.rho[n - 1], sp.eps2, "ρ(1)"),
            (self.theta[0], 0.0, "θ₁(0)"),
            (self.theta[n - 1], sp.eta, "θ₁(1)"),
            (self.alpha[0], 0.0, "α(0)"),
            (self.alpha[n - 1], sp.beta, "α(1)"),
        ];
        for (got, want, name) in ends {
            if (got - want).abs() > tol * want.abs().max(1.0) {
                return bad(format!("{name} = {got}, expected {want}"));
            }
        }
        if sp.beta > 0.0 {
            let last = &self.zeta[n - 1];
            if (last[0] - Cx::new(1.0, 0.0)).norm() > 1e-9 {
                return bad("ζ(1) must be the first basis vector".into());
            }
        }
        Ok(())
    }

    /// Point of the curve at node `i`.
    pub fn point(&self, i: usize) -> CxPoint {
        let r = 1.0 + self.rho[i];
        let mut p = CxVector::zeros(self.zeta[i].dim() + 1);
        p[0] = Cx::from_polar(r * self.alpha[i].cos(), self.theta[i]);
        for (j, z) in self.zeta[i].iter().enumerate() {
            p[j + 1] = z * (r * self.alpha[i].sin());
        }
        p
    }
}

/// Second-order differences `f(t+h) − f(t−h)` (one-sided at the ends),
/// still to be divided by `2h`.
fn derivative<T, F>(v: &[T], sub: F) -> Vec<T>
where
    T: Clone,
    F: Fn(&T, &T, f64) -> T,
{
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            // (−3f₀ + 4f₁ − f₂)/2h
            let a = sub(&v[1], &v[0], 4.0);
            let b = sub(&v[2], &v[0], 1.0);
            sub(&a, &b, 1.0)
        } else if i == n - 1 {
            let a = sub(&v[n - 1], &v[n - 2], 4.0);
            let b = sub(&v[n - 1], &v[n - 3], 1.0);
            sub(&a, &b, 1.0)
        } else {
            sub(&v[i + 1], &v[i - 1], 1.0)
        };
        out.push(d);
    }
    out
}

/// Trapezoid value of the integrated lower-bound integrand along `c`.
pub fn shell_curve_functional(c: &ShellCurve, sp: &ShellPair) -> Result<f64> {
    c.check(sp)?;
    let n = c.nodes();
    let h = 1.0 / (n - 1) as f64;
    let inv = 1.0 / (2.0 * h);
    let real = |a: &f64, b: &f64, s: f64| s * (a - b);
    let rho_d = derivative(&c.rho, real);
    let theta_d = derivative(&c.theta, real);
    let alpha_d = derivative(&c.alpha, real);
    let zeta_d = derivative(&c.zeta, |a: &CxVector, b: &CxVector, s: f64| &(a - b) * s);
    let mut acc = 0.0;
    for i in 0..n {
        let (rho, a) = (c.rho[i], c.alpha[i]);
        let (rp, tp, ap) = (rho_d[i] * inv, theta_d[i] * inv, alpha_d[i] * inv);
        let zp = &zeta_d[i] * inv;
        let (ca, sa) = (a.cos(), a.sin());
        let im = c.zeta[i].herm(&zp).im;
        let f = (tp * ca * ca - im * sa * sa).abs() / rho.sqrt()
            + (tp * ca).abs()
            + zp.norm() * sa.abs()
            + ap.abs()
            + rp.abs() / rho.sqrt();
        let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += wgt * f;
    }
    Ok(acc * h)
}

/// Knobs of the three-phase family: peak height, share of the tilt done
/// while rotating, share of the rotation done while rising.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveKnobs {
    pub peak: f64,
    pub tilt_share: f64,
    pub turn_share: f64,
}

fn smooth(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Rise to `peak` (turning by `turn_share · η`), turn the rest while tilting
/// by `tilt_share · β`, then descend to `ε₂` while finishing the tilt.
pub fn three_phase_curve(sp: &ShellPair, k: &CurveKnobs, nodes: usize) -> ShellCurve {
    let third = 1.0 / 3.0;
    let (lr0, lrp, lr1) = (sp.eps1.ln(), k.peak.ln(), sp.eps2.ln());
    let mut c = ShellCurve {
        rho: Vec::with_capacity(nodes),
        theta: Vec::with_capacity(nodes),
        alpha: Vec::with_capacity(nodes),
        zeta: Vec::with_capacity(nodes),
    };
    let m = sp.dim - 1;
    for i in 0..nodes {
        let t = i as f64 / (nodes - 1) as f64;
        let p1 = smooth(t / third);
        let p2 = smooth((t - third) / third);
        let p3 = smooth((t - 2.0 * third) / third);
        let lr = lr0 + (lrp - lr0) * p1 + (lr1 - lrp) * p3;
        c.rho.push(lr.exp());
        c.theta.push(sp.eta * (k.turn_share * p1 + (1.0 - k.turn_share) * p2));
        c.alpha.push(sp.beta * (k.tilt_share * p2 + (1.0 - k.tilt_share) * p3));
        c.zeta.push(CxVector::basis(m, 0));
    }
    let last = nodes - 1;
    c.rho[0] = sp.eps1;
    c.rho[last] = sp.eps2;
    c.theta[last] = sp.eta;
    c.alpha[last] = sp.beta;
    c
}

/// Adds `amp · sin(kπt)` bumps, which keep the boundary conditions.
fn perturb<R: Rng>(c: &ShellCurve, sp: &ShellPair, rng: &mut R, amp: f64) -> ShellCurve {
    let n = c.nodes();
    let mut out = c.clone();
    let kr = rng.random_range(1..=4) as f64;
    let kt = rng.random_range(1..=4) as f64;
    let ka = rng.random_range(1..=4) as f64;
    let kz = rng.random_range(1..=4) as f64;
    let (ar, at, aa, az) = (
        amp * rng.random_range(-1.0..1.0),
        amp * rng.random_range(-1.0..1.0),
        amp * rng.random_range(-1.0..1.0),
        amp * rng.random_range(-1.0..1.0),
    );
    for i in 1..n - 1 {
        let t = i as f64 / (n - 1) as f64;
        out.rho[i] *= (ar * (kr * PI * t).sin()).exp();
        out.theta[i] += at * sp.eta.abs().max(1e-12) * (kt * PI * t).sin();
        out.alpha[i] += aa * sp.beta.max(1e-12) * (ka * PI * t).sin();
        let phase = Cx::from_polar(1.0, az * (kz * PI * t).sin());
        out.zeta[i] = &out.zeta[i] * phase;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMinimum {
    pub value: f64,
    pub knobs: CurveKnobs,
    pub evaluated: usize,
}

const PEAKS: usize = 12;
const SHARES: [f64; 3] = [0.0, 0.5, 1.0];

/// Minimum of the functional over the three-phase family, followed by
/// `perturbations` random bump perturbations of the best curve.
pub fn minimize_curve(sp: &ShellPair, nodes: usize, perturbations: usize, seed: u64) -> Result<CurveMinimum> {
    let lo = sp.eps2;
    let hi = (sp.eps1.max(sp.eta.abs()).max(sp.beta * sp.beta) * 10.0).min(0.5 * (sp.outer - 1.0));
    let mut best: Option<(f64, CurveKnobs, ShellCurve)> = None;
    let mut evaluated = 0;
    for j in 0..PEAKS {
        let peak = lo * (hi / lo).max(1.0).powf(j as f64 / (PEAKS - 1) as f64);
        for &tilt_share in &SHARES {
            for &turn_share in &SHARES {
                let k = CurveKnobs {
                    peak,
                    tilt_share,
                    turn_share,
                };
                let c = three_phase_curve(sp, &k, nodes);
                let v = shell_curve_functional(&c, sp)?;
                evaluated += 1;
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, k, c));
                }
            }
        }
    }
    let (mut value, knobs, mut curve) = best.expect("nonempty family");
    let mut rng = sample_rng(seed, 0);
    let mut amp = 0.3;
    for _ in 0..perturbations {
        let cand = perturb(&curve, sp, &mut rng, amp);
        evaluated += 1;
        if let Ok(v) = shell_curve_functional(&cand, sp) {
            if v < value {
                value = v;
                curve = cand;
                continue;
            }
        }
        amp *= 0.97;
    }
    Ok(CurveMinimum {
        value,
        knobs,
        evaluated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub outer: f64,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta: Vec<f64>,
    pub c0: f64,
    /// Minimize the curve functional in every cell.
    pub curves: bool,
    pub perturbations: usize,
    /// Compute the model upper bound and `F_D` in every cell.
    pub bounds: bool,
    pub seed: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            outer: 4.0,
            eps: log_grid(1e-5, 1e-2, 4),
            eta: log_grid(1e-4, 1e-1, 4),
            beta: vec![0.0, 1e-3, 1e-2, 3e-2],
            c0: DEFAULT_C0,
            curves: true,
            perturbations: 32,
            bounds: true,
            seed: 7,
        }
    }
}

/// `n` points log-spaced from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub pair: ShellPair,
    pub report: AsymptoticsReport,
    pub curve_min: Option<f64>,
    /// Model upper bound (segment or lift) and its method.
    pub upper: Option<f64>,
    pub upper_method: Option<String>,
    pub f: Option<f64>,
    pub error: Option<String>,
}

/// Cells `(ε₁ ≥ ε₂, η, β)` of the grid.
pub fn scan_cells(p: &ScanParams) -> Result<Vec<ShellPair>> {
    let mut cells = Vec::new();
    for (i, &e1) in p.eps.iter().enumerate() {
        for &e2 in &p.eps[..=i] {
            for &eta in &p.eta {
                for &beta in &p.beta {
                    cells.push(ShellPair::new(e1.max(e2), e1.min(e2), eta, beta, p.outer)?);
                }
            }
        }
    }
    Ok(cells)
}

/// Evaluates every cell of the grid; cells are independent.
pub fn shell_scan(p: &ScanParams, exec: Execution) -> Result<Vec<ScanRow>> {
    let cells = scan_cells(p)?;
    let est = if p.bounds {
        let sp = cells.first().ok_or(Error::InvalidInput("empty scan grid".into()))?;
        Some(Estimator::new(shell_context(sp)?)?)
    } else {
        None
    };
    let rows = map_slice(exec, &cells, |sp| {
        let report = match shell_h_asymptotics(sp, p.c0) {
            Ok(r) => r,
            Err(e) => return Err(e),
        };
        let mut row = ScanRow {
            pair: *sp,
            report,
            curve_min: None,
            upper: None,
            upper_method: None,
            f: None,
            error: None,
        };
        if p.curves {
            let seed =
                p.seed ^ (sp.eps1.to_bits().rotate_left(7) ^ sp.eta.to_bits() ^ sp.beta.to_bits().rotate_left(13));
            match minimize_curve(sp, CURVE_NODES, p.perturbations, seed) {
                Ok(m) => row.curve_min = Some(m.value),
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        if let Some(est) = &est {
            let (z, w) = (sp.z(), sp.w());
            match est.upper_bound_model(&z, &w) {
                Ok(b) => {
                    row.upper = Some(b.value);
                    row.upper_method = Some(b.method);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if let Ok(f) = est.lower_bound_f(&z, &w) {
                row.f = Some(f.value);
            }
        }
        Ok(row)
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(e1: f64, e2: f64, eta: f64, beta: f64) -> ShellPair {
        ShellPair::new(e1, e2, eta, beta, 4.0).unwrap()
    }

    #[test]
    fn normal_component_examples() {
        let v = shell_normal_component(&sp(1e-14, 1e-14, 0.0, 0.2));
        assert!((v.re - 2.0 * 0.1f64.sin().powi(2)).abs() < 1e-12 && v.im.abs() < 1e-15);
        let v = shell_normal_component(&sp(1e-14, 1e-14, 0.1, 0.0));
        assert!((v.re - 2.0 * 0.05f64.sin().powi(2)).abs() < 1e-12);
        assert!((v.im + 0.1f64.sin()).abs() < 1e-12);
        assert_eq!(shell_normal_component(&sp(1e-3, 1e-3, 0.0, 0.0)), Cx::new(0.0, 0.0));
    }

    #[test]
    fn normal_component_matches_geometry() {
        let mut rng = sample_rng(3, 0);
        for _ in 0..2000 {
            let e1 = 10f64.powf(rng.random_range(-6.0..-1.0));
            let e2 = e1 * rng.random_range(0.01..1.0);
            let p = sp(e1, e2, rng.random_range(-3.0..3.0), rng.random_range(0.0..1.5));
            let d = p.domain().unwrap();
            let g = d.normal_component(&p.z(), &(&p.z() - &p.w())).unwrap();
            assert!((g - shell_normal_component(&p)).norm() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn asymptotics_example() {
        let r = shell_h_asymptotics(&sp(1e-4, 1e-4, 1e-3, 0.0), DEFAULT_C0).unwrap();
        assert!((r.surrogate - 1e-3f64.sqrt()).abs() < 1e-12);
        assert!(r.gate && r.ratio.is_finite() && r.ratio > 0.0);
        assert!(!shell_h_asymptotics(&sp(1e-3, 1e-4, 0.0, 0.0), DEFAULT_C0).unwrap().gate);
        assert!(shell_h_asymptotics(&sp(1e-3, 1e-4, 0.0, 0.0), 0.1).is_err());
    }

    fn straight(sp: &ShellPair) -> ShellCurve {
        three_phase_curve(
            sp,
            &CurveKnobs {
                peak: sp.eps1,
                tilt_share: 0.0,
                turn_share: 0.0,
            },
            CURVE_NODES,
        )
    }

    #[test]
    fn functional_examples() {
        let p = sp(1e-3, 1e-3, 0.0, 0.0);
        assert!(shell_curve_functional(&straight(&p), &p).unwrap() < 1e-12);

        let p = sp(4e-2, 1e-2, 0.0, 0.0);
        let n = CURVE_NODES;
        let c = ShellCurve {
            rho: (0..n).map(|i| 4e-2 - 3e-2 * i as f64 / (n - 1) as f64).collect(),
            theta: vec![0.0; n],
            alpha: vec![0.0; n],
            zeta: vec![CxVector::basis(1, 0); n],
        };
        let v = shell_curve_functional(&c, &p).unwrap();
        assert!((v - 2.0 * (0.2 - 0.1)).abs() < 1e-6, "{v}");

        let (eps, eta) = (1e-2, 0.05);
        let p = sp(eps, eps, eta, 0.0);
        let c = ShellCurve {
            rho: vec![eps; n],
            theta: (0..n).map(|i| eta * i as f64 / (n - 1) as f64).collect(),
            alpha: vec![0.0; n],
            zeta: vec![CxVector::basis(1, 0); n],
        };
        let v = shell_curve_functional(&c, &p).unwrap();
        assert!((v - (eta / eps.sqrt() + eta)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn functional_rejects_bad_curves() {
        let p = sp(1e-2, 1e-3, 0.1, 0.1);
        let mut c = straight(&p);
        c.zeta[5] = &c.zeta[5] * 2.0;
        assert!(matches!(
            shell_curve_functional(&c, &p),
            Err(Error::ConstraintViolation(_))
        ));
        let mut c = straight(&p);
        c.rho[3] = -1.0;
        assert!(matches!(
            shell_curve_functional(&c, &p),
            Err(Error::ConstraintViolation(_))
        ));
        let mut c = straight(&p);
        c.theta[CURVE_NODES - 1] = 0.0;
        assert!(shell_curve_functional(&c, &p).is_err());
    }

    #[test]
    fn family_endpoints_match_the_pair() {
        let p = sp(1e-2, 1e-3, 0.1, 0.05);
        let c = three_phase_curve(
            &p,
            &CurveKnobs {
                peak: 0.05,
                tilt_share: 0.5,
                turn_share: 0.5,
            },
            64,
        );
        assert!(c.point(0).distance(&p.z()) < 1e-15);
        assert!(c.point(63).distance(&p.w()) < 1e-15);
    }

    #[test]
    fn minimum_is_below_the_straight_curves() {
        let p = sp(1e-3, 1e-4, 0.02, 0.01);
        let m = minimize_curve(&p, 256, 16, 1).unwrap();
        let base = shell_curve_functional(
            &three_phase_curve(
                &p,
                &CurveKnobs {
                    peak: p.eps1,
                    tilt_share: 0.0,
                    turn_share: 0.0,
                },
                256,
            ),
            &p,
        )
        .unwrap();
        assert!(m.value <= base && m.value > 0.0);
        let h = shell_h_asymptotics(&p, DEFAULT_C0).unwrap().h;
        assert!(m.value / h > 1e-2 && m.value / h < 1e2);
    }

    #[test]
    fn small_scan() {
        let p = ScanParams {
            eps: vec![1e-4, 1e-3],
            eta: vec![1e-3, 1e-2],
            beta: vec![0.0, 1e-3],
            perturbations: 4,
            ..Default::default()
        };
        let rows = shell_scan(&p, Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 2);
        for r in &rows {
            assert!(r.report.h_r <= r.report.h);
            assert!(r.curve_min.unwrap() > 0.0);
            assert!(r.f.unwrap() <= r.upper.unwrap(), "{r:?}");
        }
    }
}
