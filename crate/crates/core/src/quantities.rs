//! Pair quantities `B_D, A_D, Â_D, A_{D,p}, H_D, H_D^r, F_D` and their
//! comparison relations.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::Result;
use crate::geometry::DomainModel;

/// Absolute constants hidden in `≲`, `≳` and `o(1)` terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Multiplier of `F_D` in the lower bound.
    pub c_low: f64,
    /// Lower-model constant for the non-semipositive metric.
    pub dnt_c: f64,
    /// Upper-model constant for the non-semipositive metric.
    pub dnt_upper: f64,
    /// Constant of the strongly pseudoconvex two-sided metric model.
    pub bb_c: f64,
    /// `c` and `C` of `log(1 + cA) ≤ k ≤ log(1 + CA)`.
    pub thm_c: f64,
    pub thm_upper: f64,
    /// `C_0` of the smooth-point upper bound.
    pub c0_smooth: f64,
    /// Gate constant `c_0` of the shell asymptotics.
    pub shell_c0: f64,
    /// Replacement for `χ_{D,p}` when it vanishes.
    pub chi_eps: f64,
    /// Relative slack on the factor 2 of `A_D(w,z) ≤ 2 A_D(z,w)`.
    pub slack_a: f64,
    /// Relative slack on the structural factor 6 for `H_D` symmetry.
    pub slack_h: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            c_low: 1.0,
            dnt_c: 1.0,
            dnt_upper: 1.0,
            bb_c: 1.0,
            thm_c: 1.0,
            thm_upper: 1.0,
            c0_smooth: 1.0,
            shell_c0: 1e-2,
            chi_eps: 1e-3,
            slack_a: 0.1,
            slack_h: 0.1,
        }
    }
}

/// Shared inputs for pair evaluation near a boundary point `p`.
#[derive(Clone, Debug)]
pub struct PairContext {
    pub domain: Arc<DomainModel>,
    pub anchor: CxPoint,
    /// `χ_{D,p}` as used in `A_{D,p}` (already replaced by `chi_eps` if zero).
    pub chi: f64,
    pub constants: ModelConstants,
}

impl PairContext {
    /// Estimates `χ_{D,p}` by boundary sampling within the collar.
    pub fn new(domain: Arc<DomainModel>, anchor: CxPoint, constants: ModelConstants) -> Result<Self> {
        let h = domain.collar;
        let chi = domain.chi_constant(&anchor, h)?.value;
        Ok(Self::with_chi(domain, anchor, constants, chi))
    }

    pub fn with_chi(domain: Arc<DomainModel>, anchor: CxPoint, constants: ModelConstants, chi: f64) -> Self {
        let chi = if chi > 0.0 { chi } else { constants.chi_eps };
        PairContext {
            domain,
            anchor,
            chi,
            constants,
        }
    }

    pub fn pair(&self, z: &CxPoint, w: &CxPoint) -> Result<PairRecord> {
        pair_record(self, z, w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimRegime {
    /// `2B_D ≤ √(δ_z δ_w)`.
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcaveRegime {
    /// `2B_D ≤ δ_z`.
    A,
    B,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundFormulas {
    /// `log(1 + c A_D)`.
    pub lower: f64,
    /// `log(1 + C A_D)`.
    pub upper: f64,
    /// `log(1 + C_0 A_{D,p})`.
    pub smooth_upper: f64,
    /// `log(1 + A_D) − C`, clamped at 0.
    pub bb_lower: f64,
    /// `log(1 + A_D) + C`.
    pub bb_upper: f64,
}

/// All per-pair quantities, computed in the frame of the first point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub z: CxPoint,
    pub w: CxPoint,
    pub delta_z: f64,
    pub delta_w: f64,
    /// `X = z − w`.
    pub x: CxVector,
    pub x_z: Cx,
    pub x_w: Cx,
    pub b: f64,
    pub a: f64,
    pub a_hat: f64,
    pub a_p: f64,
    pub h: f64,
    pub h_r: f64,
    pub f: f64,
    pub chi: f64,
    pub claim: ClaimRegime,
    pub concave: ConcaveRegime,
    pub bounds: BoundFormulas,
}

impl PairRecord {
    pub fn is_degenerate(&self) -> bool {
        self.x.norm() == 0.0
    }
}

/// `t / (√t + c) + |X|` shape shared by `H_D` and `H_D^r`.
fn h_form(t: f64, x: f64, delta: f64) -> f64 {
    let den = t.sqrt() + x + delta.sqrt();
    if den == 0.0 {
        0.0
    } else {
        t / den + x
    }
}

/// Evaluates every quantity from the frames at `z` and `w`.
pub fn pair_record(ctx: &PairContext, z: &CxPoint, w: &CxPoint) -> Result<PairRecord> {
    let d = &ctx.domain;
    let fz = d.unique_frame(z)?;
    let fw = d.unique_frame(w)?;
    let x = z - w;
    let (dz, dw) = (fz.delta, fw.delta);
    let chi = ctx.chi;
    let xn = x.norm();
    let x_z = x.herm(&fz.normal);
    let x_w = x.herm(&fw.normal);
    let claim_regime;
    let concave_regime;
    let (b, a, a_hat, a_p, h, h_r, f);
    if xn == 0.0 {
        (b, a, a_hat, a_p, h, h_r, f) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        claim_regime = ClaimRegime::A;
        concave_regime = ConcaveRegime::A;
    } else {
        let xz = x_z.norm();
        let g = (dz * dw).sqrt();
        b = xz + xn * xn + xn * dz.sqrt();
        a = b / g;
        a_hat = xz / dz + xn / dz.sqrt();
        a_p = (xz + chi * xn * xn + xn * (chi * dz).sqrt()) / g;
        h = h_form(xz, xn, dz);
        h_r = h_form(x_z.re.abs(), xn, dz);
        f = xn + (dz.sqrt() - dw.sqrt()).abs();
        claim_regime = if 2.0 * b <= g { ClaimRegime::A } else { ClaimRegime::B };
        concave_regime = if 2.0 * b <= dz {
            ConcaveRegime::A
        } else {
            ConcaveRegime::B
        };
    }
    let k = &ctx.constants;
    let mut rec = PairRecord {
        z: z.clone(),
        w: w.clone(),
        delta_z: dz,
        delta_w: dw,
        x,
        x_z,
        x_w,
        b,
        a,
        a_hat,
        a_p,
        h,
        h_r,
        f,
        chi,
        claim: claim_regime,
        concave: concave_regime,
        bounds: BoundFormulas::default(),
    };
    rec.bounds = bound_formulas(&rec, k.thm_c, k.thm_upper, k.c0_smooth, k.bb_c);
    Ok(rec)
}

pub fn bound_formulas(rec: &PairRecord, c: f64, big_c: f64, c0: f64, bb_c: f64) -> BoundFormulas {
    let l = (rec.a).ln_1p();
    BoundFormulas {
        lower: (c * rec.a).ln_1p(),
        upper: (big_c * rec.a).ln_1p(),
        smooth_upper: (c0 * rec.a_p).ln_1p(),
        bb_lower: (l - bb_c).max(0.0),
        bb_upper: l + bb_c,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `A_D(w,z) / A_D(z,w)`.
    pub a_ratio: f64,
    /// `H_D(w,z) / H_D(z,w)`.
    pub h_ratio: f64,
    pub a_threshold: f64,
    pub h_threshold: f64,
    pub a_pass: bool,
    pub h_pass: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Compares a record with its swapped counterpart.
pub fn quasi_symmetry_check(zw: &PairRecord, wz: &PairRecord, k: &ModelConstants) -> SymmetryReport {
    let a_ratio = ratio(wz.a, zw.a);
    let h_ratio = ratio(wz.h, zw.h);
    let a_threshold = 2.0 * (1.0 + k.slack_a);
    let h_threshold = 6.0 * (1.0 + k.slack_h);
    SymmetryReport {
        a_ratio,
        h_ratio,
        a_threshold,
        h_threshold,
        a_pass: a_ratio <= a_threshold,
        h_pass: h_ratio <= h_threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdHrReport {
    /// `H_D^r ≤ H_D` held.
    pub hr_le_h: bool,
    pub f_over_hr: f64,
    pub hr_over_f: f64,
    /// The constant `C = max(2, χ)` and the structural factors it gives.
    pub c: f64,
    pub f_factor: f64,
    pub hr_factor: f64,
    pub f_within: bool,
    pub hr_within: bool,
}

/// `F_D ≤ max{2, C²+1} H_D^r` and `H_D^r ≤ C(C+1) F_D` with `C = max(2, χ)`.
pub fn fd_hr_hd_relation(rec: &PairRecord, chi: f64) -> FdHrReport {
    let c = chi.max(2.0);
    let f_factor = (c * c + 1.0).max(2.0);
    let hr_factor = c * (c + 1.0);
    let f_over_hr = ratio(rec.f, rec.h_r);
    let hr_over_f = ratio(rec.h_r, rec.f);
    FdHrReport {
        hr_le_h: rec.h_r <= rec.h,
        f_over_hr,
        hr_over_f,
        c,
        f_factor,
        hr_factor,
        f_within: f_over_hr <= f_factor,
        hr_within: hr_over_f <= hr_factor,
    }
}

/// Smooth positive weight `h = 1 + ½ b` with `b = ½(1 + cos 3 Re z_1)`.
fn bump(z: &CxPoint) -> (f64, f64) {
    let t = 3.0 * z[0].re;
    let h = 1.0 + 0.25 * (1.0 + t.cos());
    let dh_dx1 = -0.75 * t.sin();
    (h, dh_dx1)
}

/// `A_D` recomputed from the defining function `s = r_D · h`: `√δ` becomes
/// `√(−s)` and the normal becomes `−∇s/|∇s|` at the point itself.
pub fn a_from_defining_function(d: &DomainModel, z: &CxPoint, w: &CxPoint) -> Result<f64> {
    let fz = d.unique_frame(z)?;
    let fw = d.unique_frame(w)?;
    let x = z - w;
    if x.norm() == 0.0 {
        return Ok(0.0);
    }
    let (hz, dhz) = bump(z);
    let (hw, _) = bump(w);
    let sz = fz.delta * hz;
    let sw = fw.delta * hw;
    // ∇s = h ∇r + r ∇h with ∇r = −n and r = −δ.
    let mut grad = &fz.normal * (-hz);
    grad[0] += Cx::new(-fz.delta * dhz, 0.0);
    let n_s = &grad * (-1.0 / grad.norm());
    let xz = x.herm(&n_s).norm();
    let xn = x.norm();
    let b = xz + xn * xn + xn * sz.sqrt();
    Ok(b / (sz * sw).sqrt())
}

/// `A_D(z,w) / A_{f(D)}(f(z), f(w))` for `f(z) = Mz + b`.
pub fn affine_ratio(
    ctx: &PairContext,
    image: &PairContext,
    m: &DMatrix<Cx>,
    shift: &CxVector,
    z: &CxPoint,
    w: &CxPoint,
) -> Result<f64> {
    let map = |p: &CxPoint| -> CxPoint {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * p[j]).sum::<Cx>() + shift[i])
            .collect()
    };
    let a = pair_record(ctx, z, w)?.a;
    let ai = pair_record(image, &map(z), &map(w))?.a;
    Ok(ratio(a, ai))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderReport {
    /// `|r(x) − r(y) − ∇r(x)·(x − y)|`.
    pub remainder: f64,
    /// `|x − y|² − (r(x) − r(y))²`.
    pub base: f64,
    pub ratio: f64,
}

/// Second-order remainder of the signed distance `r_D` at `x` against the
/// tangential part of `x − y`.
pub fn second_order_remainder(d: &DomainModel, x: &CxPoint, y: &CxPoint) -> Result<SecondOrderReport> {
    let px = d.project(x)?;
    let rx = if px.inside { -px.distance } else { px.distance };
    let ry = d.signed_distance(y)?;
    // ∇r(x) = −n at the foot, on both sides of the boundary.
    let n = d.normal_at(&px.foot);
    let v = x - y;
    let remainder = (rx - ry + n.dot_real(&v)).abs();
    let base = v.norm_sqr() - (rx - ry).powi(2);
    Ok(SecondOrderReport {
        remainder,
        base,
        ratio: ratio(remainder, base),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainModel;

    fn pt(v: &[(f64, f64)]) -> CxPoint {
        v.iter().map(|&(a, b)| Cx::new(a, b)).collect()
    }

    fn ball_ctx() -> PairContext {
        PairContext::with_chi(
            Arc::new(DomainModel::unit_ball(2)),
            CxVector::basis(2, 0),
            ModelConstants::default(),
            1.0,
        )
    }

    // Direct transcription of the definitions for a pair on the e1 axis of
    // the unit ball, where π and n are known by hand.
    fn oracle_b(z: (f64, f64), w: (f64, f64)) -> f64 {
        let dz = 1.0 - (z.0 * z.0 + z.1 * z.1).sqrt();
        let x = ((z.0 - w.0).powi(2) + (z.1 - w.1).powi(2)).sqrt();
        // n = −e1 for z on the positive real axis.
        let xz = (z.0 - w.0).abs();
        xz + x * x + x * dz.sqrt()
    }

    #[test]
    fn tangential_example() {
        let ctx = ball_ctx();
        let r = ctx
            .pair(&pt(&[(0.9, 0.0), (0.0, 0.0)]), &pt(&[(0.9, 0.0), (0.1, 0.0)]))
            .unwrap();
        assert!(r.x_z.norm() < 1e-15);
        assert!((r.delta_z - 0.1).abs() < 1e-15);
        assert!((r.b - (0.01 + 0.1 * 0.1f64.sqrt())).abs() < 1e-12);
        assert!((r.b - 0.0416228).abs() < 1e-7);
    }

    #[test]
    fn radial_example() {
        let ctx = ball_ctx();
        let r = ctx
            .pair(&pt(&[(0.99, 0.0), (0.0, 0.0)]), &pt(&[(0.98, 0.0), (0.0, 0.0)]))
            .unwrap();
        assert!((r.x_z.norm() - 0.01).abs() < 1e-12);
        let b = oracle_b((0.99, 0.0), (0.98, 0.0));
        assert!((r.b - b).abs() < 1e-14);
        // 0.01 + 0.0001 + 0.01·0.1
        assert!((r.b - 0.0111).abs() < 1e-12);
        assert!((r.a - 0.0111 / (0.01f64 * 0.02).sqrt()).abs() < 1e-9);
        assert_eq!(r.claim, ClaimRegime::B);
    }

    #[test]
    fn equal_points_give_zeros() {
        let ctx = ball_ctx();
        let z = pt(&[(0.9, 0.1), (0.2, 0.0)]);
        let r = ctx.pair(&z, &z).unwrap();
        for v in [r.a, r.b, r.a_hat, r.a_p, r.h, r.h_r, r.f] {
            assert_eq!(v, 0.0);
        }
        let s = quasi_symmetry_check(&r, &r, &ctx.constants);
        assert_eq!((s.a_ratio, s.h_ratio), (1.0, 1.0));
        let f = fd_hr_hd_relation(&r, 1.0);
        assert_eq!((f.f_over_hr, f.hr_over_f), (1.0, 1.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn bound_formula_examples() {
        let ctx = ball_ctx();
        let z = pt(&[(0.9, 0.1), (0.2, 0.0)]);
        let mut r = ctx.pair(&z, &z).unwrap();
        let b = bound_formulas(&r, 1.0, 1.0, 1.0, 1.0);
        assert_eq!((b.lower, b.upper, b.smooth_upper), (0.0, 0.0, 0.0));
        r.a = 1.0;
        let b = bound_formulas(&r, 1.0, 1.0, 1.0, 1.0);
        assert!((b.lower - 2f64.ln()).abs() < 1e-15);
        assert!((b.upper - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn symmetric_tangential_pair_has_ratio_near_one() {
        let ctx = ball_ctx();
        let delta = 1e-6;
        let t: f64 = 1e-4;
        let r0 = 1.0 - delta;
        let z = pt(&[(r0 * t.cos(), 0.0), (r0 * t.sin(), 0.0)]);
        let w = pt(&[(r0 * t.cos(), 0.0), (-r0 * t.sin(), 0.0)]);
        let zw = ctx.pair(&z, &w).unwrap();
        let wz = ctx.pair(&w, &z).unwrap();
        let s = quasi_symmetry_check(&zw, &wz, &ctx.constants);
        assert!((s.a_ratio - 1.0).abs() < 1e-6);
        assert!(s.a_pass && s.h_pass);
    }

    #[test]
    fn radial_pair_f_versus_hr() {
        let ctx = ball_ctx();
        let (a, b) = (0.01, 0.04);
        let r = ctx
            .pair(&pt(&[(1.0 - a, 0.0), (0.0, 0.0)]), &pt(&[(1.0 - b, 0.0), (0.0, 0.0)]))
            .unwrap();
        assert!((r.x_z.re.abs() - r.x.norm()).abs() < 1e-15);
        let f = fd_hr_hd_relation(&r, 1.0);
        assert!(f.hr_le_h && f.f_within && f.hr_within);
    }

    #[test]
    fn bump_defining_function_is_comparable() {
        let d = DomainModel::unit_ball(2);
        let z = pt(&[(0.95, 0.0), (0.1, 0.0)]);
        let w = pt(&[(0.9, 0.05), (0.15, 0.0)]);
        let a = pair_record(&ball_ctx(), &z, &w).unwrap().a;
        let s = a_from_defining_function(&d, &z, &w).unwrap();
        assert!(s / a > 0.3 && s / a < 3.0);
    }

    #[test]
    fn second_order_on_the_ball() {
        let d = DomainModel::unit_ball(2);
        // Same depth, tangential offset: remainder is (1 − cos φ)·|x| exactly.
        let phi: f64 = 0.05;
        let x = pt(&[(0.95, 0.0), (0.0, 0.0)]);
        let y = pt(&[(0.95 * phi.cos(), 0.0), (0.95 * phi.sin(), 0.0)]);
        let s = second_order_remainder(&d, &x, &y).unwrap();
        assert!((s.remainder - 0.95 * (1.0 - phi.cos())).abs() < 1e-14);
        assert!((s.ratio - 0.5 / 0.95).abs() < 1e-3);
        // Radial offset: r is affine along the ray.
        let y = pt(&[(0.9, 0.0), (0.0, 0.0)]);
        let s = second_order_remainder(&d, &x, &y).unwrap();
        assert!(s.remainder < 1e-15 && s.base.abs() < 1e-15);
    }
}
