//! Nearest-point projection onto ∂D, signed distance and boundary frames.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::defining::{fd_real_hessian, DefiningFunction, Ellipsoid};
use super::domain::{Closed, DomainModel};
use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};

/// Nearest boundary point of an arbitrary point `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub foot: CxPoint,
    /// Unsigned distance `|x − foot|`.
    pub distance: f64,
    pub inside: bool,
    pub unique: bool,
}

/// `(π(z), n_{π(z)}, δ_D(z))` for an interior point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFrame {
    pub foot: CxPoint,
    /// Inner unit normal at the foot.
    pub normal: CxVector,
    pub delta: f64,
    pub unique: bool,
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

impl DomainModel {
    /// Inner unit normal `−∇s/|∇s|` at a boundary point.
    pub fn normal_at(&self, p: &CxPoint) -> CxVector {
        let g = self.function.gradient(p);
        let n = g.norm();
        &g * (-1.0 / n)
    }

    pub fn project(&self, x: &CxPoint) -> Result<Projection> {
        if x.dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, domain has {}",
                x.dim(),
                self.dim
            )));
        }
        match &self.closed {
            Closed::Ball { radius } => Ok(project_sphere(x, *radius, true)),
            Closed::Shell { outer } => Ok(project_shell(x, *outer)),
            Closed::Ellipsoid(e) => Ok(project_ellipsoid(e, x)),
            Closed::None => {
                let p = newton_project(self.function.as_ref(), x, self.bounding_radius)?;
                if p.distance > self.frame_limit {
                    return Err(Error::OutsideCollar {
                        depth: p.distance,
                        collar: self.frame_limit,
                    });
                }
                Ok(p)
            }
        }
    }

    /// Generic Newton projection, ignoring any closed form. Used to cross-check
    /// the built-ins.
    pub fn project_numerically(&self, x: &CxPoint) -> Result<Projection> {
        newton_project(self.function.as_ref(), x, self.bounding_radius)
    }

    /// `r_D(x)`: `−δ_D(x)` inside, `+δ_D(x)` outside.
    pub fn signed_distance(&self, x: &CxPoint) -> Result<f64> {
        let p = self.project(x)?;
        Ok(if p.inside { -p.distance } else { p.distance })
    }

    /// `δ_D(z)` for `z ∈ D`.
    pub fn depth(&self, z: &CxPoint) -> Result<f64> {
        Ok(self.boundary_frame(z)?.delta)
    }

    /// Frame at an interior point; the uniqueness flag may be false.
    pub fn boundary_frame(&self, z: &CxPoint) -> Result<BoundaryFrame> {
        let value = self.value(z);
        if !(value < 0.0) {
            return Err(Error::NotInDomain { value });
        }
        let p = self.project(z)?;
        if p.distance > self.frame_limit {
            return Err(Error::OutsideCollar {
                depth: p.distance,
                collar: self.frame_limit,
            });
        }
        let normal = self.normal_at(&p.foot);
        Ok(BoundaryFrame {
            foot: p.foot,
            normal,
            delta: p.distance,
            unique: p.unique,
        })
    }

    /// Frame at an interior point with a unique nearest boundary point.
    pub fn unique_frame(&self, z: &CxPoint) -> Result<BoundaryFrame> {
        let f = self.boundary_frame(z)?;
        if !f.unique {
            return Err(Error::AmbiguousProjection);
        }
        Ok(f)
    }

    /// `X_z = ⟨X, n_{π(z)}⟩`.
    pub fn normal_component(&self, z: &CxPoint, x: &CxVector) -> Result<Cx> {
        Ok(x.herm(&self.unique_frame(z)?.normal))
    }
}

fn project_sphere(x: &CxPoint, radius: f64, ball: bool) -> Projection {
    let r = x.norm();
    if r == 0.0 {
        return Projection {
            foot: CxVector::basis(x.dim(), 0) * radius,
            distance: radius,
            inside: ball,
            unique: false,
        };
    }
    Projection {
        foot: x * (radius / r),
        distance: (r - radius).abs(),
        inside: if ball { r < radius } else { r > radius },
        unique: true,
    }
}

fn project_shell(x: &CxPoint, outer: f64) -> Projection {
    let r = x.norm();
    let mid = 0.5 * (1.0 + outer);
    let inner = r < mid;
    let mut p = if inner {
        project_sphere(x, 1.0, false)
    } else {
        project_sphere(x, outer, true)
    };
    p.inside = r > 1.0 && r < outer;
    if (r - mid).abs() <= 1e-12 * outer {
        p.unique = false;
    }
    p
}

/// Exact projection onto a Hermitian ellipsoid via the secular equation
/// `Σ |y_j|² a_j² / (a_j² + t)² = 1` in principal coordinates.
fn project_ellipsoid(e: &Ellipsoid, x: &CxPoint) -> Projection {
    let y = e.to_principal(x);
    let a2: Vec<f64> = e.axes.iter().map(|a| a * a).collect();
    let ys: Vec<f64> = y.iter().map(|c| c.norm_sqr()).collect();
    let s: f64 = ys.iter().zip(&a2).map(|(v, a)| v / a).sum::<f64>() - 1.0;
    let inside = s < 0.0;
    let scale = e.max_axis();

    let g = |t: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut d = 0.0;
        for (yj, aj) in ys.iter().zip(&a2) {
            let q = aj + t;
            v += yj * aj / (q * q);
            d -= 2.0 * yj * aj / (q * q * q);
        }
        (v, d)
    };

    let amin2 = a2.iter().copied().fold(f64::INFINITY, f64::min);
    let min_group_zero = ys
        .iter()
        .zip(&a2)
        .filter(|(_, a)| (**a - amin2).abs() <= 1e-14 * amin2)
        .all(|(v, _)| v.sqrt() <= 1e-13 * scale);

    if s == 0.0 {
        return Projection {
            foot: x.clone(),
            distance: 0.0,
            inside: false,
            unique: true,
        };
    }

    if inside && min_group_zero {
        // Root at the pole t = −a_min² when g stays negative there: the
        // min-axis components of the foot are then free.
        let rest: f64 = ys
            .iter()
            .zip(&a2)
            .filter(|(_, a)| (**a - amin2).abs() > 1e-14 * amin2)
            .map(|(v, a)| v * a / ((a - amin2) * (a - amin2)))
            .sum::<f64>()
            - 1.0;
        if rest <= 0.0 {
            let mut foot_p = CxVector::zeros(y.dim());
            let mut fill = 0.0;
            let mut first_min = None;
            for j in 0..y.dim() {
                if (a2[j] - amin2).abs() <= 1e-14 * amin2 {
                    first_min.get_or_insert(j);
                } else {
                    foot_p[j] = y[j] * (a2[j] / (a2[j] - amin2));
                    fill += foot_p[j].norm_sqr() / a2[j];
                }
            }
            let j = first_min.expect("a min axis exists");
            foot_p[j] = Cx::new((amin2 * (1.0 - fill).max(0.0)).sqrt(), 0.0);
            let foot = e.from_principal(&foot_p);
            let distance = foot.distance(x);
            return Projection {
                foot,
                distance,
                inside,
                unique: false,
            };
        }
    }

    let (mut lo, mut hi) = if inside { (-amin2, 0.0) } else { (0.0, scale * y.norm()) };
    let mut t = if inside { 0.0 } else { hi };
    for _ in 0..200 {
        let (v, d) = g(t);
        if v > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - v / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-17 * (amin2 + t.abs()) || hi - lo <= 1e-17 * (amin2 + t.abs()) {
            t = next;
            break;
        }
        t = next;
    }
    let foot_p: CxVector = y.iter().zip(&a2).map(|(c, a)| c * (a / (a + t))).collect();
    let distance = t.abs()
        * ys.iter()
            .zip(&a2)
            .map(|(v, a)| v / ((a + t) * (a + t)))
            .sum::<f64>()
            .sqrt();
    // Near the medial axis two feet nearly coincide.
    let unique = !(inside && min_group_zero);
    Projection {
        foot: e.from_principal(&foot_p),
        distance,
        inside,
        unique,
    }
}

fn real_grad(f: &dyn DefiningFunction, p: &CxPoint) -> DVector<f64> {
    DVector::from_vec(f.gradient(p).to_real_interleaved())
}

fn real_hess(f: &dyn DefiningFunction, p: &CxPoint) -> DMatrix<f64> {
    f.real_hessian(p)
        .unwrap_or_else(|| fd_real_hessian(|q| f.gradient(q), p))
}

fn to_cx(v: &DVector<f64>) -> CxPoint {
    CxVector::from_real_interleaved(v.as_slice())
}

/// Moves `p` onto `{s = 0}` along the gradient (Newton on `s` alone).
fn settle_on_surface(f: &dyn DefiningFunction, mut p: DVector<f64>) -> Option<DVector<f64>> {
    for _ in 0..NEWTON_MAX_ITER {
        let pc = to_cx(&p);
        let s = f.value(&pc);
        let g = real_grad(f, &pc);
        let gg = g.norm_squared();
        if gg == 0.0 || !s.is_finite() {
            return None;
        }
        if s.abs() < 1e-15 * (1.0 + gg.sqrt()) {
            return Some(p);
        }
        p -= &g * (s / gg);
    }
    let s = f.value(&to_cx(&p));
    (s.abs() < 1e-12).then_some(p)
}

/// Start point found by marching along `−sign(s)∇s` until `s` changes sign,
/// then bisecting.
fn flow_start(f: &dyn DefiningFunction, x: &DVector<f64>, scale: f64) -> Option<DVector<f64>> {
    let xc = to_cx(x);
    let s0 = f.value(&xc);
    let g = real_grad(f, &xc);
    let gn = g.norm();
    if gn == 0.0 {
        return None;
    }
    let dir = &g * (-s0.signum() / gn);
    let mut step = 1e-4 * scale;
    let mut prev = 0.0;
    while step < 4.0 * scale {
        let s = f.value(&to_cx(&(x + &dir * step)));
        if s.signum() != s0.signum() {
            let (mut a, mut b) = (prev, step);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f.value(&to_cx(&(x + &dir * m))).signum() == s0.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(x + &dir * (0.5 * (a + b)));
        }
        prev = step;
        step *= 1.5;
    }
    None
}

/// Damped Newton on the stationarity system `p − x + μ∇s(p) = 0, s(p) = 0`.
fn lagrange_newton(f: &dyn DefiningFunction, x: &DVector<f64>, start: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let m = x.len();
    let mut p = start;
    let g = real_grad(f, &to_cx(&p));
    let mut mu = (x - &p).dot(&g) / g.norm_squared();
    let residual = |p: &DVector<f64>, mu: f64| -> (DVector<f64>, f64) {
        let pc = to_cx(p);
        let g = real_grad(f, &pc);
        let s = f.value(&pc);
        let r = p - x + &g * mu;
        let norm = (r.norm_squared() + s * s).sqrt();
        (g, norm)
    };
    let (_, mut res) = residual(&p, mu);
    let tol = NEWTON_TOL * 1e-3 * (1.0 + x.norm());
    for _ in 0..NEWTON_MAX_ITER {
        if res < tol {
            return Ok((p, mu));
        }
        let pc = to_cx(&p);
        let g = real_grad(f, &pc);
        let h = real_hess(f, &pc);
        let s = f.value(&pc);
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        jac.view_mut((0, 0), (m, m))
            .copy_from(&(DMatrix::identity(m, m) + &h * mu));
        jac.view_mut((0, m), (m, 1)).copy_from(&g);
        jac.view_mut((m, 0), (1, m)).copy_from(&g.transpose());
        let mut rhs = DVector::zeros(m + 1);
        rhs.rows_mut(0, m).copy_from(&(&p - x + &g * mu));
        rhs[m] = s;
        let Some(step) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut alpha = 1.0;
        loop {
            let np = &p - step.rows(0, m) * alpha;
            let nmu = mu - step[m] * alpha;
            let (_, nres) = residual(&np, nmu);
            if nres < res || alpha < 1e-6 {
                p = np;
                mu = nmu;
                res = nres;
                break;
            }
            alpha *= 0.5;
        }
    }
    if res < NEWTON_TOL * (1.0 + x.norm()) {
        return Ok((p, mu));
    }
    Err(Error::ProjectionNoConverge {
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}

/// Projection of `x` onto `{s = 0}` for a general defining function.
pub fn newton_project(f: &dyn DefiningFunction, x: &CxPoint, scale: f64) -> Result<Projection> {
    let xr = DVector::from_vec(x.to_real_interleaved());
    let s = f.value(x);
    if s == 0.0 {
        return Ok(Projection {
            foot: x.clone(),
            distance: 0.0,
            inside: false,
            unique: true,
        });
    }
    let attempt = |start: Option<DVector<f64>>| -> Result<(DVector<f64>, f64)> {
        match start {
            Some(st) => lagrange_newton(f, &xr, st),
            None => Err(Error::ProjectionNoConverge {
                iterations: 0,
                residual: f64::INFINITY,
            }),
        }
    };
    let (p, mu) = attempt(settle_on_surface(f, xr.clone()))
        .or_else(|_| attempt(flow_start(f, &xr, scale).and_then(|st| settle_on_surface(f, st))))?;
    let pc = to_cx(&p);
    // Second-order test: the squared distance must be strictly convex along
    // the surface at the foot.
    let g = real_grad(f, &pc);
    let h = real_hess(f, &pc);
    let m = xr.len();
    let q = DMatrix::identity(m, m) + &h * mu;
    let gn = g.normalize();
    let proj = DMatrix::identity(m, m) - &gn * gn.transpose();
    let qt = &proj * q * &proj + &gn * gn.transpose();
    let min_eig = qt.symmetric_eigenvalues().min();
    Ok(Projection {
        distance: (&xr - &p).norm(),
        foot: pc,
        inside: s < 0.0,
        unique: min_eig > 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::defining::Polynomial;
    use std::sync::Arc;

    fn pt(v: &[(f64, f64)]) -> CxPoint {
        v.iter().map(|&(a, b)| Cx::new(a, b)).collect()
    }

    #[test]
    fn ball_and_shell_examples() {
        let ball = DomainModel::unit_ball(2);
        assert!((ball.signed_distance(&pt(&[(0.7, 0.0), (0.0, 0.0)])).unwrap() + 0.3).abs() < 1e-15);
        let f = ball.boundary_frame(&pt(&[(0.5, 0.0), (0.0, 0.0)])).unwrap();
        assert!(f.foot.distance(&pt(&[(1.0, 0.0), (0.0, 0.0)])) < 1e-15);
        assert!(f.normal.distance(&pt(&[(-1.0, 0.0), (0.0, 0.0)])) < 1e-15);
        assert!((f.delta - 0.5).abs() < 1e-15);

        let z = pt(&[(0.3, 0.4), (0.0, 0.0)]);
        let f = ball.boundary_frame(&z).unwrap();
        assert!(f.foot.distance(&(&z * 2.0)) < 1e-15);
        assert!((f.delta - 0.5).abs() < 1e-15);

        let shell = DomainModel::shell(2, 4.0).unwrap();
        let z = pt(&[(1.2, 0.0), (0.0, 0.0)]);
        assert!((shell.signed_distance(&z).unwrap() + 0.2).abs() < 1e-15);
        let f = shell.boundary_frame(&z).unwrap();
        assert!(f.foot.distance(&pt(&[(1.0, 0.0), (0.0, 0.0)])) < 1e-15);
        assert!(f.normal.distance(&pt(&[(1.0, 0.0), (0.0, 0.0)])) < 1e-15);
        assert!((f.delta - 0.2).abs() < 1e-14);

        let mid = pt(&[(2.5, 0.0), (0.0, 0.0)]);
        assert!(!shell.boundary_frame(&mid).unwrap().unique);
        assert!(matches!(shell.unique_frame(&mid), Err(Error::AmbiguousProjection)));
    }

    #[test]
    fn normal_component_examples() {
        let ball = DomainModel::unit_ball(2);
        let z = pt(&[(0.5, 0.0), (0.0, 0.0)]);
        let e1 = CxVector::basis(2, 0);
        let e2 = CxVector::basis(2, 1);
        assert!((ball.normal_component(&z, &e1).unwrap() + 1.0).norm() < 1e-15);
        assert!(ball.normal_component(&z, &e2).unwrap().norm() < 1e-15);
        let z = pt(&[(0.3, 0.4), (0.0, 0.0)]);
        let c = ball.normal_component(&z, &e1).unwrap();
        assert!((c - Cx::new(-0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn frame_errors() {
        let ball = DomainModel::unit_ball(2);
        assert!(matches!(
            ball.boundary_frame(&pt(&[(1.5, 0.0), (0.0, 0.0)])),
            Err(Error::NotInDomain { .. })
        ));
        let pb = DomainModel::perturbed_ball(2, 0.1, 3).unwrap();
        assert!(matches!(
            pb.boundary_frame(&pt(&[(0.2, 0.0), (0.0, 0.0)])),
            Err(Error::OutsideCollar { .. })
        ));
    }

    #[test]
    fn ellipsoid_center_is_ambiguous_at_depth_one() {
        let e = DomainModel::ellipsoid(vec![1.0, 4.0]).unwrap();
        let p = e.project(&CxVector::zeros(2)).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-15);
        assert!(!p.unique);
    }

    #[test]
    fn ellipsoid_closed_form_matches_newton() {
        let d = DomainModel::ellipsoid(vec![1.0, 4.0]).unwrap();
        for z in [
            pt(&[(0.95, 0.02), (0.3, -0.1)]),
            pt(&[(0.1, 0.0), (3.7, 0.5)]),
            pt(&[(0.5, 0.5), (1.0, 1.0)]),
            pt(&[(1.2, 0.0), (0.5, 0.0)]),
        ] {
            let a = d.project(&z).unwrap();
            let b = d.project_numerically(&z).unwrap();
            assert!((a.distance - b.distance).abs() <= 1e-10 * a.distance, "{z}");
            assert!(a.foot.distance(&b.foot) < 1e-8);
            assert!(d.value(&a.foot).abs() < 1e-13);
        }
    }

    #[test]
    fn polynomial_ball_projects_like_the_ball() {
        let poly = Polynomial::perturbed_ball(2, 0.0, 1);
        let d = DomainModel::from_function(
            crate::geometry::DomainKind::Custom { source: "test".into() },
            Arc::new(poly),
        )
        .unwrap()
        .with_collar(0.5);
        let z = pt(&[(0.6, 0.2), (-0.3, 0.4)]);
        let p = d.project(&z).unwrap();
        assert!((p.distance - (1.0 - z.norm())).abs() < 1e-12);
        assert!(p.unique && p.inside);
    }
}
