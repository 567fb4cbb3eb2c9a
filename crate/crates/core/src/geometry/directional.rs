//! Directional boundary distance `δ_D(z; X)`: the radius of the largest complex
//! disc `z + λX`, `|λ| < ρ`, contained in D.

use serde::{Deserialize, Serialize};

use super::domain::{Closed, DomainModel};
use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalDistance {
    pub value: f64,
    /// Number of sampled angles, or `None` for a closed form.
    pub angles: Option<usize>,
}

pub const DEFAULT_ANGLES: usize = 64;
const MAX_ANGLES: usize = 4096;

/// Disc radius for the ball `|ζ| < r`, with `b = |⟨ζ, Y⟩|`.
fn ball_radius(norm_z2: f64, b: f64, y2: f64, r: f64) -> f64 {
    let room = r * r - norm_z2;
    if room <= 0.0 {
        return 0.0;
    }
    room / (b + (b * b + y2 * room).sqrt())
}

impl DomainModel {
    /// `δ_D(z; X)`, in closed form for balls, shells and ellipsoids and by
    /// angle sampling otherwise.
    pub fn directional_distance(&self, z: &CxPoint, x: &CxVector) -> Result<DirectionalDistance> {
        self.check_direction(z, x)?;
        let value = match &self.closed {
            Closed::Ball { radius } => ball_radius(z.norm_sqr(), z.herm(x).norm(), x.norm_sqr(), *radius),
            Closed::Ellipsoid(e) => {
                let zeta: CxVector = e.to_principal(z).iter().zip(&e.axes).map(|(c, a)| c / a).collect();
                let y: CxVector = e
                    .to_principal(&(&e.center + x))
                    .iter()
                    .zip(&e.axes)
                    .map(|(c, a)| c / a)
                    .collect();
                ball_radius(zeta.norm_sqr(), zeta.herm(&y).norm(), y.norm_sqr(), 1.0)
            }
            Closed::Shell { outer } => {
                let u = z.norm_sqr();
                let b = z.herm(x).norm();
                let x2 = x.norm_sqr();
                let out = ball_radius(u, b, x2, *outer);
                let disc = b * b - x2 * (u - 1.0);
                let inner = if u - b * b / x2 > 1.0 || disc < 0.0 {
                    f64::INFINITY
                } else {
                    (u - 1.0) / (b + disc.sqrt())
                };
                out.min(inner)
            }
            Closed::None => return self.directional_distance_sampled(z, x, DEFAULT_ANGLES),
        };
        Ok(DirectionalDistance { value, angles: None })
    }

    fn check_direction(&self, z: &CxPoint, x: &CxVector) -> Result<()> {
        let value = self.value(z);
        if !(value < 0.0) {
            return Err(Error::NotInDomain { value });
        }
        if x.norm() == 0.0 {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        Ok(())
    }

    /// Minimum over `M` angles of the first exit along `e^{iθ}X`, polished by
    /// a golden-section search in the grid cells around the best angle; `M` is
    /// doubled from `m0` until the polished value changes by less than `1e-8`.
    pub fn directional_distance_sampled(&self, z: &CxPoint, x: &CxVector, m0: usize) -> Result<DirectionalDistance> {
        self.check_direction(z, x)?;
        let mut m = m0.max(4);
        let (mut grid, mut arg) = self.min_exit_over_angles(z, x, m, 0, 1);
        let mut best = grid.min(self.polish(z, x, arg, m));
        while m < MAX_ANGLES {
            // Doubling only adds the odd multiples of the new angle step.
            let (odd, odd_arg) = self.min_exit_over_angles(z, x, 2 * m, 1, 2);
            m *= 2;
            if odd < grid {
                grid = odd;
                arg = odd_arg;
            }
            let next = grid.min(self.polish(z, x, arg, m)).min(best);
            let change = best - next;
            best = next;
            if change < 1e-8 * best.max(1e-300) {
                break;
            }
        }
        Ok(DirectionalDistance {
            value: best,
            angles: Some(m),
        })
    }

    fn polish(&self, z: &CxPoint, x: &CxVector, arg: f64, m: usize) -> f64 {
        let step = 2.0 * std::f64::consts::PI / m as f64;
        let exit = |t: f64| self.first_exit(z, &x.scale(Cx::from_polar(1.0, t)));
        let (mut a, mut b) = (arg - step, arg + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (exit(c), exit(d));
        for _ in 0..40 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = exit(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = exit(d);
            }
        }
        fc.min(fd)
    }

    /// Minimum first exit over exactly `m` equally spaced angles; nonincreasing
    /// under doubling of `m`.
    pub fn min_exit_at_angles(&self, z: &CxPoint, x: &CxVector, m: usize) -> f64 {
        self.min_exit_over_angles(z, x, m, 0, 1).0
    }

    fn min_exit_over_angles(&self, z: &CxPoint, x: &CxVector, m: usize, start: usize, stride: usize) -> (f64, f64) {
        (start..m)
            .step_by(stride)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                (self.first_exit(z, &x.scale(Cx::from_polar(1.0, theta))), theta)
            })
            .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc })
    }

    /// Smallest `t > 0` with `s(z + t d) ≥ 0`: first-order steps until the
    /// sign changes, then Illinois regula falsi on the bracket.
    pub fn first_exit(&self, z: &CxPoint, d: &CxVector) -> f64 {
        let f = &self.function;
        let dn = d.norm();
        let cap = 2.0 * self.bounding_radius / dn + 1.0;
        let min_step = 1e-12 * self.bounding_radius / dn;
        let max_step = self.bounding_radius / (32.0 * dn);
        let mut t = 0.0;
        let mut s = f.value(z);
        loop {
            let p = z.offset(t, d);
            let slope = f.gradient(&p).norm() * dn;
            let step = if slope > 0.0 { s.abs() / slope } else { max_step };
            let next = t + step.clamp(min_step, max_step);
            let s_next = f.value(&z.offset(next, d));
            if s_next >= 0.0 {
                return self.refine_exit(z, d, (t, s), (next, s_next));
            }
            t = next;
            s = s_next;
            if t > cap {
                return f64::INFINITY;
            }
        }
    }

    /// Inside end of a bracket `s(a) < 0 ≤ s(b)` shrunk to relative width `1e-15`.
    fn refine_exit(&self, z: &CxPoint, d: &CxVector, (mut a, mut fa): (f64, f64), (mut b, mut fb): (f64, f64)) -> f64 {
        let f = &self.function;
        let mut side = 0i8;
        for _ in 0..200 {
            if b - a <= 1e-15 * b {
                break;
            }
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let fc = f.value(&z.offset(c, d));
            if fc >= 0.0 {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::defining::Polynomial;
    use crate::geometry::DomainKind;
    use std::sync::Arc;

    fn pt(v: &[(f64, f64)]) -> CxPoint {
        v.iter().map(|&(a, b)| Cx::new(a, b)).collect()
    }

    #[test]
    fn ball_examples() {
        let d = DomainModel::unit_ball(2);
        let e1 = CxVector::basis(2, 0);
        let e2 = CxVector::basis(2, 1);
        let v = |z: &CxPoint, x: &CxVector| d.directional_distance(z, x).unwrap().value;
        assert!((v(&CxVector::zeros(2), &e1) - 1.0).abs() < 1e-15);
        let z = pt(&[(0.5, 0.0), (0.0, 0.0)]);
        assert!((v(&z, &e2) - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((v(&z, &e1) - 0.5).abs() < 1e-15);
        let s = d.directional_distance_sampled(&z, &e1, 64).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!(s.angles.unwrap() >= 64);
    }

    #[test]
    fn closed_forms_match_sampling() {
        let z = pt(&[(1.3, 0.2), (0.4, -0.3)]);
        let dirs = [
            pt(&[(1.0, 0.0), (0.0, 0.0)]),
            pt(&[(0.3, 0.7), (-0.5, 0.2)]),
            pt(&[(0.0, 0.0), (0.0, 1.0)]),
        ];
        for spec in ["shell:R=4", "ellipsoid:a=2,3"] {
            let d = DomainModel::parse(spec).unwrap();
            for x in &dirs {
                let a = d.directional_distance(&z, x).unwrap().value;
                let b = d.directional_distance_sampled(&z, x, 64).unwrap().value;
                assert!(
                    b >= a * (1.0 - 1e-12) && b <= a * (1.0 + 1e-9),
                    "{spec} {x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn sampling_is_monotone_in_angle_count() {
        let poly = Polynomial::perturbed_ball(2, 0.1, 3);
        let d = DomainModel::from_function(DomainKind::Custom { source: "t".into() }, Arc::new(poly)).unwrap();
        let z = pt(&[(0.8, 0.1), (0.1, 0.0)]);
        let x = pt(&[(0.6, 0.2), (0.3, 0.1)]);
        let mut prev = f64::INFINITY;
        for m in [8, 16, 32, 64, 128, 256] {
            let v = d.min_exit_at_angles(&z, &x, m);
            assert!(v <= prev);
            prev = v;
        }
        let fine = d.directional_distance_sampled(&z, &x, 64).unwrap();
        assert!(fine.value <= prev);
        let exact = d.first_exit(&z, &x);
        assert!(fine.value <= exact);
    }

    #[test]
    fn shell_disc_missing_the_hole() {
        let d = DomainModel::shell(2, 4.0).unwrap();
        let z = pt(&[(2.0, 0.0), (0.0, 0.0)]);
        let x = CxVector::basis(2, 1);
        let v = d.directional_distance(&z, &x).unwrap().value;
        assert!((v - 12f64.sqrt()).abs() < 1e-12);
    }
}
