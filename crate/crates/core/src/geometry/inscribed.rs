//! Balls `E_{q,r}` tangent to ∂D from inside.

use serde::{Deserialize, Serialize};

use super::domain::DomainModel;
use crate::cx::{CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::sampling::{sample_rng, unit_ball_point, unit_sphere_point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InscribedBall {
    pub anchor: CxPoint,
    pub center: CxPoint,
    pub radius: f64,
}

impl InscribedBall {
    pub fn contains(&self, z: &CxPoint) -> bool {
        z.distance(&self.center) < self.radius
    }
}

impl DomainModel {
    /// The ball of radius `r` with center `q + r n_q`.
    pub fn inscribed_ball(&self, q: &CxPoint, r: f64) -> InscribedBall {
        let n = self.normal_at(q);
        InscribedBall {
            anchor: q.clone(),
            center: q.offset(r, &n),
            radius: r,
        }
    }

    /// Rejection test of `E_{q,r} ⊂ D` at `samples` points of E: half uniform
    /// in the ball, half on a slightly shrunk sphere.
    pub fn verify_inscribed(&self, ball: &InscribedBall, samples: usize, seed: u64) -> Result<()> {
        let m = 2 * self.dim;
        let mut rng = sample_rng(seed, ball.radius.to_bits());
        let shrink = 1.0 - 1e-9;
        for i in 0..samples {
            let u = if i % 2 == 0 {
                unit_ball_point(&mut rng, m)
            } else {
                unit_sphere_point(&mut rng, m)
            };
            let x = ball
                .center
                .offset(ball.radius * shrink, &CxVector::from_real_interleaved(&u));
            if !self.contains(&x) {
                return Err(Error::NotInterior { radius: ball.radius });
            }
        }
        Ok(())
    }

    /// Largest `r = r_max / 2^k` whose ball passes [`DomainModel::verify_inscribed`],
    /// refined by bisection between the last failing and first passing radius.
    pub fn largest_inscribed_radius(&self, q: &CxPoint, r_max: f64, samples: usize) -> Result<f64> {
        let passes = |r: f64| self.verify_inscribed(&self.inscribed_ball(q, r), samples, 17).is_ok();
        let mut hi = r_max;
        if passes(hi) {
            return Ok(hi);
        }
        let mut lo = 0.5 * hi;
        while !passes(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 * r_max {
                return Err(Error::NotInterior { radius: lo });
            }
        }
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Radius of inscribed balls usable at every boundary point near `anchor`:
    /// the reach for built-ins, otherwise the smallest sampled
    /// [`DomainModel::largest_inscribed_radius`] at a few points around it.
    pub fn inscribed_radius_near(&self, anchor: &CxPoint) -> Result<f64> {
        if let Some(r) = self.reach() {
            return Ok(r);
        }
        let mut rng = sample_rng(0x1b, 0);
        let mut best = self.largest_inscribed_radius(anchor, self.bounding_radius, 2000)?;
        for _ in 0..8 {
            let u = CxVector::from_real_interleaved(&unit_ball_point(&mut rng, 2 * self.dim));
            let x = anchor.offset(self.collar, &u);
            let Ok(p) = self.project(&x) else { continue };
            best = best.min(self.largest_inscribed_radius(&p.foot, best, 2000)?);
        }
        // Sampling can only overestimate; keep a safety margin.
        Ok(0.9 * best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cx::Cx;

    #[test]
    fn examples() {
        let q = CxVector::basis(2, 0);
        let ball = DomainModel::unit_ball(2);
        let e = ball.inscribed_ball(&q, 1.0);
        assert!(e.center.norm() < 1e-15);
        ball.verify_inscribed(&e, 10_000, 1).unwrap();

        let shell = DomainModel::shell(2, 4.0).unwrap();
        let e = shell.inscribed_ball(&q, 1.0);
        assert!(
            e.center
                .distance(&CxVector::from_slice(&[Cx::new(2.0, 0.0), Cx::new(0.0, 0.0)]))
                < 1e-15
        );
        shell.verify_inscribed(&e, 10_000, 1).unwrap();

        let ell = DomainModel::ellipsoid(vec![1.0, 4.0]).unwrap();
        ell.verify_inscribed(&ell.inscribed_ball(&q, 0.05), 100_000, 1).unwrap();
    }

    #[test]
    fn too_large_balls_fail() {
        let q = CxVector::basis(2, 0);
        let ball = DomainModel::unit_ball(2);
        assert!(matches!(
            ball.verify_inscribed(&ball.inscribed_ball(&q, 1.2), 1000, 1),
            Err(Error::NotInterior { .. })
        ));
        let r = ball.largest_inscribed_radius(&q, 4.0, 4000).unwrap();
        assert!(r <= 1.0 + 1e-6 && r > 0.9, "{r}");
    }
}
