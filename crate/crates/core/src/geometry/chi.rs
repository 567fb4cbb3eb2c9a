//! Sampled Lipschitz constant `χ_{D,p}` of the unit normal near a boundary point.

use serde::{Deserialize, Serialize};

use super::domain::DomainModel;
use crate::cx::{CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::sampling::{sample_rng, unit_ball_point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    /// Estimates at radii `h`, `h/2`, `h/4`.
    pub radii: [f64; 3],
    pub estimates: [f64; 3],
    /// The largest of the three estimates.
    pub value: f64,
    pub samples: usize,
}

pub const CHI_SAMPLES: usize = 48;

impl DomainModel {
    /// Max of `|n_{p'} − n_{p''}| / |p' − p''|` over sampled boundary pairs
    /// within distance `h` of `p`.
    pub fn chi_constant(&self, p: &CxPoint, h: f64) -> Result<ChiReport> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sampling radius must be positive, got {h}"
            )));
        }
        let radii = [h, 0.5 * h, 0.25 * h];
        let mut estimates = [0.0; 3];
        for (slot, &r) in estimates.iter_mut().zip(&radii) {
            *slot = self.chi_at_radius(p, r, CHI_SAMPLES)?;
        }
        let value = estimates.iter().copied().fold(0.0, f64::max);
        Ok(ChiReport {
            radii,
            estimates,
            value,
            samples: CHI_SAMPLES,
        })
    }

    fn chi_at_radius(&self, p: &CxPoint, h: f64, samples: usize) -> Result<f64> {
        let mut rng = sample_rng(0xc41, h.to_bits());
        let mut feet: Vec<(CxPoint, CxVector)> = Vec::with_capacity(samples);
        let mut tries = 0;
        while feet.len() < samples && tries < 8 * samples {
            tries += 1;
            let u = CxVector::from_real_interleaved(&unit_ball_point(&mut rng, 2 * self.dim));
            let x = p.offset(h, &u);
            let Ok(proj) = self.project(&x) else { continue };
            if proj.foot.distance(p) <= h {
                let n = self.normal_at(&proj.foot);
                feet.push((proj.foot, n));
            }
        }
        if feet.len() < 2 {
            return Err(Error::DegenerateSampling);
        }
        let mut best = 0.0_f64;
        for i in 0..feet.len() {
            for j in (i + 1)..feet.len() {
                let d = feet[i].0.distance(&feet[j].0);
                if d > 1e-9 * h {
                    best = best.max(feet[i].1.distance(&feet[j].1) / d);
                }
            }
        }
        Ok(best)
    }
}
