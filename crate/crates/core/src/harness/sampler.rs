//! Pairs `(z, w)` near a boundary point, stratified by the decade of `A_D`.

use rand::Rng;

use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::geometry::complex_tangent_basis;
use crate::quantities::{pair_record, PairContext, PairRecord};
use crate::sampling::{log_uniform, sample_rng, unit_ball_point};

/// Fraction of the frame limit the lift height `3 B_D` may reach.
const LIFT_ROOM: f64 = 0.9;
const BISECTIONS: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct PairSampler {
    pub delta_min: f64,
    pub delta_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledPair {
    pub index: usize,
    pub z: CxPoint,
    pub w: CxPoint,
    /// The `A_D` the search aimed at; the pair's own `A_D` is smaller when
    /// the lift room or the domain cut the search short.
    pub target: f64,
    pub record: PairRecord,
}

impl PairSampler {
    pub fn decades(&self) -> usize {
        ((self.a_max / self.a_min).log10().ceil() as usize).max(1)
    }

    /// Pair number `index`; the decade of the target `A_D` cycles with the
    /// index so every decade gets the same share of samples.
    pub fn sample(&self, ctx: &PairContext, index: usize) -> Result<SampledPair> {
        let d = &ctx.domain;
        let mut rng = sample_rng(self.seed, index as u64);
        let dim = d.dim;
        let delta_hi = self.delta_max.min(d.collar);
        if !(self.delta_min < delta_hi) {
            return Err(Error::InvalidInput(format!(
                "delta range [{}, {}] misses the collar {}",
                self.delta_min, self.delta_max, d.collar
            )));
        }

        // Base boundary point near the anchor.
        let spread = 0.5 * d.collar * rng.random::<f64>();
        let jitter = CxVector::from_real_interleaved(&unit_ball_point(&mut rng, 2 * dim));
        let q = d.project(&ctx.anchor.offset(spread, &jitter))?.foot;
        let n = d.normal_at(&q);
        let delta = log_uniform(rng.random(), self.delta_min, delta_hi);
        let z = q.offset(delta, &n);

        let decades = self.decades();
        let k = (index % decades) as f64;
        let lo = self.a_min.log10() + k * (self.a_max / self.a_min).log10() / decades as f64;
        let width = (self.a_max / self.a_min).log10() / decades as f64;
        let target = 10f64.powf(lo + width * rng.random::<f64>());

        // Offsets of order δ along n and i·n, of order √δ tangentially.
        let mut v = n.scale(Cx::new(
            delta * rng.random_range(-1.0..1.0),
            delta * rng.random_range(-1.0..1.0),
        ));
        for t in complex_tangent_basis(&n) {
            let c = Cx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            v = v.offset_cx(c * delta.sqrt(), &t);
        }
        if v.norm() == 0.0 {
            v = n.clone() * delta;
        }

        let limit = d.frame_limit.min(d.collar.max(delta_hi));
        let valid = |s: f64| -> Option<PairRecord> {
            let w = z.offset(s, &v);
            if !d.contains(&w) {
                return None;
            }
            let rec = pair_record(ctx, &z, &w).ok()?;
            if !(rec.delta_w <= limit && 3.0 * rec.b <= LIFT_ROOM * d.frame_limit) {
                return None;
            }
            // Estimators may lift the pair in either order.
            let swapped = pair_record(ctx, &w, &z).ok()?;
            (3.0 * swapped.b <= LIFT_ROOM * d.frame_limit).then_some(rec)
        };

        // Bracket: lo valid with A < target, hi invalid or A ≥ target.
        let mut s_lo = 0.0;
        let mut s_hi = 1.0;
        loop {
            match valid(s_hi) {
                Some(r) if r.a < target => {
                    s_lo = s_hi;
                    s_hi *= 2.0;
                    if s_hi > 1e12 {
                        break;
                    }
                }
                _ => break,
            }
        }
        for _ in 0..BISECTIONS {
            let mid = if s_lo == 0.0 { 0.5 * s_hi } else { (s_lo * s_hi).sqrt() };
            match valid(mid) {
                Some(r) if r.a < target => s_lo = mid,
                _ => s_hi = mid,
            }
        }
        if s_lo == 0.0 {
            return Err(Error::DegenerateSampling);
        }
        let w = z.offset(s_lo, &v);
        let record = pair_record(ctx, &z, &w)?;
        Ok(SampledPair {
            index,
            z,
            w,
            target,
            record,
        })
    }
}
