//! Deterministic sampling: per-sample ChaCha streams and an R_d low-discrepancy
//! sequence with a seeded Cranley–Patterson shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` of a run seeded with `seed`.
///
/// Each sample owns its stream, so results do not depend on how samples are
/// distributed over workers.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Roberts' R_d sequence `x_i = frac(shift + (i+1)·α)` in `[0,1)^d`.
#[derive(Clone, Debug)]
pub struct RSequence {
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

impl RSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        // Generalized golden ratio: the positive root of x^{d+1} = x + 1.
        let mut phi = 2.0_f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|k| phi.powi(-(k as i32)).fract()).collect();
        let mut rng = sample_rng(seed, u64::MAX);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        RSequence { alpha, shift }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        let i = (index + 1) as f64;
        self.alpha
            .iter()
            .zip(&self.shift)
            .map(|(a, s)| (s + i * a).fract())
            .collect()
    }
}

/// Maps `u ∈ [0,1]` to a log-uniform value in `[lo, hi]`.
pub fn log_uniform(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

/// Uniform point in the closed unit ball of ℝ^d (rejection from the cube).
pub fn unit_ball_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

/// Uniform point on the unit sphere of ℝ^d.
pub fn unit_sphere_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v = unit_ball_point(rng, dim);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
