//! Exact Kobayashi distance and metric of the unit ball.

use crate::cx::{CxPoint, CxVector};
use crate::error::{Error, Result};

/// `1 − |z|²` without cancellation near the sphere.
fn defect(z: &CxPoint) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// `k_B(z, w) = tanh⁻¹ |φ_z(w)|` on the unit ball.
pub fn ball_distance(z: &CxPoint, w: &CxPoint) -> Result<f64> {
    let (dz, dw) = (defect(z), defect(w));
    if !(dz > 0.0 && dw > 0.0) {
        return Err(Error::OutsideBall);
    }
    let q = (num_complex::Complex64::new(1.0, 0.0) - z.herm(w)).norm_sqr();
    let diff = z.distance(w);
    // |1 − ⟨z,w⟩|² − (1−|z|²)(1−|w|²) = |z − w|² − (|z|²|w|² − |⟨z,w⟩|²)
    let t2 = ((diff * diff - z.wedge_norm_sqr(w)) / q).max(0.0);
    let t = t2.sqrt().min(1.0);
    let one_minus_t2 = dz * dw / q;
    Ok(t.ln_1p() - 0.5 * one_minus_t2.ln())
}

/// `κ_B(z; X)² = |X|²/(1−|z|²) + |⟨z,X⟩|²/(1−|z|²)²`.
pub fn ball_metric(z: &CxPoint, x: &CxVector) -> Result<f64> {
    let d = defect(z);
    if !(d > 0.0) {
        return Err(Error::OutsideBall);
    }
    Ok((x.norm_sqr() / d + z.herm(x).norm_sqr() / (d * d)).sqrt())
}
