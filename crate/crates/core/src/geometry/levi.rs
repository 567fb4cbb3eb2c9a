//! Levi form of the defining function on the complex tangent space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::defining::{complex_hessian_from_real, fd_real_hessian};
use super::domain::DomainModel;
use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeviClass {
    StronglyPseudoconvex,
    Degenerate,
    NonSemipositive,
}

impl std::fmt::Display for LeviClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LeviClass::StronglyPseudoconvex => "strongly-pseudoconvex",
            LeviClass::Degenerate => "degenerate",
            LeviClass::NonSemipositive => "non-semipositive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeviReport {
    pub point: CxPoint,
    /// Eigenvalues of the Levi form normalized by `|∂s(p)|`, ascending.
    pub eigenvalues: Vec<f64>,
    pub classification: LeviClass,
    pub tolerance: f64,
    /// True when the Hessian came from finite differences.
    pub finite_difference: bool,
}

const ANALYTIC_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-4;

/// Orthonormal basis of `{X : ⟨X, g⟩ = 0}`.
pub fn complex_tangent_basis(g: &CxVector) -> Vec<CxVector> {
    let n = g.dim();
    let gn = g.normalized().expect("nonzero gradient");
    let mut basis: Vec<CxVector> = Vec::with_capacity(n - 1);
    // Start from the coordinate axes least aligned with g.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[a].norm().total_cmp(&g[b].norm()));
    for j in order {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = CxVector::basis(n, j);
        for _ in 0..2 {
            v = &v - &gn.scale(v.herm(&gn));
            for b in &basis {
                v = &v - &b.scale(v.herm(b));
            }
        }
        if let Some(u) = v.normalized().filter(|_| v.norm() > 1e-8) {
            basis.push(u);
        }
    }
    basis
}

impl DomainModel {
    pub fn levi_classify(&self, p: &CxPoint) -> Result<LeviReport> {
        let g = self.function.gradient(p);
        let gnorm = g.norm();
        if !(gnorm > 0.0) {
            return Err(Error::InvalidInput("gradient of s vanishes at the point".into()));
        }
        let (h, fd) = match self.function.complex_hessian(p) {
            Some(h) => (h, false),
            None => {
                let real = fd_real_hessian(|q| self.function.gradient(q), p);
                (complex_hessian_from_real(&real), true)
            }
        };
        let basis = complex_tangent_basis(&g);
        let m = basis.len();
        // |∂s| = |g|/2 in the packed convention.
        let scale = 2.0 / gnorm;
        let restricted = DMatrix::from_fn(m, m, |a, b| {
            let mut acc = Cx::new(0.0, 0.0);
            for j in 0..self.dim {
                for k in 0..self.dim {
                    acc += h[(j, k)] * basis[a][j] * basis[b][k].conj();
                }
            }
            acc * scale
        });
        let herm = (&restricted + restricted.adjoint()) * Cx::new(0.5, 0.0);
        let mut eigenvalues: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        let tolerance = if fd { FD_TOL } else { ANALYTIC_TOL };
        let min = eigenvalues.first().copied().unwrap_or(0.0);
        let classification = if min < -tolerance {
            LeviClass::NonSemipositive
        } else if min > tolerance {
            LeviClass::StronglyPseudoconvex
        } else {
            LeviClass::Degenerate
        };
        Ok(LeviReport {
            point: p.clone(),
            eigenvalues,
            classification,
            tolerance,
            finite_difference: fd,
        })
    }
}
