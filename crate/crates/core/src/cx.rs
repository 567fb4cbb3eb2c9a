//! Points and tangent vectors in ℂⁿ.
//!
//! Vectors are stored inline for n ≤ 4, which covers every model domain used by
//! the experiments, so the hot paths (metric evaluation along quadrature nodes)
//! never touch the heap.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Cx = Complex64;

/// A vector of complex coordinates with the Hermitian structure of ℂⁿ.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CxVector(SmallVec<[Cx; 4]>);

/// Points and vectors share a representation.
pub type CxPoint = CxVector;

impl CxVector {
    pub fn zeros(n: usize) -> Self {
        CxVector(SmallVec::from_elem(Cx::new(0.0, 0.0), n))
    }

    pub fn from_slice(values: &[Cx]) -> Self {
        CxVector(SmallVec::from_slice(values))
    }

    /// Real coordinates, one complex entry per value.
    pub fn from_reals(values: &[f64]) -> Self {
        CxVector(values.iter().map(|&x| Cx::new(x, 0.0)).collect())
    }

    /// Standard basis vector `e_j` of ℂⁿ.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[j] = Cx::new(1.0, 0.0);
        v
    }

    /// Builds a vector from interleaved real coordinates `(x_1, y_1, …, x_n, y_n)`.
    pub fn from_real_interleaved(values: &[f64]) -> Self {
        debug_assert!(values.len().is_multiple_of(2));
        CxVector(values.chunks_exact(2).map(|c| Cx::new(c[0], c[1])).collect())
    }

    pub fn to_real_interleaved(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Cx] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cx> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian product `⟨self, other⟩ = Σ self_j · conj(other_j)`.
    pub fn herm(&self, other: &CxVector) -> Cx {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b.conj()).sum()
    }

    /// Euclidean scalar product of the underlying real vectors, `Re ⟨self, other⟩`.
    pub fn dot_real(&self, other: &CxVector) -> f64 {
        self.herm(other).re
    }

    pub fn distance(&self, other: &CxVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, c: Cx) -> CxVector {
        CxVector(self.0.iter().map(|v| v * c).collect())
    }

    /// `self + t · dir`.
    pub fn offset(&self, t: f64, dir: &CxVector) -> CxVector {
        CxVector(self.0.iter().zip(dir.0.iter()).map(|(a, d)| a + d * t).collect())
    }

    /// `self + c · dir` for a complex step.
    pub fn offset_cx(&self, c: Cx, dir: &CxVector) -> CxVector {
        CxVector(self.0.iter().zip(dir.0.iter()).map(|(a, d)| a + d * c).collect())
    }

    /// Point at parameter `t` on the segment from `a` to `b`.
    pub fn lerp(a: &CxVector, b: &CxVector, t: f64) -> CxVector {
        CxVector(a.0.iter().zip(b.0.iter()).map(|(x, y)| x + (y - x) * t).collect())
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<CxVector> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Sum of `|z_i w_j − z_j w_i|²` over `i < j`, which equals
    /// `|z|²|w|² − |⟨z,w⟩|²` without the cancellation.
    pub fn wedge_norm_sqr(&self, other: &CxVector) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += (self.0[i] * other.0[j] - self.0[j] * other.0[i]).norm_sqr();
            }
        }
        acc
    }
}

impl Index<usize> for CxVector {
    type Output = Cx;
    fn index(&self, i: usize) -> &Cx {
        &self.0[i]
    }
}

impl IndexMut<usize> for CxVector {
    fn index_mut(&mut self, i: usize) -> &mut Cx {
        &mut self.0[i]
    }
}

impl FromIterator<Cx> for CxVector {
    fn from_iter<I: IntoIterator<Item = Cx>>(iter: I) -> Self {
        CxVector(iter.into_iter().collect())
    }
}

impl Add<&CxVector> for &CxVector {
    type Output = CxVector;
    fn add(self, rhs: &CxVector) -> CxVector {
        self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect()
    }
}

impl Add for CxVector {
    type Output = CxVector;
    fn add(self, rhs: CxVector) -> CxVector {
        &self + &rhs
    }
}

impl Sub<&CxVector> for &CxVector {
    type Output = CxVector;
    fn sub(self, rhs: &CxVector) -> CxVector {
        self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect()
    }
}

impl Sub for CxVector {
    type Output = CxVector;
    fn sub(self, rhs: CxVector) -> CxVector {
        &self - &rhs
    }
}

impl Mul<f64> for &CxVector {
    type Output = CxVector;
    fn mul(self, t: f64) -> CxVector {
        self.0.iter().map(|a| a * t).collect()
    }
}

impl Mul<f64> for CxVector {
    type Output = CxVector;
    fn mul(self, t: f64) -> CxVector {
        &self * t
    }
}

impl Mul<Cx> for &CxVector {
    type Output = CxVector;
    fn mul(self, c: Cx) -> CxVector {
        self.scale(c)
    }
}

impl Neg for &CxVector {
    type Output = CxVector;
    fn neg(self) -> CxVector {
        self.0.iter().map(|a| -a).collect()
    }
}

impl Neg for CxVector {
    type Output = CxVector;
    fn neg(self) -> CxVector {
        -&self
    }
}

impl fmt::Display for CxVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else if c.im < 0.0 {
                write!(f, "{}-{}i", c.re, -c.im)?;
            } else {
                write!(f, "{}+{}i", c.re, c.im)?;
            }
        }
        Ok(())
    }
}

/// Parses comma-separated complex coordinates such as `0.3+0.4i,0`.
impl FromStr for CxVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|tok| {
                let tok = tok.trim();
                Cx::from_str(tok).map_err(|_| Error::InvalidInput(format!("cannot parse complex number `{tok}`")))
            })
            .collect::<Result<SmallVec<_>>>()
            .map(CxVector)
    }
}
