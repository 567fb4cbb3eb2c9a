//! Defining functions `s` with `D = {s < 0}` and their derivatives.
//!
//! Gradients are "packed": for `s: ℂⁿ → ℝ` the real gradient in ℝ^{2n} is
//! stored as the complex vector `g_j = ∂s/∂x_j + i ∂s/∂y_j = 2 ∂s/∂z̄_j`, so
//! that `∇s · v = Re ⟨v, g⟩`. The complex Hessian is `h_jk = ∂²s/∂z_j∂z̄_k`
//! and the Levi form is `L(X) = Σ h_jk X_j X̄_k`.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use smallvec::SmallVec;

use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};

pub trait DefiningFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, z: &CxPoint) -> f64;

    /// Packed real gradient; central differences unless overridden.
    fn gradient(&self, z: &CxPoint) -> CxVector {
        fd_gradient(|p| self.value(p), z)
    }

    /// Real Hessian in interleaved `(x_1, y_1, …, x_n, y_n)` order.
    fn real_hessian(&self, _z: &CxPoint) -> Option<DMatrix<f64>> {
        None
    }

    fn complex_hessian(&self, z: &CxPoint) -> Option<DMatrix<Cx>> {
        self.real_hessian(z).map(|h| complex_hessian_from_real(&h))
    }
}

/// `h_jk = ¼[s_{x_j x_k} + s_{y_j y_k} + i(s_{x_j y_k} − s_{y_j x_k})]`.
pub fn complex_hessian_from_real(h: &DMatrix<f64>) -> DMatrix<Cx> {
    let n = h.nrows() / 2;
    DMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        Cx::new(0.25 * (h[(xj, xk)] + h[(yj, yk)]), 0.25 * (h[(xj, yk)] - h[(yj, xk)]))
    })
}

/// Real interleaved Hessian of the Hermitian form `v ↦ 2⟨Pv, v⟩`.
fn real_hessian_of_hermitian(p: &DMatrix<Cx>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (re, im) = (p[(j, k)].re, p[(j, k)].im);
            h[(2 * j, 2 * k)] = 2.0 * re;
            h[(2 * j + 1, 2 * k + 1)] = 2.0 * re;
            h[(2 * j, 2 * k + 1)] = -2.0 * im;
            h[(2 * j + 1, 2 * k)] = 2.0 * im;
        }
    }
    h
}

pub fn fd_gradient(f: impl Fn(&CxPoint) -> f64, z: &CxPoint) -> CxVector {
    let h = 1e-6 * (1.0 + z.norm());
    let mut g = CxVector::zeros(z.dim());
    for j in 0..z.dim() {
        for (part, unit) in [(0, Cx::new(1.0, 0.0)), (1, Cx::new(0.0, 1.0))] {
            let mut p = z.clone();
            let mut m = z.clone();
            p[j] += unit * h;
            m[j] -= unit * h;
            let d = (f(&p) - f(&m)) / (2.0 * h);
            if part == 0 {
                g[j].re = d;
            } else {
                g[j].im = d;
            }
        }
    }
    g
}

/// Real Hessian by central differences of the packed gradient.
pub fn fd_real_hessian(grad: impl Fn(&CxPoint) -> CxVector, z: &CxPoint) -> DMatrix<f64> {
    let n = z.dim();
    let h = 1e-5 * (1.0 + z.norm());
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for (part, unit) in [(0, Cx::new(1.0, 0.0)), (1, Cx::new(0.0, 1.0))] {
            let mut p = z.clone();
            let mut m = z.clone();
            p[j] += unit * h;
            m[j] -= unit * h;
            let gp = grad(&p).to_real_interleaved();
            let gm = grad(&m).to_real_interleaved();
            for (r, (a, b)) in gp.iter().zip(&gm).enumerate() {
                out[(r, 2 * j + part)] = (a - b) / (2.0 * h);
            }
        }
    }
    // Symmetrize away the O(h²) asymmetry.
    (&out + out.transpose()) * 0.5
}

/// `s = |z|² − r²`.
#[derive(Clone, Debug)]
pub struct BallFunction {
    pub dim: usize,
    pub radius: f64,
}

impl DefiningFunction for BallFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &CxPoint) -> f64 {
        z.norm_sqr() - self.radius * self.radius
    }
    fn gradient(&self, z: &CxPoint) -> CxVector {
        z * 2.0
    }
    fn real_hessian(&self, _z: &CxPoint) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(2 * self.dim, 2 * self.dim) * 2.0)
    }
    fn complex_hessian(&self, _z: &CxPoint) -> Option<DMatrix<Cx>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
}

/// `s = (|z|² − 1)(|z|² − R²)`, negative exactly on `1 < |z| < R`.
#[derive(Clone, Debug)]
pub struct ShellFunction {
    pub dim: usize,
    pub outer: f64,
}

impl ShellFunction {
    fn slope(&self, u: f64) -> f64 {
        2.0 * u - 1.0 - self.outer * self.outer
    }
}

impl DefiningFunction for ShellFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &CxPoint) -> f64 {
        let u = z.norm_sqr();
        (u - 1.0) * (u - self.outer * self.outer)
    }
    fn gradient(&self, z: &CxPoint) -> CxVector {
        z * (2.0 * self.slope(z.norm_sqr()))
    }
    fn real_hessian(&self, z: &CxPoint) -> Option<DMatrix<f64>> {
        let x = z.to_real_interleaved();
        let m = 2 * self.dim;
        let c = 2.0 * self.slope(z.norm_sqr());
        Some(DMatrix::from_fn(m, m, |a, b| {
            8.0 * x[a] * x[b] + if a == b { c } else { 0.0 }
        }))
    }
    fn complex_hessian(&self, z: &CxPoint) -> Option<DMatrix<Cx>> {
        let c = self.slope(z.norm_sqr());
        Some(DMatrix::from_fn(self.dim, self.dim, |j, k| {
            z[j].conj() * z[k] * 2.0 + if j == k { Cx::new(c, 0.0) } else { Cx::new(0.0, 0.0) }
        }))
    }
}

/// Hermitian ellipsoid `s = |A(z − c)|² − 1` with `A = diag(1/a) U*`.
///
/// With `U = I` and `c = 0` this is the complex ellipsoid `Σ |z_j|²/a_j² < 1`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub axes: Vec<f64>,
    pub center: CxVector,
    /// Columns are the principal complex directions; `None` means the identity.
    pub frame: Option<DMatrix<Cx>>,
    form: DMatrix<Cx>,
}

impl Ellipsoid {
    pub fn new(axes: Vec<f64>, center: CxVector, frame: Option<DMatrix<Cx>>) -> Self {
        let n = axes.len();
        let diag = DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                Cx::new(1.0 / (axes[j] * axes[j]), 0.0)
            } else {
                Cx::new(0.0, 0.0)
            }
        });
        let form = match &frame {
            Some(u) => u * diag * u.adjoint(),
            None => diag,
        };
        Ellipsoid {
            axes,
            center,
            frame,
            form,
        }
    }

    pub fn axis_aligned(axes: Vec<f64>) -> Self {
        let n = axes.len();
        Self::new(axes, CxVector::zeros(n), None)
    }

    /// Hermitian matrix `P` of the quadratic form `⟨P(z−c), z−c⟩`.
    pub fn form(&self) -> &DMatrix<Cx> {
        &self.form
    }

    /// Coordinates `U*(z − c)` in the principal frame.
    pub fn to_principal(&self, z: &CxPoint) -> CxVector {
        let d = z - &self.center;
        match &self.frame {
            Some(u) => mat_vec(&u.adjoint(), &d),
            None => d,
        }
    }

    /// Inverse of [`Ellipsoid::to_principal`] for points.
    pub fn from_principal(&self, y: &CxVector) -> CxPoint {
        &self.center + &self.rotate(y)
    }

    /// Applies `U` to a vector (no translation).
    pub fn rotate(&self, y: &CxVector) -> CxVector {
        match &self.frame {
            Some(u) => mat_vec(u, y),
            None => y.clone(),
        }
    }

    pub fn min_axis(&self) -> f64 {
        self.axes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_axis(&self) -> f64 {
        self.axes.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn mat_vec(m: &DMatrix<Cx>, v: &CxVector) -> CxVector {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

impl DefiningFunction for Ellipsoid {
    fn dim(&self) -> usize {
        self.axes.len()
    }
    fn value(&self, z: &CxPoint) -> f64 {
        let y = self.to_principal(z);
        y.iter()
            .zip(&self.axes)
            .map(|(c, a)| c.norm_sqr() / (a * a))
            .sum::<f64>()
            - 1.0
    }
    fn gradient(&self, z: &CxPoint) -> CxVector {
        mat_vec(&self.form, &(z - &self.center)) * 2.0
    }
    fn real_hessian(&self, _z: &CxPoint) -> Option<DMatrix<f64>> {
        Some(real_hessian_of_hermitian(&self.form))
    }
    fn complex_hessian(&self, _z: &CxPoint) -> Option<DMatrix<Cx>> {
        Some(self.form.map(|c| c.conj()))
    }
}

/// One complex monomial `γ · z^α z̄^β`.
#[derive(Clone, Debug, PartialEq)]
struct Term {
    coef: Cx,
    alpha: SmallVec<[u32; 4]>,
    beta: SmallVec<[u32; 4]>,
}

/// Real polynomial `s = Σ γ z^α z̄^β` whose term list is closed under
/// conjugation, so the sum is real and `z`, `z̄` may be differentiated
/// independently.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Term>,
}

fn monomial(z: &CxPoint, alpha: &[u32], beta: &[u32], dz: &[usize], dzbar: &[usize]) -> Cx {
    let mut coef = Cx::new(1.0, 0.0);
    let mut a: SmallVec<[i64; 4]> = alpha.iter().map(|&e| e as i64).collect();
    let mut b: SmallVec<[i64; 4]> = beta.iter().map(|&e| e as i64).collect();
    for &j in dz {
        coef *= a[j] as f64;
        a[j] -= 1;
    }
    for &k in dzbar {
        coef *= b[k] as f64;
        b[k] -= 1;
    }
    if coef.re == 0.0 && coef.im == 0.0 {
        return coef;
    }
    for j in 0..z.dim() {
        if a[j] > 0 {
            coef *= z[j].powi(a[j] as i32);
        }
        if b[j] > 0 {
            coef *= z[j].conj().powi(b[j] as i32);
        }
    }
    coef
}

impl Polynomial {
    pub fn new(dim: usize) -> Self {
        Polynomial { dim, terms: Vec::new() }
    }

    /// Adds `coef · Re(z^α z̄^β)`.
    pub fn add_real_part(&mut self, coef: f64, alpha: &[u32], beta: &[u32]) {
        self.push_pair(Cx::new(0.5 * coef, 0.0), alpha, beta);
    }

    /// Adds `coef · Im(z^α z̄^β)`.
    pub fn add_imag_part(&mut self, coef: f64, alpha: &[u32], beta: &[u32]) {
        // Im m = (m − m̄)/(2i)
        self.push_pair(Cx::new(0.0, -0.5 * coef), alpha, beta);
    }

    fn push_pair(&mut self, coef: Cx, alpha: &[u32], beta: &[u32]) {
        assert_eq!(alpha.len(), self.dim);
        assert_eq!(beta.len(), self.dim);
        self.terms.push(Term {
            coef,
            alpha: SmallVec::from_slice(alpha),
            beta: SmallVec::from_slice(beta),
        });
        self.terms.push(Term {
            coef: coef.conj(),
            alpha: SmallVec::from_slice(beta),
            beta: SmallVec::from_slice(alpha),
        });
    }

    /// `|z|² − 1 + ε Re(z_1^k)`.
    pub fn perturbed_ball(dim: usize, eps: f64, k: u32) -> Self {
        let mut p = Polynomial::new(dim);
        let zero: SmallVec<[u32; 4]> = SmallVec::from_elem(0, dim);
        for j in 0..dim {
            let mut e = zero.clone();
            e[j] = 1;
            p.add_real_part(1.0, &e, &e);
        }
        p.add_real_part(-1.0, &zero, &zero);
        if eps != 0.0 {
            let mut a = zero.clone();
            a[0] = k;
            p.add_real_part(eps, &a, &zero);
        }
        p
    }

    /// Parses the coefficient-file format: one monomial per line,
    /// `re|im a_1,…,a_n,b_1,…,b_n coefficient`, meaning
    /// `coefficient · Re(z^a z̄^b)` (or `Im`). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut poly: Option<Polynomial> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::ConfigParse { line: idx + 1, reason };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(err(format!("expected `re|im exponents coefficient`, got `{line}`")));
            }
            let exps = toks[1]
                .split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(format!("bad exponent vector `{}`: {e}", toks[1])))?;
            if exps.is_empty() || exps.len() % 2 != 0 {
                return Err(err("exponent vector must have 2n entries".into()));
            }
            let n = exps.len() / 2;
            let coef: f64 = toks[2]
                .parse()
                .map_err(|e| err(format!("bad coefficient `{}`: {e}", toks[2])))?;
            let p = poly.get_or_insert_with(|| Polynomial::new(n));
            if p.dim != n {
                return Err(err(format!("dimension {n} differs from earlier lines ({})", p.dim)));
            }
            let (a, b) = exps.split_at(n);
            match toks[0] {
                "re" => p.add_real_part(coef, a, b),
                "im" => p.add_imag_part(coef, a, b),
                other => return Err(err(format!("expected `re` or `im`, got `{other}`"))),
            }
        }
        poly.ok_or_else(|| Error::ConfigParse {
            line: 0,
            reason: "coefficient file has no monomials".into(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// `∂s/∂z_j`.
    fn dz(&self, z: &CxPoint, j: usize) -> Cx {
        self.terms
            .iter()
            .map(|t| t.coef * monomial(z, &t.alpha, &t.beta, &[j], &[]))
            .sum()
    }

    fn dz_dz(&self, z: &CxPoint, j: usize, k: usize) -> Cx {
        self.terms
            .iter()
            .map(|t| t.coef * monomial(z, &t.alpha, &t.beta, &[j, k], &[]))
            .sum()
    }

    fn dz_dzbar(&self, z: &CxPoint, j: usize, k: usize) -> Cx {
        self.terms
            .iter()
            .map(|t| t.coef * monomial(z, &t.alpha, &t.beta, &[j], &[k]))
            .sum()
    }
}

impl DefiningFunction for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &CxPoint) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * monomial(z, &t.alpha, &t.beta, &[], &[]))
            .sum::<Cx>()
            .re
    }

    fn gradient(&self, z: &CxPoint) -> CxVector {
        (0..self.dim).map(|j| self.dz(z, j).conj() * 2.0).collect()
    }

    fn real_hessian(&self, z: &CxPoint) -> Option<DMatrix<f64>> {
        let n = self.dim;
        let a = DMatrix::from_fn(n, n, |j, k| self.dz_dz(z, j, k));
        let h = DMatrix::from_fn(n, n, |j, k| self.dz_dzbar(z, j, k));
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                out[(2 * j, 2 * k)] = 2.0 * a[(j, k)].re + 2.0 * h[(j, k)].re;
                out[(2 * j + 1, 2 * k + 1)] = -2.0 * a[(j, k)].re + 2.0 * h[(j, k)].re;
                out[(2 * j, 2 * k + 1)] = -2.0 * a[(j, k)].im + 2.0 * h[(j, k)].im;
                out[(2 * k + 1, 2 * j)] = out[(2 * j, 2 * k + 1)];
            }
        }
        Some(out)
    }

    fn complex_hessian(&self, z: &CxPoint) -> Option<DMatrix<Cx>> {
        Some(DMatrix::from_fn(self.dim, self.dim, |j, k| self.dz_dzbar(z, j, k)))
    }
}

/// A defining function given only by its values; derivatives fall back to
/// finite differences.
pub struct FnDefiningFunction<F> {
    dim: usize,
    f: F,
}

impl<F> FnDefiningFunction<F>
where
    F: Fn(&CxPoint) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnDefiningFunction { dim, f }
    }
}

impl<F> fmt::Debug for FnDefiningFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDefiningFunction")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl<F> DefiningFunction for FnDefiningFunction<F>
where
    F: Fn(&CxPoint) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &CxPoint) -> f64 {
        (self.f)(z)
    }
}
