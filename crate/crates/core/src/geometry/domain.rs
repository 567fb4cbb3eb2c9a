use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::defining::{mat_vec, BallFunction, DefiningFunction, Ellipsoid, Polynomial, ShellFunction};
use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};

/// Which model a [`DomainModel`] was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    Ball { radius: f64 },
    Shell { outer: f64 },
    Ellipsoid { axes: Vec<f64> },
    PerturbedBall { eps: f64, k: u32 },
    Custom { source: String },
}

/// Closed-form geometry available for projection and directional distance.
#[derive(Clone, Debug)]
pub(crate) enum Closed {
    Ball { radius: f64 },
    Shell { outer: f64 },
    Ellipsoid(Ellipsoid),
    None,
}

/// A bounded domain `D = {s < 0}` in ℂⁿ.
#[derive(Clone)]
pub struct DomainModel {
    pub kind: DomainKind,
    pub dim: usize,
    pub function: Arc<dyn DefiningFunction>,
    /// `D ⊂ B(0, bounding_radius)`.
    pub bounding_radius: f64,
    /// Width of the boundary collar used for sampling.
    pub collar: f64,
    /// Largest depth at which boundary frames are computed.
    pub frame_limit: f64,
    pub(crate) closed: Closed,
}

impl fmt::Debug for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainModel")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("bounding_radius", &self.bounding_radius)
            .field("collar", &self.collar)
            .finish()
    }
}

const COLLAR_FRACTION: f64 = 0.1;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

impl DomainModel {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(DomainModel {
            kind: DomainKind::Ball { radius },
            dim,
            function: Arc::new(BallFunction { dim, radius }),
            bounding_radius: radius,
            collar: COLLAR_FRACTION * radius,
            frame_limit: radius,
            closed: Closed::Ball { radius },
        })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(dim, 1.0).expect("valid unit ball")
    }

    /// `B(0, R) \ closed B(0, 1)`.
    pub fn shell(dim: usize, outer: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(outer > 1.0) {
            return Err(Error::InvalidInput(format!("shell needs R > 1, got {outer}")));
        }
        Ok(DomainModel {
            kind: DomainKind::Shell { outer },
            dim,
            function: Arc::new(ShellFunction { dim, outer }),
            bounding_radius: outer,
            collar: COLLAR_FRACTION * outer,
            frame_limit: 0.5 * (outer - 1.0),
            closed: Closed::Shell { outer },
        })
    }

    /// Axis-aligned complex ellipsoid `Σ |z_j|²/a_j² < 1`.
    pub fn ellipsoid(axes: Vec<f64>) -> Result<Self> {
        let n = axes.len();
        Self::from_ellipsoid(Ellipsoid::new(axes, CxVector::zeros(n), None))
    }

    pub fn from_ellipsoid(e: Ellipsoid) -> Result<Self> {
        let dim = e.axes.len();
        check_dim(dim)?;
        if e.axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("ellipsoid axes must be positive".into()));
        }
        let bounding = e.center.norm() + e.max_axis();
        Ok(DomainModel {
            kind: DomainKind::Ellipsoid { axes: e.axes.clone() },
            dim,
            function: Arc::new(e.clone()),
            bounding_radius: bounding,
            collar: COLLAR_FRACTION * bounding,
            frame_limit: e.min_axis().powi(2) / e.max_axis(),
            closed: Closed::Ellipsoid(e),
        })
    }

    /// `|z|² − 1 + ε Re(z_1^k) < 0`.
    pub fn perturbed_ball(dim: usize, eps: f64, k: u32) -> Result<Self> {
        check_dim(dim)?;
        if !(eps.abs() < 1.0) || k == 0 {
            return Err(Error::InvalidInput("perturbed ball needs |eps| < 1 and k ≥ 1".into()));
        }
        let poly = Polynomial::perturbed_ball(dim, eps, k);
        // |z|² ≤ 1 + |ε||z|^k has no solutions beyond this radius when |z| ≥ 1.
        let mut r = 1.0_f64;
        while r * r <= 1.0 + eps.abs() * r.powi(k as i32) {
            r *= 1.01;
        }
        Ok(Self::generic(DomainKind::PerturbedBall { eps, k }, Arc::new(poly), r))
    }

    /// A domain given by a polynomial coefficient file.
    pub fn custom(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let poly = Polynomial::from_file(&path)?;
        let source = path.display().to_string();
        Self::from_function(DomainKind::Custom { source }, Arc::new(poly))
    }

    /// Wraps an arbitrary defining function. The bounding radius is found by
    /// doubling until `s > 0` on a sample of the sphere.
    pub fn from_function(kind: DomainKind, function: Arc<dyn DefiningFunction>) -> Result<Self> {
        let dim = function.dim();
        check_dim(dim)?;
        let mut rng = crate::sampling::sample_rng(0x5eed, 0);
        let dirs: Vec<CxVector> = (0..512)
            .map(|_| CxVector::from_real_interleaved(&crate::sampling::unit_sphere_point(&mut rng, 2 * dim)))
            .collect();
        let mut r = 0.5;
        while !dirs.iter().all(|d| function.value(&(d * r)) > 0.0) {
            r *= 2.0;
            if r > 1e6 {
                return Err(Error::InvalidInput("domain does not look bounded".into()));
            }
        }
        Ok(Self::generic(kind, function, r))
    }

    fn generic(kind: DomainKind, function: Arc<dyn DefiningFunction>, bounding: f64) -> Self {
        DomainModel {
            kind,
            dim: function.dim(),
            function,
            bounding_radius: bounding,
            collar: COLLAR_FRACTION * bounding,
            frame_limit: COLLAR_FRACTION * bounding,
            closed: Closed::None,
        }
    }

    pub fn with_collar(mut self, collar: f64) -> Self {
        self.collar = collar;
        if matches!(self.closed, Closed::None) {
            self.frame_limit = collar;
        }
        self
    }

    /// Parses `ball:r=1`, `shell:R=4`, `ellipsoid:a=1,4`,
    /// `perturbed-ball:eps=0.1,k=3` or `custom:<path>`. Ball-like kinds
    /// accept `n=<dim>` (default 2).
    pub fn parse(spec: &str) -> Result<Self> {
        let err = |reason: &str| Error::DomainParse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        if name == "custom" {
            if rest.is_empty() {
                return Err(err("custom domain needs a coefficient file path"));
            }
            return Self::custom(rest);
        }
        // key=value list; bare values continue the previous key (a=1,4).
        let mut keys: Vec<(String, Vec<f64>)> = Vec::new();
        for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = match tok.split_once('=') {
                Some((k, v)) => (Some(k.trim()), v.trim()),
                None => (None, tok),
            };
            let v: f64 = v.parse().map_err(|_| err(&format!("bad number `{v}`")))?;
            match k {
                Some(k) => keys.push((k.to_string(), vec![v])),
                None => keys.last_mut().ok_or_else(|| err("value without a key"))?.1.push(v),
            }
        }
        let get = |k: &str| keys.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
        let scalar = |k: &str, default: Option<f64>| -> Result<f64> {
            match get(k) {
                Some(v) if v.len() == 1 => Ok(v[0]),
                Some(_) => Err(err(&format!("`{k}` takes one value"))),
                None => default.ok_or_else(|| err(&format!("missing `{k}`"))),
            }
        };
        let dim = scalar("n", Some(2.0))?;
        if dim.fract() != 0.0 || dim < 2.0 {
            return Err(err("n must be an integer ≥ 2"));
        }
        let dim = dim as usize;
        let known: &[&str] = match name {
            "ball" => &["r", "n"],
            "shell" => &["R", "n"],
            "ellipsoid" => &["a"],
            "perturbed-ball" => &["eps", "k", "n"],
            _ => return Err(err("unknown domain kind")),
        };
        if let Some((k, _)) = keys.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(err(&format!("unknown key `{k}`")));
        }
        let built = match name {
            "ball" => Self::ball(dim, scalar("r", Some(1.0))?),
            "shell" => Self::shell(dim, scalar("R", None)?),
            "ellipsoid" => Self::ellipsoid(get("a").ok_or_else(|| err("missing `a`"))?),
            _ => {
                let k = scalar("k", None)?;
                if k.fract() != 0.0 || k < 1.0 {
                    return Err(err("k must be a positive integer"));
                }
                Self::perturbed_ball(dim, scalar("eps", None)?, k as u32)
            }
        };
        built.map_err(|e| err(&e.to_string()))
    }

    /// Canonical spec string.
    pub fn spec(&self) -> String {
        match &self.kind {
            DomainKind::Ball { radius } => format!("ball:r={radius},n={}", self.dim),
            DomainKind::Shell { outer } => format!("shell:R={outer},n={}", self.dim),
            DomainKind::Ellipsoid { axes } => format!(
                "ellipsoid:a={}",
                axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
            ),
            DomainKind::PerturbedBall { eps, k } => {
                format!("perturbed-ball:eps={eps},k={k},n={}", self.dim)
            }
            DomainKind::Custom { source } => format!("custom:{source}"),
        }
    }

    pub fn value(&self, z: &CxPoint) -> f64 {
        self.function.value(z)
    }

    pub fn contains(&self, z: &CxPoint) -> bool {
        self.function.value(z) < 0.0
    }

    /// True for built-ins whose projection is in closed form.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self.closed, Closed::None)
    }

    /// Radius of the largest ball that rolls inside along the whole
    /// boundary, when known in closed form.
    pub fn reach(&self) -> Option<f64> {
        match &self.closed {
            Closed::Ball { radius } => Some(*radius),
            Closed::Shell { outer } => Some(0.5 * (outer - 1.0)),
            Closed::Ellipsoid(e) => Some(e.min_axis().powi(2) / e.max_axis()),
            Closed::None => None,
        }
    }

    /// Image of a ball or ellipsoid under `z ↦ Mz + b` (an ellipsoid).
    pub fn affine_image(&self, m: &DMatrix<Cx>, b: &CxVector) -> Result<Self> {
        let e = match &self.closed {
            Closed::Ball { radius } => Ellipsoid::axis_aligned(vec![*radius; self.dim]),
            Closed::Ellipsoid(e) => e.clone(),
            _ => {
                return Err(Error::InvalidInput(
                    "affine images are supported for balls and ellipsoids".into(),
                ))
            }
        };
        let inv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("affine map is singular".into()))?;
        let form = inv.adjoint() * e.form() * &inv;
        let form = (&form + form.adjoint()) * Cx::new(0.5, 0.0);
        let eig = form.symmetric_eigen();
        let axes: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
        let center = &mat_vec(m, &e.center) + b;
        Self::from_ellipsoid(Ellipsoid::new(axes, center, Some(eig.eigenvectors)))
    }
}
