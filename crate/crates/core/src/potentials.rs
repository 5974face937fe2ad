//! Potentials with quadratic lower-bound certificates.
//!
//! A certificate maps `eps > 0` to a constant `C_eps >= 0` with
//! `V(x) >= -eps |x|^2 - C_eps` everywhere. Certificates are analytic
//! contracts; [`certify`] only spot-checks them.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// A real potential on `R^dim`, safe to evaluate from many threads.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> String;

    fn value(&self, x: &[f64]) -> f64;

    /// `C_eps` with `V(x) >= -eps |x|^2 - C_eps`, or `None` if the potential
    /// has no such constant at this `eps`.
    fn growth_constant(&self, eps: f64) -> Option<f64>;
}

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type CertificateFn = Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Zero,
    /// `1/2 omega^2 |x|^2`
    Harmonic {
        omega: f64,
    },
    /// `F . x`
    Stark {
        field: Vec<f64>,
    },
    /// `-c |x|^2`
    InvertedQuadratic {
        c: f64,
    },
    /// `c` everywhere
    Constant {
        c: f64,
    },
    Custom {
        f: PointFn,
        certificate: CertificateFn,
    },
}

/// Catalog potential: zero, harmonic, Stark, inverted quadratic, constant,
/// or a user-supplied continuous function with its certificate.
#[derive(Clone)]
pub struct PotentialSpec {
    name: String,
    dim: usize,
    shape: Shape,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    Ok(())
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl PotentialSpec {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            name: "zero".into(),
            dim,
            shape: Shape::Zero,
        })
    }

    pub fn harmonic(dim: usize, omega: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(omega > 0.0) || !omega.is_finite() {
            return invalid(format!("harmonic omega must be > 0, got {omega}"));
        }
        Ok(Self {
            name: format!("harmonic(omega={omega})"),
            dim,
            shape: Shape::Harmonic { omega },
        })
    }

    /// Linear potential `F . x`; the dimension is the length of `field`.
    pub fn stark(field: Vec<f64>) -> Result<Self> {
        check_dim(field.len())?;
        if field.iter().any(|v| !v.is_finite()) {
            return invalid("Stark field must be finite");
        }
        Ok(Self {
            name: format!("stark(F={field:?})"),
            dim: field.len(),
            shape: Shape::Stark { field },
        })
    }

    /// `-c |x|^2` with `c >= 0`. It has a certificate only for `eps >= c`,
    /// so for `c > 0` it lies outside the class where the bound holds for
    /// every `eps`.
    pub fn inverted_quadratic(dim: usize, c: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(c >= 0.0) || !c.is_finite() {
            return invalid(format!("inverted quadratic c must be >= 0, got {c}"));
        }
        Ok(Self {
            name: format!("inverted-quadratic(c={c})"),
            dim,
            shape: Shape::InvertedQuadratic { c },
        })
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        check_dim(dim)?;
        if !c.is_finite() {
            return invalid("constant potential must be finite");
        }
        Ok(Self {
            name: format!("constant(c={c})"),
            dim,
            shape: Shape::Constant { c },
        })
    }

    /// Continuous potential with a known lower bound `inf V >= lower`.
    pub fn bounded_below<F>(name: &str, dim: usize, lower: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !lower.is_finite() {
            return invalid("lower bound must be finite");
        }
        let c = (-lower).max(0.0);
        Self::custom(name, dim, f, move |_| Some(c))
    }

    /// Arbitrary continuous potential with a caller-supplied certificate.
    pub fn custom<F, C>(name: &str, dim: usize, f: F, certificate: C) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> Option<f64> + Send + Sync + 'static,
    {
        check_dim(dim)?;
        Ok(Self {
            name: name.to_string(),
            dim,
            shape: Shape::Custom {
                f: Arc::new(f),
                certificate: Arc::new(certificate),
            },
        })
    }

    /// Whether `V(-x) = V(x)` holds for this catalog entry.
    pub fn is_even(&self) -> bool {
        !matches!(self.shape, Shape::Stark { .. } | Shape::Custom { .. })
    }
}

impl Potential for PotentialSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Harmonic { omega } => 0.5 * omega * omega * norm_sq(x),
            Shape::Stark { field } => field.iter().zip(x).map(|(f, v)| f * v).sum(),
            Shape::InvertedQuadratic { c } => -c * norm_sq(x),
            Shape::Constant { c } => *c,
            Shape::Custom { f, .. } => f(x),
        }
    }

    fn growth_constant(&self, eps: f64) -> Option<f64> {
        if !(eps > 0.0) {
            return None;
        }
        match &self.shape {
            Shape::Zero | Shape::Harmonic { .. } => Some(0.0),
            // min over x of F.x + eps |x|^2 is -|F|^2 / (4 eps)
            Shape::Stark { field } => Some(norm_sq(field) / (4.0 * eps)),
            Shape::InvertedQuadratic { c } => (eps >= *c).then_some(0.0),
            Shape::Constant { c } => Some((-c).max(0.0)),
            Shape::Custom { certificate, .. } => certificate(eps),
        }
    }
}

/// `V_n(x) = max(V(x), -level)`.
#[derive(Clone)]
pub struct TruncatedPotential<P = PotentialSpec> {
    base: P,
    level: f64,
}

impl<P: Potential> fmt::Debug for TruncatedPotential<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedPotential")
            .field("base", &self.base.name())
            .field("level", &self.level)
            .finish()
    }
}

impl<P: Potential> TruncatedPotential<P> {
    pub fn base(&self) -> &P {
        &self.base
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

/// Truncates `v` from below at `-level`.
pub fn truncate<P: Potential + Clone>(v: &P, level: f64) -> Result<TruncatedPotential<P>> {
    if !(level >= 0.0) {
        return invalid(format!("truncation level must be >= 0, got {level}"));
    }
    Ok(TruncatedPotential { base: v.clone(), level })
}

impl<P: Potential> Potential for TruncatedPotential<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn name(&self) -> String {
        format!("{}|n={}", self.base.name(), self.level)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x).max(-self.level)
    }

    /// `V_n >= -level` and `V_n >= V`, so both constants are valid; the
    /// smaller one is uniform in the level, which is what the a priori
    /// bound along the truncation sequence needs.
    fn growth_constant(&self, eps: f64) -> Option<f64> {
        if !(eps > 0.0) {
            return None;
        }
        Some(match self.base.growth_constant(eps) {
            Some(c) => c.min(self.level),
            None => self.level,
        })
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn name(&self) -> String {
        (**self).name()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn growth_constant(&self, eps: f64) -> Option<f64> {
        (**self).growth_constant(eps)
    }
}

impl<P: Potential + ?Sized> Potential for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn name(&self) -> String {
        (**self).name()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn growth_constant(&self, eps: f64) -> Option<f64> {
        (**self).growth_constant(eps)
    }
}

/// Outcome of spot-checking `V(x) + eps |x|^2 + C_eps >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub eps: f64,
    /// Constant that was checked; `None` when the potential offers none.
    pub c_eps: Option<f64>,
    pub passed: bool,
    /// Smallest margin `V(x) + eps |x|^2 + C_eps` over the sample points
    /// (with `C_eps = 0` when no constant exists).
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
}

/// Spot-checks the potential's own certificate at `eps`.
pub fn certify<P: Potential + ?Sized>(v: &P, eps: f64, points: &[Vec<f64>]) -> Result<CertificateReport> {
    let c = v.growth_constant(eps);
    let mut report = certify_claim(v, eps, c.unwrap_or(0.0), points)?;
    if c.is_none() {
        report.c_eps = None;
        report.passed = false;
    }
    Ok(report)
}

/// Spot-checks an explicitly claimed constant `c_eps`.
pub fn certify_claim<P: Potential + ?Sized>(
    v: &P,
    eps: f64,
    c_eps: f64,
    points: &[Vec<f64>],
) -> Result<CertificateReport> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be > 0, got {eps}"));
    }
    if points.is_empty() {
        return invalid("certify needs at least one sample point");
    }
    let mut worst = f64::INFINITY;
    let mut worst_point = points[0].clone();
    for p in points {
        if p.len() != v.dim() {
            return invalid(format!(
                "sample point has dim {}, potential has dim {}",
                p.len(),
                v.dim()
            ));
        }
        let margin = v.value(p) + eps * norm_sq(p) + c_eps;
        if margin < worst {
            worst = margin;
            worst_point = p.clone();
        }
    }
    Ok(CertificateReport {
        eps,
        c_eps: Some(c_eps),
        passed: worst >= 0.0,
        worst_margin: worst,
        worst_point,
    })
}
