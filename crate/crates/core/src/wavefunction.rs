//! Real test functions `phi`, `psi` for matrix elements.
//!
//! Two kinds are supported: compactly supported functions, which vanish
//! outside their box, and Gaussian-weighted functions, which are integrated
//! over a finite box chosen so the discarded tail is negligible.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quadrature::TensorRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavefunctionKind {
    Compact,
    GaussianWeighted,
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return invalid("support box corners must have the same positive dimension");
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return invalid("support box needs finite lower < upper on every axis");
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Relative L2 tail mass discarded when a Gaussian is cut to a box.
pub const GAUSSIAN_TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Clone)]
pub struct Wavefunction {
    dim: usize,
    kind: WavefunctionKind,
    support: Option<SupportBox>,
    profile: Profile,
    label: String,
}

impl fmt::Debug for Wavefunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Wavefunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("support", &self.support)
            .finish()
    }
}

impl Wavefunction {
    /// Smooth bump `prod_i exp(-1 / (1 - r_i^2))` with `r = (x - center) / width`,
    /// supported on `[center - width, center + width]`.
    pub fn bump(center: Vec<f64>, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return invalid(format!("bump width must be > 0, got {width}"));
        }
        let lower = center.iter().map(|c| c - width).collect();
        let upper = center.iter().map(|c| c + width).collect();
        let support = SupportBox::new(lower, upper)?;
        let dim = center.len();
        let label = format!("bump(center={center:?}, width={width})");
        Ok(Self {
            dim,
            kind: WavefunctionKind::Compact,
            support: Some(support),
            profile: Arc::new(move |x: &[f64]| {
                x.iter()
                    .zip(&center)
                    .map(|(v, c)| {
                        let r = (v - c) / width;
                        if r.abs() < 1.0 {
                            (-1.0 / (1.0 - r * r)).exp()
                        } else {
                            0.0
                        }
                    })
                    .product()
            }),
            label,
        })
    }

    /// `exp(-|x - center|^2 / (2 width^2))`, cut to the cube of half-width
    /// `radius`. With `radius = None` the radius is chosen so the discarded
    /// L2 mass is below [`GAUSSIAN_TAIL_TOLERANCE`].
    pub fn gaussian(center: Vec<f64>, width: f64, radius: Option<f64>) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return invalid(format!("gaussian width must be > 0, got {width}"));
        }
        if center.is_empty() {
            return invalid("dimension must be positive");
        }
        let dim = center.len();
        let radius = match radius {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(r) => return invalid(format!("truncation radius must be > 0, got {r}")),
            None => width * gaussian_tail_cutoff(GAUSSIAN_TAIL_TOLERANCE / dim as f64),
        };
        let lower = center.iter().map(|c| c - radius).collect();
        let upper = center.iter().map(|c| c + radius).collect();
        let support = SupportBox::new(lower, upper)?;
        let label = format!("gaussian(center={center:?}, width={width}, radius={radius})");
        Ok(Self {
            dim,
            kind: WavefunctionKind::GaussianWeighted,
            support: Some(support),
            profile: Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().zip(&center).map(|(v, c)| (v - c) * (v - c)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }),
            label,
        })
    }

    /// Arbitrary function with a declared compact support box.
    pub fn compact<F>(support: SupportBox, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim: support.dim(),
            kind: WavefunctionKind::Compact,
            support: Some(support),
            profile: Arc::new(f),
            label: "custom-compact".into(),
        }
    }

    /// Arbitrary function with Gaussian decay. Matrix elements need a
    /// truncation box; without one they are rejected.
    pub fn gaussian_weighted<F>(dim: usize, support: Option<SupportBox>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if let Some(b) = &support {
            if b.dim() != dim {
                return invalid("support box dimension mismatch");
            }
        }
        Ok(Self {
            dim,
            kind: WavefunctionKind::GaussianWeighted,
            support,
            profile: Arc::new(f),
            label: "custom-gaussian-weighted".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> WavefunctionKind {
        self.kind
    }

    pub fn support(&self) -> Option<&SupportBox> {
        self.support.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The integration box, or an error if none was declared.
    pub fn integration_box(&self) -> Result<&SupportBox> {
        self.support.as_ref().ok_or_else(|| {
            crate::Error::InvalidArgument(format!("{} has unbounded support and no truncation radius", self.label))
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if self.kind == WavefunctionKind::Compact {
            if let Some(b) = &self.support {
                if !b.contains(x) {
                    return 0.0;
                }
            }
        }
        (self.profile)(x)
    }

    /// `int |f|^2` over the integration box by tensor Gauss-Legendre.
    pub fn norm_squared(&self, nodes_per_axis: usize) -> Result<f64> {
        let b = self.integration_box()?;
        let rule = TensorRule::new(&b.lower, &b.upper, nodes_per_axis)?;
        let n = rule.integrate(|x| {
            let v = self.evaluate(x);
            v * v
        });
        if !n.is_finite() {
            return Err(crate::Error::Numerical(format!(
                "{} has non-finite L2 norm",
                self.label
            )));
        }
        Ok(n)
    }
}

/// Smallest `z` with `exp(-z^2) / (z sqrt(pi)) <= tol`, an upper bound for
/// `erfc(z)`, the relative L2 tail of a unit-width Gaussian beyond `z` on
/// one axis.
fn gaussian_tail_cutoff(tol: f64) -> f64 {
    let bound = |z: f64| (-z * z).exp() / (z * std::f64::consts::PI.sqrt());
    let (mut lo, mut hi) = (0.5, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
