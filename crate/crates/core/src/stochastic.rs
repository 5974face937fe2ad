//! Brownian bridge sampling on a uniform grid over `[0, 1]`.
//!
//! Paths are built from Brownian increments and then detrended,
//! `alpha(s) = b(s) - s b(1)`, which reproduces the bridge law exactly on
//! the grid points. Randomness comes from ChaCha8 streams keyed by
//! [`RngSeed`], so `(seed, stream_id)` fully determines a path sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Seed plus stream selector for a reproducible ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child seed for sub-task `child` (a worker chunk, a quadrature node).
    ///
    /// The key is kept and only the stream is remixed, so children of one
    /// parent are distinct ChaCha streams under the same key.
    pub fn derive(self, child: u64) -> Self {
        let mixed = splitmix64(self.stream_id ^ splitmix64(child.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        Self {
            seed: self.seed,
            stream_id: mixed,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One sampled bridge realization, stored row-major: point `k` occupies
/// `values[k * dim..(k + 1) * dim]` and sits at time `k / n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    dim: usize,
    n_steps: usize,
    values: Vec<f64>,
}

impl BridgePath {
    /// The flat path `alpha = 0`.
    pub fn zero(dim: usize, n_steps: usize) -> Result<Self> {
        check_shape(dim, n_steps)?;
        Ok(Self {
            dim,
            n_steps,
            values: vec![0.0; dim * (n_steps + 1)],
        })
    }

    /// Wraps explicit values; the endpoints must be pinned at zero.
    pub fn from_values(dim: usize, n_steps: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(dim, n_steps)?;
        if values.len() != dim * (n_steps + 1) {
            return invalid(format!(
                "expected {} values for dim={dim}, n_steps={n_steps}, got {}",
                dim * (n_steps + 1),
                values.len()
            ));
        }
        let path = Self { dim, n_steps, values };
        if path.point(0).iter().chain(path.point(n_steps)).any(|&v| v != 0.0) {
            return invalid("bridge endpoints must be exactly zero");
        }
        Ok(path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position at grid time `k / n_steps`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The path `-alpha`, which has the same law.
    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            n_steps: self.n_steps,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Restriction to every `stride`-th grid point. The result is an exact
    /// bridge sample on the coarser grid.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.n_steps.is_multiple_of(stride) {
            return invalid(format!("stride {stride} does not divide n_steps {}", self.n_steps));
        }
        let n = self.n_steps / stride;
        let mut values = Vec::with_capacity((n + 1) * self.dim);
        for k in 0..=n {
            values.extend_from_slice(self.point(k * stride));
        }
        Ok(Self {
            dim: self.dim,
            n_steps: n,
            values,
        })
    }

    /// Overwrites `self` with a fresh bridge sample drawn from `rng`.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (dim, n) = (self.dim, self.n_steps);
        let sd = (1.0 / n as f64).sqrt();
        self.values[..dim].fill(0.0);
        for k in 1..=n {
            for i in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                self.values[k * dim + i] = self.values[(k - 1) * dim + i] + sd * z;
            }
        }
        // detrend: alpha(k/n) = b(k/n) - (k/n) b(1)
        let end: Vec<f64> = self.point(n).to_vec();
        for k in 1..n {
            let s = k as f64 / n as f64;
            for (v, e) in self.values[k * dim..(k + 1) * dim].iter_mut().zip(&end) {
                *v -= s * e;
            }
        }
        self.values[n * dim..].fill(0.0);
    }
}

fn check_shape(dim: usize, n_steps: usize) -> Result<()> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    if n_steps == 0 {
        return invalid("n_steps must be at least 1");
    }
    Ok(())
}

/// Draws one `dim`-dimensional bridge on the grid `{k / n_steps}`.
pub fn sample_bridge<R: Rng + ?Sized>(dim: usize, n_steps: usize, rng: &mut R) -> Result<BridgePath> {
    let mut path = BridgePath::zero(dim, n_steps)?;
    path.resample(rng);
    Ok(path)
}

/// `E[alpha(s) alpha(u)] = min(s, u) (1 - max(s, u))` for one coordinate.
pub fn bridge_covariance(s: f64, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&u) {
        return invalid(format!("bridge times must lie in [0, 1], got ({s}, {u})"));
    }
    Ok(s.min(u) * (1.0 - s.max(u)))
}

/// A value that may be an infinite expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpMoment {
    Finite(f64),
    Divergent,
}

impl ExpMoment {
    pub fn is_divergent(&self) -> bool {
        matches!(self, ExpMoment::Divergent)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExpMoment::Finite(v) => Some(v),
            ExpMoment::Divergent => None,
        }
    }

    /// `self * factor`, keeping divergence.
    pub fn scale(self, factor: f64) -> Self {
        match self {
            ExpMoment::Finite(v) => ExpMoment::Finite(v * factor),
            ExpMoment::Divergent => ExpMoment::Divergent,
        }
    }
}

/// `E[exp(eps X^2)]` for a centred Gaussian `X` with the given variance.
///
/// Finite iff `eps * variance < 1/2`, where it equals
/// `(1 - 2 eps variance)^(-1/2)`.
pub fn gaussian_exp_moment(eps: f64, variance: f64) -> Result<ExpMoment> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return invalid(format!("variance must be finite and >= 0, got {variance}"));
    }
    if !eps.is_finite() {
        return invalid(format!("eps must be finite, got {eps}"));
    }
    let product = eps * variance;
    if product >= 0.5 {
        return Ok(ExpMoment::Divergent);
    }
    Ok(ExpMoment::Finite((1.0 - 2.0 * product).powf(-0.5)))
}
