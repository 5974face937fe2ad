use rayon::prelude::*;

use super::{action_on_grid, check_endpoints};
use crate::error::{invalid, Result};
use crate::potentials::Potential;
use crate::stochastic::{BridgePath, RngSeed};

/// Paths per chunk. Each chunk owns one derived stream.
pub(crate) const CHUNK_SIZE: usize = 1024;

/// Monte Carlo settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub n_steps: usize,
    /// Number of heaviest samples tracked for the heavy-tail check.
    pub top_k: usize,
    /// Divergence is suspected when the `top_k` heaviest samples carry more
    /// than this fraction of the total.
    pub heavy_fraction: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            n_steps: 64,
            top_k: 10,
            heavy_fraction: 0.5,
        }
    }
}

impl McConfig {
    pub fn new(n_samples: usize, n_steps: usize) -> Self {
        Self {
            n_samples,
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return invalid("n_samples must be positive");
        }
        if self.n_steps == 0 {
            return invalid("n_steps must be positive");
        }
        if self.top_k == 0 {
            return invalid("top_k must be positive");
        }
        if !(self.heavy_fraction > 0.0 && self.heavy_fraction <= 1.0) {
            return invalid(format!(
                "heavy_fraction must lie in (0, 1], got {}",
                self.heavy_fraction
            ));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of `Q(x, y; V, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub n_steps: usize,
    /// Heuristic flag for an infinite expectation: a few samples dominate
    /// the sum, or some sample overflowed.
    pub divergence_suspected: bool,
    /// Share of the sum carried by the `top_k` heaviest samples.
    pub top_k_share: f64,
}

/// Estimates for several potentials evaluated on the same paths.
#[derive(Debug, Clone, PartialEq)]
pub struct QFamily {
    pub estimates: Vec<QEstimate>,
    /// Standard errors of `estimates[i + 1].mean - estimates[i].mean`,
    /// from the paired per-path differences.
    pub increment_std_errors: Vec<f64>,
}

/// Streaming statistics; mean from a plain sum so that pathwise ordering
/// of samples carries over exactly to the means.
#[derive(Debug, Clone, Default)]
pub(crate) struct Moments {
    pub count: u64,
    pub sum: f64,
    welford_mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, w: f64) {
        self.count += 1;
        self.sum += w;
        let delta = w - self.welford_mean;
        self.welford_mean += delta / self.count as f64;
        self.m2 += delta * (w - self.welford_mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.welford_mean - self.welford_mean;
        self.welford_mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.sum += other.sum;
        self.count += other.count;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = (self.m2 / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct MemberStats {
    pub moments: Moments,
    /// Heaviest samples, descending.
    top: Vec<f64>,
    nonfinite: bool,
}

impl MemberStats {
    fn push(&mut self, w: f64, top_k: usize) {
        if !w.is_finite() {
            self.nonfinite = true;
        }
        self.moments.push(w);
        self.insert_top(w, top_k);
    }

    fn insert_top(&mut self, w: f64, top_k: usize) {
        if self.top.len() == top_k && self.top.last().is_some_and(|&m| w <= m) {
            return;
        }
        let pos = self.top.partition_point(|&v| v >= w);
        self.top.insert(pos, w);
        self.top.truncate(top_k);
    }

    fn merge(&mut self, other: &MemberStats, top_k: usize) {
        self.moments.merge(&other.moments);
        self.nonfinite |= other.nonfinite;
        for &w in &other.top {
            self.insert_top(w, top_k);
        }
    }

    pub fn to_estimate(&self, cfg: &McConfig, n_steps: usize) -> QEstimate {
        let n = self.moments.count as f64;
        let total = self.moments.sum;
        let top: f64 = self.top.iter().sum();
        let share = if total > 0.0 && total.is_finite() {
            top / total
        } else {
            1.0
        };
        // with top_k / n >= heavy_fraction even equal samples would trip the check
        let informative = (cfg.top_k as f64) / n < cfg.heavy_fraction;
        let divergence_suspected = self.nonfinite || !total.is_finite() || (informative && share > cfg.heavy_fraction);
        let (mean, std_error) = if self.nonfinite || !total.is_finite() {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (self.moments.mean(), self.moments.std_error())
        };
        QEstimate {
            mean,
            std_error,
            n_samples: self.moments.count as usize,
            n_steps,
            divergence_suspected,
            top_k_share: share,
        }
    }
}

/// Per-member statistics plus paired statistics of consecutive members.
#[derive(Debug, Clone, Default)]
pub(crate) struct FamilyStats {
    pub members: Vec<MemberStats>,
    pub increments: Vec<Moments>,
}

impl FamilyStats {
    fn new(n_members: usize) -> Self {
        Self {
            members: vec![MemberStats::default(); n_members],
            increments: vec![Moments::default(); n_members.saturating_sub(1)],
        }
    }

    fn merge(&mut self, other: &FamilyStats, top_k: usize) {
        for (a, b) in self.members.iter_mut().zip(&other.members) {
            a.merge(b, top_k);
        }
        for (a, b) in self.increments.iter_mut().zip(&other.increments) {
            a.merge(b);
        }
    }
}

/// Draws `cfg.n_samples` bridges of `path_steps` steps and feeds each to
/// `weights`, which writes one sample per family member.
pub(crate) fn run_paths<F>(
    dim: usize,
    path_steps: usize,
    n_members: usize,
    cfg: &McConfig,
    rng: RngSeed,
    weights: F,
) -> FamilyStats
where
    F: Fn(&BridgePath, &mut [f64], &mut [f64]) + Sync,
{
    let n_chunks = cfg.n_samples.div_ceil(CHUNK_SIZE);
    let chunks: Vec<FamilyStats> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(cfg.n_samples - c * CHUNK_SIZE);
            let mut rng = rng.derive(c as u64).rng();
            let mut path = BridgePath::zero(dim, path_steps).expect("validated shape");
            let mut out = vec![0.0; n_members];
            let mut scratch = vec![0.0; dim];
            let mut stats = FamilyStats::new(n_members);
            for _ in 0..count {
                path.resample(&mut rng);
                weights(&path, &mut out, &mut scratch);
                for (m, &w) in stats.members.iter_mut().zip(&out) {
                    m.push(w, cfg.top_k);
                }
                for (i, inc) in stats.increments.iter_mut().enumerate() {
                    inc.push(out[i + 1] - out[i]);
                }
            }
            stats
        })
        .collect();
    let mut total = FamilyStats::new(n_members);
    for c in &chunks {
        total.merge(c, cfg.top_k);
    }
    total
}

/// Monte Carlo estimate of `Q(x, y; V, t)` from `mc.n_samples` bridges.
pub fn estimate_q<P: Potential + ?Sized>(
    x: &[f64],
    y: &[f64],
    v: &P,
    t: f64,
    mc: &McConfig,
    rng: RngSeed,
) -> Result<QEstimate> {
    let family = estimate_q_family(x, y, &[&v as &dyn Potential], t, mc, rng)?;
    Ok(family.estimates[0])
}

/// `Q` for several potentials of equal dimension on common random numbers:
/// every member sees the same bridge paths.
pub fn estimate_q_family(
    x: &[f64],
    y: &[f64],
    potentials: &[&dyn Potential],
    t: f64,
    mc: &McConfig,
    rng: RngSeed,
) -> Result<QFamily> {
    mc.validate()?;
    let Some(first) = potentials.first() else {
        return invalid("potential family is empty");
    };
    let dim = first.dim();
    if potentials.iter().any(|p| p.dim() != dim) {
        return invalid("all potentials in a family must share one dimension");
    }
    check_endpoints(dim, x, y, t)?;
    let stats = run_paths(dim, mc.n_steps, potentials.len(), mc, rng, |path, out, pos| {
        for (o, v) in out.iter_mut().zip(potentials) {
            *o = (-action_on_grid(path, 1, *v, x, y, t, pos)).exp();
        }
    });
    Ok(QFamily {
        estimates: stats.members.iter().map(|m| m.to_estimate(mc, mc.n_steps)).collect(),
        increment_std_errors: stats.increments.iter().map(Moments::std_error).collect(),
    })
}
