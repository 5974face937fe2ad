//! Time-step refinement of `Q` on common paths.
//!
//! All resolutions are evaluated on one set of bridges sampled at the
//! finest resolution; coarser grids take every `stride`-th point, which is
//! an exact bridge sample on the coarse grid. Differences between
//! resolutions then carry only the paired noise.

use super::estimator::{run_paths, McConfig, Moments, QEstimate};
use super::{action_on_grid, check_endpoints};
use crate::error::{invalid, Result};
use crate::potentials::Potential;
use crate::stochastic::RngSeed;

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStep {
    pub n_steps: usize,
    pub estimate: QEstimate,
}

/// `Q(finer) - Q(coarser)` for consecutive resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionDifference {
    pub coarse_steps: usize,
    pub fine_steps: usize,
    pub value: f64,
    pub std_error: f64,
}

impl ResolutionDifference {
    /// `|value| / std_error`, zero when both vanish.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.value.abs() / self.std_error
        } else if self.value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub steps: Vec<RefinementStep>,
    pub differences: Vec<ResolutionDifference>,
    /// Least-squares slope of `-ln|d|` against `ln n_coarse`; `None` with
    /// fewer than two nonzero differences.
    pub empirical_order: Option<f64>,
}

impl RefinementReport {
    pub fn max_z_score(&self) -> f64 {
        self.differences
            .iter()
            .map(ResolutionDifference::z_score)
            .fold(0.0, f64::max)
    }

    /// Local orders `log(|d_k| / |d_{k+1}|) / log(n_{k+1} / n_k)`.
    pub fn local_orders(&self) -> Vec<f64> {
        self.differences
            .windows(2)
            .map(|w| {
                (w[0].value.abs() / w[1].value.abs()).ln() / (w[1].coarse_steps as f64 / w[0].coarse_steps as f64).ln()
            })
            .collect()
    }
}

/// Reruns the `Q` estimate at every resolution in `schedule` (increasing,
/// each dividing the last) on common random numbers. `mc.n_steps` is
/// ignored in favour of the schedule.
#[allow(clippy::too_many_arguments)]
pub fn refine_steps<P: Potential + ?Sized>(
    x: &[f64],
    y: &[f64],
    v: &P,
    t: f64,
    mc: &McConfig,
    schedule: &[usize],
    rng: RngSeed,
) -> Result<RefinementReport> {
    if schedule.is_empty() {
        return invalid("refinement schedule is empty");
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("refinement schedule must be positive and strictly increasing");
    }
    let finest = *schedule.last().expect("nonempty");
    if schedule.iter().any(|&n| !finest.is_multiple_of(n)) {
        return invalid(format!("every resolution must divide the finest one ({finest})"));
    }
    mc.validate()?;
    check_endpoints(v.dim(), x, y, t)?;

    let strides: Vec<usize> = schedule.iter().map(|&n| finest / n).collect();
    let stats = run_paths(v.dim(), finest, schedule.len(), mc, rng, |path, out, pos| {
        for (o, &stride) in out.iter_mut().zip(&strides) {
            *o = (-action_on_grid(path, stride, v, x, y, t, pos)).exp();
        }
    });

    let steps: Vec<RefinementStep> = stats
        .members
        .iter()
        .zip(schedule)
        .map(|(m, &n)| RefinementStep {
            n_steps: n,
            estimate: m.to_estimate(mc, n),
        })
        .collect();
    let differences: Vec<ResolutionDifference> = stats
        .increments
        .iter()
        .zip(schedule.windows(2))
        .map(|(inc, w): (&Moments, _)| ResolutionDifference {
            coarse_steps: w[0],
            fine_steps: w[1],
            value: inc.mean(),
            std_error: inc.std_error(),
        })
        .collect();

    let pts: Vec<(f64, f64)> = differences
        .iter()
        .filter(|d| d.value != 0.0 && d.value.is_finite())
        .map(|d| ((d.coarse_steps as f64).ln(), d.value.abs().ln()))
        .collect();
    let empirical_order = (pts.len() >= 2).then(|| -least_squares_slope(&pts));

    Ok(RefinementReport {
        steps,
        differences,
        empirical_order,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feynman_kac::estimate_q;
    use crate::potentials::PotentialSpec;

    #[test]
    fn zero_potential_is_exact_at_every_resolution() {
        let v = PotentialSpec::zero(1).unwrap();
        let r = refine_steps(
            &[0.0],
            &[1.0],
            &v,
            1.0,
            &McConfig::new(2000, 1),
            &[4, 8, 16],
            RngSeed::new(0),
        )
        .unwrap();
        for s in &r.steps {
            assert_eq!(s.estimate.mean, 1.0);
            assert_eq!(s.estimate.std_error, 0.0);
        }
        assert!(r.differences.iter().all(|d| d.value == 0.0 && d.z_score() == 0.0));
        assert_eq!(r.empirical_order, None);
    }

    #[test]
    fn schedule_validation() {
        let v = PotentialSpec::zero(1).unwrap();
        let mc = McConfig::default();
        assert!(refine_steps(&[0.0], &[0.0], &v, 1.0, &mc, &[], RngSeed::new(0)).is_err());
        assert!(refine_steps(&[0.0], &[0.0], &v, 1.0, &mc, &[8, 4], RngSeed::new(0)).is_err());
        assert!(refine_steps(&[0.0], &[0.0], &v, 1.0, &mc, &[3, 8], RngSeed::new(0)).is_err());
    }

    #[test]
    fn finest_level_matches_direct_estimate() {
        let v = PotentialSpec::harmonic(1, 1.0).unwrap();
        let mc = McConfig::new(3000, 32);
        let r = refine_steps(&[0.2], &[0.1], &v, 1.0, &mc, &[8, 16, 32], RngSeed::new(5)).unwrap();
        let direct = estimate_q(&[0.2], &[0.1], &v, 1.0, &mc, RngSeed::new(5)).unwrap();
        assert_eq!(r.steps[2].estimate.mean, direct.mean);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 3.0].iter().map(|&x| (x, 4.0 - 2.0 * x)).collect();
        assert!((least_squares_slope(&pts) + 2.0).abs() < 1e-14);
    }
}
