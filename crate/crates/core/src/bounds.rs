//! A priori upper bounds on `Q(x, y; V, t)`.
//!
//! From `V >= -eps |x|^2 - C_eps` and
//! `|theta x + (1 - theta) y + a|^2 <= 2 (|x|^2 + |y|^2 + |a|^2)`:
//!
//! ```text
//! Q <= exp(C_eps t + 2 eps t (|x|^2 + |y|^2)) E exp(2 eps t^2 int_0^1 alpha(s)^2 ds)
//!   <= exp(C_eps t + 2 eps t (|x|^2 + |y|^2)) E exp(2 eps t^2 alpha(1/2)^2)     (Jensen)
//! ```
//!
//! finite iff `eps t^2 < 1`. With `eps = delta0 / t^2` this is closed into
//! `sqrt(2) (1 - delta0)^(-1/2) exp(C_eps t + 2 delta0 (|x|^2 + |y|^2) / t)`.

use crate::error::{invalid, Result};
use crate::feynman_kac::{estimate_q, McConfig, QEstimate};
use crate::potentials::Potential;
use crate::stochastic::{gaussian_exp_moment, ExpMoment, RngSeed};

/// Parameters of the closed-form bound; `eps = delta0 / t^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParameters {
    pub t: f64,
    pub delta0: f64,
    pub eps: f64,
    pub c_eps: f64,
}

impl BoundParameters {
    pub fn new(t: f64, delta0: f64, c_eps: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("t must be > 0, got {t}"));
        }
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return invalid(format!("delta0 must lie in (0, 1), got {delta0}"));
        }
        if !(c_eps >= 0.0) || !c_eps.is_finite() {
            return invalid(format!("C_eps must be finite and >= 0, got {c_eps}"));
        }
        Ok(Self {
            t,
            delta0,
            eps: delta0 / (t * t),
            c_eps,
        })
    }

    /// Takes `C_eps` from the potential's certificate at `eps = delta0 / t^2`.
    pub fn for_potential<P: Potential + ?Sized>(v: &P, t: f64, delta0: f64) -> Result<Self> {
        let probe = Self::new(t, delta0, 0.0)?;
        let c = v.growth_constant(probe.eps).ok_or_else(|| {
            crate::Error::InvalidArgument(format!("{} has no growth constant at eps = {}", v.name(), probe.eps))
        })?;
        Self::new(t, delta0, c)
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `sqrt(2) (1 - delta0)^(-1/2) exp(C_eps t + 2 delta0 (|x|^2 + |y|^2) / t)`.
pub fn theorem21_bound(x: &[f64], y: &[f64], params: &BoundParameters) -> Result<f64> {
    let p = BoundParameters::new(params.t, params.delta0, params.c_eps)?;
    let exponent = p.c_eps * p.t + 2.0 * p.delta0 * (norm_sq(x) + norm_sq(y)) / p.t;
    Ok(2f64.sqrt() * (1.0 - p.delta0).powf(-0.5) * exponent.exp())
}

/// The Jensen-step bound with an explicit constant `c_eps`.
pub fn jensen_chain_bound_with(x: &[f64], y: &[f64], t: f64, eps: f64, c_eps: f64) -> Result<ExpMoment> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("eps must be > 0, got {eps}"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be > 0, got {t}"));
    }
    let prefactor = (c_eps * t + 2.0 * eps * t * (norm_sq(x) + norm_sq(y))).exp();
    // Var alpha(1/2) = 1/4 is the largest marginal variance of the bridge
    Ok(gaussian_exp_moment(2.0 * eps * t * t, 0.25)?.scale(prefactor))
}

/// `exp(C_eps t + 2 eps t (|x|^2 + |y|^2)) E exp(2 eps t^2 alpha(1/2)^2)`,
/// divergent exactly when `eps t^2 >= 1`.
pub fn jensen_chain_bound<P: Potential + ?Sized>(x: &[f64], y: &[f64], v: &P, t: f64, eps: f64) -> Result<ExpMoment> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be > 0, got {eps}"));
    }
    let c = v
        .growth_constant(eps)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("{} has no growth constant at eps = {eps}", v.name())))?;
    jensen_chain_bound_with(x, y, t, eps, c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub q: QEstimate,
    pub jensen: ExpMoment,
    pub bound: f64,
    /// `q.mean - 3 se <= bound`, or a violation that vanished on rerun.
    pub pass: bool,
    /// `q.mean - 3 se <= jensen <= bound`.
    pub chain_ordered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSweepReport {
    pub params: BoundParameters,
    pub rows: Vec<SweepRow>,
}

impl BoundSweepReport {
    pub fn passes(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn chain_ordered(&self) -> usize {
        self.rows.iter().filter(|r| r.chain_ordered).count()
    }
}

/// Checks `Q(x, y) <= D exp(delta (|x|^2 + |y|^2))` on a grid of endpoint
/// pairs, with `delta0 = delta t / 2`. A point whose `mean - 3 se` exceeds
/// the bound is rerun with twice the samples on a fresh stream and only
/// counted as a violation if it persists.
pub fn verify_bound_sweep<P: Potential + ?Sized>(
    v: &P,
    t: f64,
    delta: f64,
    grid: &[(Vec<f64>, Vec<f64>)],
    mc: &McConfig,
    rng: RngSeed,
) -> Result<BoundSweepReport> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be > 0, got {delta}"));
    }
    let params = BoundParameters::for_potential(v, t, delta * t / 2.0)?;
    let mut rows = Vec::with_capacity(grid.len());
    for (k, (x, y)) in grid.iter().enumerate() {
        let q = estimate_q(x, y, v, t, mc, rng.derive(k as u64))?;
        let bound = theorem21_bound(x, y, &params)?;
        let jensen = jensen_chain_bound_with(x, y, t, params.eps, params.c_eps)?;
        let lower = q.mean - 3.0 * q.std_error;
        let mut pass = lower <= bound;
        if !pass {
            let doubled = McConfig {
                n_samples: 2 * mc.n_samples,
                ..*mc
            };
            let retry = estimate_q(x, y, v, t, &doubled, rng.derive(k as u64).derive(u64::MAX))?;
            pass = retry.mean - 3.0 * retry.std_error <= bound;
        }
        let chain_ordered = match jensen {
            ExpMoment::Finite(j) => lower <= j && j <= bound,
            ExpMoment::Divergent => false,
        };
        rows.push(SweepRow {
            x: x.clone(),
            y: y.clone(),
            q,
            jensen,
            bound,
            pass,
            chain_ordered,
        });
    }
    Ok(BoundSweepReport { params, rows })
}

/// `points x points` grid of 1-D endpoint pairs on `[lo, hi]^2`.
pub fn square_grid(lo: f64, hi: f64, points: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let at = |k: usize| {
        if points == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        }
    };
    let mut grid = Vec::with_capacity(points * points);
    for i in 0..points {
        for j in 0..points {
            grid.push((vec![at(i)], vec![at(j)]));
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialSpec;
    use proptest::prelude::*;

    #[test]
    fn bound_values() {
        let p = BoundParameters::new(1.0, 1e-9, 0.0).unwrap();
        assert!((theorem21_bound(&[0.0], &[0.0], &p).unwrap() - 2f64.sqrt()).abs() < 1e-8);
        let p = BoundParameters::new(1.0, 0.5, 0.0).unwrap();
        let b = theorem21_bound(&[1.0], &[1.0], &p).unwrap();
        assert!((b - 2.0 * 2f64.exp()).abs() < 1e-12);
        assert!((b - 14.778_112_197_861_3).abs() < 1e-10);
        assert!(BoundParameters::new(1.0, 1.0, 0.0).is_err());
        assert!(BoundParameters::new(1.0, 0.0, 0.0).is_err());
        assert!(BoundParameters::new(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn weak_inverted_quadratic_has_zero_constant() {
        let v = PotentialSpec::inverted_quadratic(1, 0.01).unwrap();
        let p = BoundParameters::for_potential(&v, 1.0, 0.5).unwrap();
        assert_eq!(p.eps, 0.5);
        assert_eq!(p.c_eps, 0.0);
        for (x, y) in [(0.0, 0.0), (1.0, -2.0), (3.0, 3.0)] {
            let b = theorem21_bound(&[x], &[y], &p).unwrap();
            let expected = 2.0 * (2.0 * (x * x + y * y) * 0.5f64).exp();
            assert!((b - expected).abs() < 1e-12 * expected);
        }
        // c = 1 is outside the class at eps = 0.5
        let strong = PotentialSpec::inverted_quadratic(1, 1.0).unwrap();
        assert!(BoundParameters::for_potential(&strong, 1.0, 0.5).is_err());
    }

    #[test]
    fn jensen_values_and_boundary() {
        let v = PotentialSpec::zero(1).unwrap();
        let j = jensen_chain_bound(&[0.0], &[0.0], &v, 1.0, 0.5).unwrap();
        assert!((j.finite().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(jensen_chain_bound(&[0.0], &[0.0], &v, 1.0, 1.0).unwrap().is_divergent());
        assert!(jensen_chain_bound(&[0.0], &[0.0], &v, 2.0, 0.25)
            .unwrap()
            .is_divergent());
        assert!(!jensen_chain_bound(&[0.0], &[0.0], &v, 2.0, 0.2499)
            .unwrap()
            .is_divergent());
        assert!(jensen_chain_bound(&[0.0], &[0.0], &v, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_potential_sweep_passes() {
        let v = PotentialSpec::zero(1).unwrap();
        let r = verify_bound_sweep(
            &v,
            1.0,
            1.0,
            &square_grid(-3.0, 3.0, 4),
            &McConfig::new(64, 8),
            RngSeed::new(0),
        )
        .unwrap();
        assert_eq!(r.passes(), 16);
        assert_eq!(r.chain_ordered(), 16);
        assert!(r.rows.iter().all(|row| row.q.mean == 1.0));
    }

    #[test]
    fn grid_shape() {
        let g = square_grid(-3.0, 3.0, 7);
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], (vec![-3.0], vec![-3.0]));
        assert_eq!(g[48], (vec![3.0], vec![3.0]));
        assert_eq!(g[8], (vec![-2.0], vec![-2.0]));
    }

    proptest! {
        #[test]
        fn jensen_finite_iff_eps_t2_below_one(t in 0.05f64..5.0, eps in 0.001f64..10.0) {
            let j = jensen_chain_bound_with(&[0.3], &[-0.2], t, eps, 0.0).unwrap();
            prop_assert_eq!(j.is_divergent(), eps * t * t >= 1.0);
        }

        #[test]
        fn jensen_below_closed_form(t in 0.05f64..5.0, d0 in 0.01f64..0.99, c in 0.0f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let p = BoundParameters::new(t, d0, c).unwrap();
            let j = jensen_chain_bound_with(&[x], &[y], t, p.eps, c).unwrap().finite().unwrap();
            let b = theorem21_bound(&[x], &[y], &p).unwrap();
            prop_assert!(j <= b * (1.0 + 1e-12));
        }

        #[test]
        fn bound_monotone(t in 0.1f64..3.0, d0 in 0.01f64..0.99, c in 0.0f64..3.0, x in 0.0f64..3.0, dx in 0.0f64..1.0, dc in 0.0f64..1.0) {
            let p = BoundParameters::new(t, d0, c).unwrap();
            let q = BoundParameters::new(t, d0, c + dc).unwrap();
            let b0 = theorem21_bound(&[x], &[0.5], &p).unwrap();
            prop_assert!(theorem21_bound(&[x + dx], &[0.5], &p).unwrap() >= b0);
            prop_assert!(theorem21_bound(&[-x - dx], &[0.5], &p).unwrap() >= b0);
            prop_assert!(theorem21_bound(&[x], &[0.5], &q).unwrap() >= b0);
        }
    }
}
