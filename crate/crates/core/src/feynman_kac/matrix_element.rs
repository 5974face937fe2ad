use rayon::prelude::*;

use super::estimator::{estimate_q_family, McConfig};
use super::free_kernel_unchecked;
use crate::error::{invalid, Result};
use crate::potentials::Potential;
use crate::quadrature::TensorRule;
use crate::stochastic::RngSeed;
use crate::wavefunction::Wavefunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub nodes_per_axis: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes_per_axis: 32 }
    }
}

/// Estimate of `<phi, exp(-tH) psi>` through the path integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixElementEstimate {
    pub value: f64,
    /// `sqrt(sum_ij (w_ij phi psi K_0)^2 se_ij^2)` over the node pairs.
    pub std_error: f64,
    /// Number of `(x, y)` node pairs in the tensor rule.
    pub quadrature_nodes: usize,
    pub mc_samples_per_node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixElementFamily {
    pub estimates: Vec<MatrixElementEstimate>,
    /// Standard errors of consecutive differences, from paired samples.
    pub increment_std_errors: Vec<f64>,
    /// Whether any node flagged a heavy-tailed `Q` sample, per member.
    pub divergence_suspected: Vec<bool>,
}

struct NodePair {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Quadrature weight times `phi(x) psi(y) K_0(x, y; t)`.
    coefficient: f64,
    index: u64,
}

fn node_pairs(
    phi: &Wavefunction,
    psi: &Wavefunction,
    dim: usize,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<(Vec<NodePair>, usize)> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be > 0, got {t}"));
    }
    if phi.dim() != dim || psi.dim() != dim {
        return invalid(format!(
            "wavefunction dims ({}, {}) do not match potential dim {dim}",
            phi.dim(),
            psi.dim()
        ));
    }
    let bx = phi.integration_box()?;
    let by = psi.integration_box()?;
    let rx = TensorRule::new(&bx.lower, &bx.upper, quad.nodes_per_axis)?;
    let ry = TensorRule::new(&by.lower, &by.upper, quad.nodes_per_axis)?;
    let total = rx.len() * ry.len();
    let mut pairs = Vec::new();
    for (i, (x, wx)) in rx.points.iter().zip(&rx.weights).enumerate() {
        let fx = phi.evaluate(x);
        if fx == 0.0 {
            continue;
        }
        for (j, (y, wy)) in ry.points.iter().zip(&ry.weights).enumerate() {
            let coefficient = wx * wy * fx * psi.evaluate(y) * free_kernel_unchecked(x, y, t);
            if coefficient != 0.0 {
                pairs.push(NodePair {
                    x: x.clone(),
                    y: y.clone(),
                    coefficient,
                    index: (i * ry.len() + j) as u64,
                });
            }
        }
    }
    Ok((pairs, total))
}

/// `int phi(x) psi(y) K_0(x, y; t) Q(x, y; V, t) dx dy` by tensor
/// Gauss-Legendre in `x` and `y` and an independent Monte Carlo estimate of
/// `Q` at every node pair.
#[allow(clippy::too_many_arguments)]
pub fn matrix_element<P: Potential + ?Sized>(
    phi: &Wavefunction,
    psi: &Wavefunction,
    v: &P,
    t: f64,
    quad: &QuadratureConfig,
    mc: &McConfig,
    rng: RngSeed,
) -> Result<MatrixElementEstimate> {
    let fam = matrix_element_family(phi, psi, &[&v as &dyn Potential], t, quad, mc, rng)?;
    Ok(fam.estimates[0])
}

/// Matrix elements for several potentials. Node `(i, j)` uses the stream
/// `rng.derive(i * n_y + j)` for every member, so members share paths.
pub fn matrix_element_family(
    phi: &Wavefunction,
    psi: &Wavefunction,
    potentials: &[&dyn Potential],
    t: f64,
    quad: &QuadratureConfig,
    mc: &McConfig,
    rng: RngSeed,
) -> Result<MatrixElementFamily> {
    let Some(first) = potentials.first() else {
        return invalid("potential family is empty");
    };
    mc.validate()?;
    let (pairs, total) = node_pairs(phi, psi, first.dim(), t, quad)?;
    let per_node: Vec<_> = pairs
        .par_iter()
        .map(|p| estimate_q_family(&p.x, &p.y, potentials, t, mc, rng.derive(p.index)))
        .collect::<Result<_>>()?;

    let m = potentials.len();
    let mut values = vec![0.0; m];
    let mut vars = vec![0.0; m];
    let mut inc_vars = vec![0.0; m.saturating_sub(1)];
    let mut flags = vec![false; m];
    for (p, fam) in pairs.iter().zip(&per_node) {
        for (k, q) in fam.estimates.iter().enumerate() {
            values[k] += p.coefficient * q.mean;
            vars[k] += (p.coefficient * q.std_error).powi(2);
            flags[k] |= q.divergence_suspected;
        }
        for (k, se) in fam.increment_std_errors.iter().enumerate() {
            inc_vars[k] += (p.coefficient * se).powi(2);
        }
    }
    Ok(MatrixElementFamily {
        estimates: values
            .iter()
            .zip(&vars)
            .map(|(&value, &var)| MatrixElementEstimate {
                value,
                std_error: var.sqrt(),
                quadrature_nodes: total,
                mc_samples_per_node: mc.n_samples,
            })
            .collect(),
        increment_std_errors: inc_vars.iter().map(|v| v.sqrt()).collect(),
        divergence_suspected: flags,
    })
}

/// `int phi(x) psi(y) kernel(x, y) dx dy` on the same tensor rule that
/// [`matrix_element`] uses; closed-form kernels become deterministic
/// reference values this way.
pub fn integrate_kernel<K>(phi: &Wavefunction, psi: &Wavefunction, kernel: K, quad: &QuadratureConfig) -> Result<f64>
where
    K: Fn(&[f64], &[f64]) -> f64,
{
    if phi.dim() != psi.dim() {
        return invalid("wavefunction dimensions differ");
    }
    let bx = phi.integration_box()?;
    let by = psi.integration_box()?;
    let rx = TensorRule::new(&bx.lower, &bx.upper, quad.nodes_per_axis)?;
    let ry = TensorRule::new(&by.lower, &by.upper, quad.nodes_per_axis)?;
    let mut acc = 0.0;
    for (x, wx) in rx.points.iter().zip(&rx.weights) {
        let fx = phi.evaluate(x);
        if fx == 0.0 {
            continue;
        }
        for (y, wy) in ry.points.iter().zip(&ry.weights) {
            acc += wx * wy * fx * psi.evaluate(y) * kernel(x, y);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialSpec;

    #[test]
    fn free_case_reduces_to_kernel_integral() {
        let phi = Wavefunction::bump(vec![0.0], 1.0).unwrap();
        let psi = Wavefunction::bump(vec![0.3], 0.8).unwrap();
        let quad = QuadratureConfig::default();
        let v = PotentialSpec::zero(1).unwrap();
        let est = matrix_element(&phi, &psi, &v, 0.5, &quad, &McConfig::new(8, 4), RngSeed::new(0)).unwrap();
        let direct = integrate_kernel(&phi, &psi, |x, y| free_kernel_unchecked(x, y, 0.5), &quad).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert!((est.value - direct).abs() < 1e-14 * direct);
        assert_eq!(est.quadrature_nodes, 32 * 32);
    }

    /// An independent midpoint-rule double integral of the free kernel
    /// between two bumps.
    #[test]
    fn kernel_integral_matches_midpoint_rule() {
        let phi = Wavefunction::bump(vec![0.0], 1.0).unwrap();
        let quad = QuadratureConfig::default();
        let gl = integrate_kernel(&phi, &phi, |x, y| free_kernel_unchecked(x, y, 0.5), &quad).unwrap();
        let n = 800;
        let h = 2.0 / n as f64;
        let mut mid = 0.0;
        for i in 0..n {
            let x = -1.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -1.0 + (j as f64 + 0.5) * h;
                mid += phi.evaluate(&[x]) * phi.evaluate(&[y]) * free_kernel_unchecked(&[x], &[y], 0.5);
            }
        }
        mid *= h * h;
        assert!((gl - mid).abs() < 1e-8 * gl, "{gl} vs {mid}");
    }

    #[test]
    fn unbounded_wavefunction_rejected() {
        let g = Wavefunction::gaussian_weighted(1, None, |x| (-x[0] * x[0]).exp()).unwrap();
        let b = Wavefunction::bump(vec![0.0], 1.0).unwrap();
        let v = PotentialSpec::zero(1).unwrap();
        let r = matrix_element(
            &g,
            &b,
            &v,
            1.0,
            &QuadratureConfig::default(),
            &McConfig::default(),
            RngSeed::new(0),
        );
        assert!(matches!(r, Err(crate::Error::InvalidArgument(_))));
        let r = matrix_element(
            &b,
            &b,
            &v,
            0.0,
            &QuadratureConfig::default(),
            &McConfig::default(),
            RngSeed::new(0),
        );
        assert!(r.is_err());
        let v2 = PotentialSpec::zero(2).unwrap();
        let r = matrix_element(
            &b,
            &b,
            &v2,
            1.0,
            &QuadratureConfig::default(),
            &McConfig::default(),
            RngSeed::new(0),
        );
        assert!(r.is_err());
    }
}
