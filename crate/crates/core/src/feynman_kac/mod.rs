//! The path-integral side: free heat kernel, the bridge functional
//!
//! ```text
//! Q(x, y; V, t) = E exp( -int_0^t V((1 - s/t) x + (s/t) y + sqrt(t) alpha(s/t)) ds )
//! ```
//!
//! and matrix elements `int phi(x) psi(y) K_0(x, y; t) Q(x, y; V, t) dx dy`.
//! Units are fixed by `H_0 = -1/2 Laplacian`.
//!
//! Samples are split into fixed-size chunks, each with its own stream
//! derived from the caller's [`RngSeed`]; chunk results are merged in chunk
//! order. Estimates therefore depend on the seed only, not on the number
//! of rayon workers.

mod estimator;
mod matrix_element;
mod refine;

pub use estimator::{estimate_q, estimate_q_family, McConfig, QEstimate, QFamily};
pub use matrix_element::{
    integrate_kernel, matrix_element, matrix_element_family, MatrixElementEstimate, MatrixElementFamily,
    QuadratureConfig,
};
pub use refine::{refine_steps, RefinementReport, RefinementStep, ResolutionDifference};

use crate::error::{invalid, Result};
use crate::potentials::Potential;
use crate::stochastic::BridgePath;

/// `(2 pi t)^(-dim/2) exp(-|x - y|^2 / (2t))`, the kernel of `exp(-t H_0)`.
pub fn free_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be > 0, got {t}"));
    }
    if x.len() != y.len() || x.is_empty() {
        return invalid("x and y must have the same positive dimension");
    }
    Ok(free_kernel_unchecked(x, y, t))
}

pub(crate) fn free_kernel_unchecked(x: &[f64], y: &[f64], t: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (2.0 * std::f64::consts::PI * t).powf(-0.5 * x.len() as f64) * (-d2 / (2.0 * t)).exp()
}

/// Trapezoidal approximation of `int_0^t V(...) ds` along one bridge path.
///
/// With `u = s/t` the integral is `t int_0^1 V((1-u) x + u y + sqrt(t) alpha(u)) du`
/// and the `u`-integral uses the path's own grid.
pub fn action_integral<P: Potential + ?Sized>(path: &BridgePath, v: &P, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_endpoints(v.dim(), x, y, t)?;
    if path.dim() != v.dim() {
        return invalid(format!(
            "path dim {} does not match potential dim {}",
            path.dim(),
            v.dim()
        ));
    }
    let mut pos = vec![0.0; v.dim()];
    Ok(action_on_grid(path, 1, v, x, y, t, &mut pos))
}

pub(crate) fn check_endpoints(dim: usize, x: &[f64], y: &[f64], t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be > 0, got {t}"));
    }
    if x.len() != dim || y.len() != dim {
        return invalid(format!(
            "endpoint dims ({}, {}) do not match potential dim {dim}",
            x.len(),
            y.len()
        ));
    }
    Ok(())
}

/// Trapezoid over every `stride`-th point of `path`.
pub(crate) fn action_on_grid<P: Potential + ?Sized>(
    path: &BridgePath,
    stride: usize,
    v: &P,
    x: &[f64],
    y: &[f64],
    t: f64,
    pos: &mut [f64],
) -> f64 {
    let n = path.n_steps() / stride;
    let sqrt_t = t.sqrt();
    let mut acc = 0.0;
    for k in 0..=n {
        let u = k as f64 / n as f64;
        let alpha = path.point(k * stride);
        for (i, p) in pos.iter_mut().enumerate() {
            *p = (1.0 - u) * x[i] + u * y[i] + sqrt_t * alpha[i];
        }
        let val = v.value(pos);
        acc += if k == 0 || k == n { 0.5 * val } else { val };
    }
    acc * t / n as f64
}
