//! Monte Carlo Feynman-Kac engine for Schrödinger semigroups.
//!
//! The crate estimates matrix elements `<phi, exp(-tH) psi>` for
//! `H = -1/2 Laplacian + V` by sampling Brownian bridges, including
//! potentials that are unbounded below but satisfy a quadratic lower bound
//! `V(x) >= -eps |x|^2 - C_eps` for every `eps > 0`. In that regime the
//! semigroup is an unbounded operator, yet matrix elements between
//! compactly supported (or Gaussian-weighted) states are still finite and
//! given by the path integral.
//!
//! Modules:
//!
//! * [`stochastic`]: bridge sampling, covariance and Gaussian exponential moments.
//! * [`potentials`]: potential catalog, growth certificates and truncation `max(V, -n)`.
//! * [`feynman_kac`]: free kernel, the bridge functional `Q(x, y; V, t)` and matrix elements.
//! * [`bounds`]: the a priori bound on `Q` and the intermediate Jensen bound.
//! * [`oracles`]: closed-form kernels and a finite-difference spectral oracle.
//! * [`convergence`]: cutoff functional calculus, resolvent convergence and truncation studies.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod convergence;
pub mod error;
pub mod feynman_kac;
pub mod oracles;
pub mod potentials;
pub mod quadrature;
pub mod stochastic;
pub mod wavefunction;

pub use error::{Error, Result};
