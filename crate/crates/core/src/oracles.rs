//! Independent ground truth for `exp(-tH)`.
//!
//! * [`stark_kernel`]: closed-form kernel for `H = -1/2 d^2/dx^2 + F x`.
//!   The bridge action of a linear potential is Gaussian with
//!   `Var int_0^1 alpha = 1/12`, which gives
//!   `K(x, y) = K_0(x, y) exp(-tF(x + y)/2 + F^2 t^3 / 24)`.
//! * [`mehler_kernel`]: the harmonic oscillator `-1/2 d^2/dx^2 + 1/2 omega^2 x^2`.
//! * [`GridOracle`]: three-point finite differences on `[-L, L]` with
//!   Dirichlet walls and a dense eigendecomposition, so `exp(-tH)` comes
//!   from the functional calculus.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::feynman_kac::free_kernel;
use crate::potentials::Potential;
use crate::wavefunction::Wavefunction;

/// `H = -1/2 d^2/dx^2 + V` on the interior nodes of `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    pub domain_half_width: f64,
    pub n_points: usize,
    /// `2L / (n_points + 1)`
    pub h: f64,
    pub hamiltonian: DMatrix<f64>,
}

impl GridOperator {
    /// Node `i` sits at `-L + (i + 1) h`.
    pub fn node(&self, i: usize) -> f64 {
        -self.domain_half_width + (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Samples a wavefunction on the nodes. Its integration box must lie
    /// inside `[-L, L]`.
    pub fn sample(&self, f: &Wavefunction) -> Result<DVector<f64>> {
        if f.dim() != 1 {
            return Err(Error::Unsupported("grid oracle is one-dimensional".into()));
        }
        let b = f.integration_box()?;
        let l = self.domain_half_width;
        if b.lower[0] < -l || b.upper[0] > l {
            return invalid(format!(
                "support [{}, {}] exceeds the oracle domain [-{l}, {l}]",
                b.lower[0], b.upper[0]
            ));
        }
        Ok(DVector::from_iterator(
            self.n_points,
            (0..self.n_points).map(|i| f.evaluate(&[self.node(i)])),
        ))
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        SpectralDecomposition::of(&self.hamiltonian)
    }
}

/// Assembles the finite-difference Hamiltonian with `V` sampled at the nodes.
pub fn build_grid_operator<P: Potential + ?Sized>(v: &P, half_width: f64, n_points: usize) -> Result<GridOperator> {
    if v.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs dim 1, potential has dim {}",
            v.dim()
        )));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return invalid(format!("domain half-width must be > 0, got {half_width}"));
    }
    if n_points < 3 {
        return invalid(format!("grid oracle needs at least 3 points, got {n_points}"));
    }
    let h = 2.0 * half_width / (n_points + 1) as f64;
    let kinetic = 1.0 / (h * h);
    let mut m = DMatrix::zeros(n_points, n_points);
    for i in 0..n_points {
        let x = -half_width + (i + 1) as f64 * h;
        m[(i, i)] = kinetic + v.value(&[x]);
        if i + 1 < n_points {
            m[(i, i + 1)] = -0.5 * kinetic;
            m[(i + 1, i)] = -0.5 * kinetic;
        }
    }
    Ok(GridOperator {
        domain_half_width: half_width,
        n_points,
        h,
        hamiltonian: m,
    })
}

/// `A = U diag(lambda) U^T` with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn of(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return invalid("matrix must be square");
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        if (a - a.transpose()).amax() > 1e-12 * scale {
            return invalid("matrix is not symmetric");
        }
        let eig = SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..a.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let eigenvectors =
            DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "eigendecomposition produced non-finite eigenvalues".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `f(A) v` through the functional calculus.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.eigenvectors.tr_mul(v);
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(self.eigenvalues.iter()).map(|(c, &l)| c * f(l)),
        );
        &self.eigenvectors * scaled
    }

    /// The matrix `f(A)`.
    pub fn function<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).scale_mut(fl);
        }
        scaled * self.eigenvectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.function(|l| l)
    }
}

/// Grid operator together with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct GridOracle {
    pub operator: GridOperator,
    pub spectral: SpectralDecomposition,
}

impl GridOracle {
    pub fn new<P: Potential + ?Sized>(v: &P, half_width: f64, n_points: usize) -> Result<Self> {
        let operator = build_grid_operator(v, half_width, n_points)?;
        let spectral = operator.spectral()?;
        Ok(Self { operator, spectral })
    }

    /// `sum_k exp(-t lambda_k) <phi, u_k><u_k, psi>` with grid inner
    /// products of weight `h`.
    pub fn matrix_element(&self, phi: &Wavefunction, psi: &Wavefunction, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("t must be >= 0, got {t}"));
        }
        let p = self.operator.sample(phi)?;
        let q = self.operator.sample(psi)?;
        let evolved = self.spectral.apply(|l| (-t * l).exp(), &q);
        let value = self.operator.h * p.dot(&evolved);
        if !value.is_finite() {
            return Err(Error::Numerical("semigroup matrix element overflowed".into()));
        }
        Ok(value)
    }

    /// Grid approximation of the kernel `exp(-tH)(x_i, x_j)`.
    pub fn kernel_matrix(&self, t: f64) -> DMatrix<f64> {
        self.spectral.function(|l| (-t * l).exp()) / self.operator.h
    }
}

/// `<phi, exp(-tH) psi>` on the grid operator; decomposes `op` afresh.
pub fn semigroup_matrix_element(op: &GridOperator, phi: &Wavefunction, psi: &Wavefunction, t: f64) -> Result<f64> {
    let oracle = GridOracle {
        operator: op.clone(),
        spectral: op.spectral()?,
    };
    oracle.matrix_element(phi, psi, t)
}

/// Kernel of `exp(-tH)` for `H = -1/2 d^2/dx^2 + F x`.
pub fn stark_kernel(x: f64, y: f64, field: f64, t: f64) -> Result<f64> {
    let k0 = free_kernel(&[x], &[y], t)?;
    Ok(k0 * stark_factor(x, y, field, t))
}

/// `Q(x, y; Fx, t) = exp(-tF(x + y)/2 + F^2 t^3 / 24)`.
pub fn stark_factor(x: f64, y: f64, field: f64, t: f64) -> f64 {
    (-t * field * (x + y) / 2.0 + field * field * t.powi(3) / 24.0).exp()
}

/// Mehler kernel of `exp(-tH)` for `H = -1/2 d^2/dx^2 + 1/2 omega^2 x^2`.
pub fn mehler_kernel(x: f64, y: f64, omega: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be > 0, got {t}"));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return invalid(format!("omega must be > 0, got {omega}"));
    }
    let wt = omega * t;
    let (s, c) = (wt.sinh(), wt.cosh());
    let prefactor = (omega / (2.0 * PI * s)).sqrt();
    Ok(prefactor * (-omega * ((x * x + y * y) * c - 2.0 * x * y) / (2.0 * s)).exp())
}
