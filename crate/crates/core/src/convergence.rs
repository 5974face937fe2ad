//! Functional-calculus convergence on matrices, and truncation studies.
//!
//! For self-adjoint `A_n -> A` in the strong resolvent sense and `psi` in
//! every `D(f(A_n))`: bounded `||f(A_n) psi||` puts `psi` in `D(f(A))`, and
//! bounded `||f(A_n)^2 psi||` gives `f(A_n) psi -> f(A) psi`. The engine
//! behind the second claim is the cutoff `f_m = clamp(f, -m, m)` with
//! `||(f(A) - f_m(A)) psi|| <= ||f(A)^2 psi|| / m`.
//!
//! The truncation studies follow `V_n = max(V, -n)` on both sides of the
//! path-integral identity: the grid oracle for `<phi, exp(-t H_n) psi>` and
//! the Monte Carlo matrix element on common random numbers.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::feynman_kac::{
    estimate_q_family, matrix_element_family, MatrixElementEstimate, McConfig, QEstimate, QuadratureConfig,
};
use crate::oracles::{GridOracle, SpectralDecomposition};
use crate::potentials::{truncate, Potential, PotentialSpec, TruncatedPotential};
use crate::stochastic::RngSeed;
use crate::wavefunction::Wavefunction;

/// Relative tolerance of the increment test in [`stabilized`].
pub const STABILIZATION_RELATIVE_TOLERANCE: f64 = 1e-3;

/// Relative slack for monotonicity of deterministic oracle values, which
/// carry eigensolver roundoff.
pub const ORACLE_MONOTONE_TOLERANCE: f64 = 1e-10;

fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() {
        return invalid(format!("{what} is not square"));
    }
    let scale = a.amax().max(1.0);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return invalid(format!("{what} is not symmetric"));
    }
    Ok(())
}

/// Symmetric matrices `A_n` with their candidate limit `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSequence {
    pub members: Vec<DMatrix<f64>>,
    pub limit: DMatrix<f64>,
    pub label: String,
}

impl OperatorSequence {
    pub fn new(members: Vec<DMatrix<f64>>, limit: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        check_symmetric(&limit, "limit")?;
        for (i, m) in members.iter().enumerate() {
            check_symmetric(m, &format!("member {i}"))?;
            if m.shape() != limit.shape() {
                return invalid(format!(
                    "member {i} has shape {:?}, limit has {:?}",
                    m.shape(),
                    limit.shape()
                ));
            }
        }
        Ok(Self {
            members,
            limit,
            label: label.into(),
        })
    }

    pub fn size(&self) -> usize {
        self.limit.nrows()
    }
}

/// `||(A + i)^{-1} probe - (B + i)^{-1} probe||`.
pub fn resolvent_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, probe: &DVector<f64>) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() || a.nrows() != probe.len() {
        return invalid("resolvent_distance needs square matrices of one size and a matching probe");
    }
    if probe.iter().all(|&v| v == 0.0) {
        return invalid("probe vector must be nonzero");
    }
    let ra = shifted_solve(a, probe)?;
    let rb = shifted_solve(b, probe)?;
    Ok((ra - rb).norm())
}

fn shifted_solve(a: &DMatrix<f64>, probe: &DVector<f64>) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| Complex64::new(a[(i, j)], if i == j { 1.0 } else { 0.0 }));
    let rhs = probe.map(|v| Complex64::new(v, 0.0));
    shifted
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Numerical("resolvent solve failed".into()))
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f_m(x) = clamp(f(x), -m, m)`.
#[derive(Clone)]
pub struct CutoffFunction {
    base: RealFn,
    level: f64,
}

impl fmt::Debug for CutoffFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CutoffFunction").field("level", &self.level).finish()
    }
}

impl CutoffFunction {
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = (self.base)(x);
        if v >= self.level {
            self.level
        } else if v <= -self.level {
            -self.level
        } else {
            v
        }
    }
}

pub fn apply_cutoff<F>(f: F, m: f64) -> Result<CutoffFunction>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(m > 0.0) {
        return invalid(format!("cutoff level must be > 0, got {m}"));
    }
    Ok(CutoffFunction {
        base: Arc::new(f),
        level: m,
    })
}

/// What [`check_theorem31`] measured along a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem31Report {
    pub label: String,
    /// `||(A_n + i)^{-1} psi - (A + i)^{-1} psi||`
    pub resolvent_distances: Vec<f64>,
    /// `||f(A_n) psi||`
    pub f_norms: Vec<f64>,
    /// `||f(A_n)^2 psi||`
    pub f_sq_norms: Vec<f64>,
    /// `||f(A_n) psi - f(A) psi||`
    pub distances_to_limit: Vec<f64>,
    pub limit_norm: f64,
    pub sup_f_norm: f64,
    pub sup_f_sq_norm: f64,
    /// Resolvent distances end at most a tenth of where they started (or at zero).
    pub resolvent_converges: bool,
    /// The second-moment norms stop growing: the last half stays within
    /// 10% of the first half's maximum. A finite-sequence proxy for
    /// `sup_n ||f(A_n)^2 psi|| < infinity`.
    pub second_moment_bounded: bool,
    /// `||f(A_n) psi - f(A) psi||` ends at most a tenth of its first value
    /// (or below `1e-12 ||f(A) psi||`).
    pub converges: bool,
}

impl Theorem31Report {
    /// Convergence of `f(A_n) psi` co-occurs with bounded second moments,
    /// and non-convergence with unbounded ones.
    pub fn consistent(&self) -> bool {
        self.converges == self.second_moment_bounded
    }
}

fn tail_to_tenth(values: &[f64], floor: f64) -> bool {
    match (values.first(), values.last()) {
        (Some(&first), Some(&last)) => last <= floor || last <= 0.1 * first,
        _ => false,
    }
}

/// Functional calculus along `seq` applied to `psi`.
pub fn check_theorem31<F>(seq: &OperatorSequence, f: F, psi: &DVector<f64>) -> Result<Theorem31Report>
where
    F: Fn(f64) -> f64,
{
    if psi.len() != seq.size() {
        return invalid("psi length does not match the operator size");
    }
    if seq.members.is_empty() {
        return invalid("operator sequence is empty");
    }
    let limit = SpectralDecomposition::of(&seq.limit)?;
    let f_limit = limit.apply(&f, psi);
    let limit_norm = f_limit.norm();

    let mut report = Theorem31Report {
        label: seq.label.clone(),
        resolvent_distances: Vec::new(),
        f_norms: Vec::new(),
        f_sq_norms: Vec::new(),
        distances_to_limit: Vec::new(),
        limit_norm,
        sup_f_norm: 0.0,
        sup_f_sq_norm: 0.0,
        resolvent_converges: false,
        second_moment_bounded: false,
        converges: false,
    };
    for a in &seq.members {
        report.resolvent_distances.push(resolvent_distance(a, &seq.limit, psi)?);
        let s = SpectralDecomposition::of(a)?;
        let fa = s.apply(&f, psi);
        let fa2 = s.apply(|x| f(x).powi(2), psi);
        report.f_norms.push(fa.norm());
        report.f_sq_norms.push(fa2.norm());
        report.distances_to_limit.push((fa - &f_limit).norm());
    }
    report.sup_f_norm = report.f_norms.iter().copied().fold(0.0, f64::max);
    report.sup_f_sq_norm = report.f_sq_norms.iter().copied().fold(0.0, f64::max);
    report.resolvent_converges = tail_to_tenth(&report.resolvent_distances, 1e-12 * psi.norm());
    let half = report.f_sq_norms.len().div_ceil(2);
    let (head, tail) = report.f_sq_norms.split_at(half);
    let head_max = head.iter().copied().fold(0.0, f64::max);
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    report.second_moment_bounded = tail_max <= 1.1 * head_max;
    report.converges = tail_to_tenth(&report.distances_to_limit, 1e-12 * limit_norm.max(f64::MIN_POSITIVE));
    Ok(report)
}

/// `||f_m(A) psi - f(A) psi||` and `||f(A)^2 psi|| / m`.
pub fn cutoff_contraction(a: &DMatrix<f64>, cutoff: &CutoffFunction, psi: &DVector<f64>) -> Result<(f64, f64)> {
    let s = SpectralDecomposition::of(a)?;
    let f = |x: f64| (cutoff.base)(x);
    let lhs = (s.apply(|x| cutoff.eval(x), psi) - s.apply(f, psi)).norm();
    let rhs = s.apply(|x| f(x).powi(2), psi).norm() / cutoff.level;
    Ok((lhs, rhs))
}

/// Symmetric matrix with independent standard normal entries on and above
/// the diagonal.
pub fn random_symmetric<R: Rng + ?Sized>(size: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in i..size {
            let z: f64 = rng.sample(StandardNormal);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

/// Multiplication by `sqrt(n)` on `[0, 1/n]` in `L^2(0, 1)`, sampled at
/// the `k` cell midpoints, for each `n` in `levels`. The probe is the
/// constant function 1 expressed in the orthonormal cell basis, so
/// Euclidean norms equal `L^2` norms.
pub fn indicator_counterexample(k: usize, levels: &[usize]) -> Result<(OperatorSequence, DVector<f64>)> {
    if k == 0 {
        return invalid("grid size must be positive");
    }
    let mut members = Vec::with_capacity(levels.len());
    for &n in levels {
        if n == 0 || n > k {
            return invalid(format!("level {n} must lie in 1..={k}"));
        }
        let diag = DVector::from_iterator(
            k,
            (0..k).map(|i| {
                let x = (i as f64 + 0.5) / k as f64;
                if x <= 1.0 / n as f64 {
                    (n as f64).sqrt()
                } else {
                    0.0
                }
            }),
        );
        members.push(DMatrix::from_diagonal(&diag));
    }
    let psi = DVector::from_element(k, (1.0 / k as f64).sqrt());
    let seq = OperatorSequence::new(members, DMatrix::zeros(k, k), "sqrt(n) 1[0,1/n]")?;
    Ok((seq, psi))
}

/// Three successive trailing increments each below
/// `max(3 se, 1e-3 |value|)`.
pub fn stabilized(values: &[f64], increment_std_errors: &[f64]) -> bool {
    let n = values.len();
    if n < 4 || increment_std_errors.len() + 1 != n {
        return false;
    }
    (n - 4..n - 1).all(|i| {
        let inc = (values[i + 1] - values[i]).abs();
        let tol = (3.0 * increment_std_errors[i]).max(STABILIZATION_RELATIVE_TOLERANCE * values[i + 1].abs());
        inc <= tol
    })
}

/// `values[i + 1] >= values[i] - rel_tol * |values[i]|` throughout.
pub fn non_decreasing(values: &[f64], rel_tol: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - rel_tol * w[0].abs())
}

/// [`stabilized`], refused when any of the last four estimates looks
/// heavy-tailed: their standard errors then say nothing about the spread.
fn stabilized_unflagged(values: &[f64], increment_std_errors: &[f64], flags: &[bool]) -> bool {
    let tail = flags.len().saturating_sub(4);
    stabilized(values, increment_std_errors) && !flags[tail..].iter().any(|&f| f)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return invalid("truncation levels are empty");
    }
    if levels.iter().any(|&n| !(n >= 0.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("truncation levels must be nonnegative and strictly increasing");
    }
    Ok(())
}

fn truncations(v: &PotentialSpec, levels: &[f64]) -> Result<Vec<TruncatedPotential>> {
    levels.iter().map(|&n| truncate(v, n)).collect()
}

/// Grid-oracle settings for the left-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            half_width: 10.0,
            n_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub level: f64,
    /// Grid-oracle `<phi, exp(-t H_n) psi>`.
    pub left: f64,
    /// Path-integral estimate of the same quantity.
    pub right: MatrixElementEstimate,
    /// `right(n) - right(previous level)`, zero on the first row.
    pub increment: f64,
    pub increment_std_error: f64,
    /// `|left - right| <= max(3 se, 1% |left|)`.
    pub agree: bool,
    pub divergence_suspected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub left_monotone: bool,
    pub right_monotone: bool,
    pub left_stabilized: bool,
    /// Increment rule of [`stabilized`], and no heavy-tail flag among the
    /// last four levels.
    pub right_stabilized: bool,
}

impl TruncationReport {
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agree)
    }
}

/// Relative agreement floor between oracle and Monte Carlo values.
pub const AGREEMENT_RELATIVE_TOLERANCE: f64 = 0.01;

pub fn agree(reference: f64, estimate: f64, std_error: f64) -> bool {
    (reference - estimate).abs() <= (3.0 * std_error).max(AGREEMENT_RELATIVE_TOLERANCE * reference.abs())
}

/// Both sides of the path-integral identity along `V_n = max(V, -n)`.
#[allow(clippy::too_many_arguments)]
pub fn truncation_study(
    v: &PotentialSpec,
    phi: &Wavefunction,
    psi: &Wavefunction,
    t: f64,
    levels: &[f64],
    oracle: &OracleConfig,
    quad: &QuadratureConfig,
    mc: &McConfig,
    rng: RngSeed,
) -> Result<TruncationReport> {
    check_levels(levels)?;
    let vs = truncations(v, levels)?;
    let members: Vec<&dyn Potential> = vs.iter().map(|p| p as &dyn Potential).collect();
    let right = matrix_element_family(phi, psi, &members, t, quad, mc, rng)?;
    let mut rows = Vec::with_capacity(levels.len());
    for (i, vn) in vs.iter().enumerate() {
        let left = GridOracle::new(vn, oracle.half_width, oracle.n_points)?.matrix_element(phi, psi, t)?;
        let r = right.estimates[i];
        let (increment, increment_std_error) = if i == 0 {
            (0.0, 0.0)
        } else {
            (
                r.value - right.estimates[i - 1].value,
                right.increment_std_errors[i - 1],
            )
        };
        rows.push(TruncationRow {
            level: levels[i],
            left,
            right: r,
            increment,
            increment_std_error,
            agree: agree(left, r.value, r.std_error),
            divergence_suspected: right.divergence_suspected[i],
        });
    }
    let lefts: Vec<f64> = rows.iter().map(|r| r.left).collect();
    let rights: Vec<f64> = rows.iter().map(|r| r.right.value).collect();
    let left_se = vec![0.0; lefts.len().saturating_sub(1)];
    Ok(TruncationReport {
        left_monotone: non_decreasing(&lefts, ORACLE_MONOTONE_TOLERANCE),
        right_monotone: non_decreasing(&rights, 0.0),
        left_stabilized: stabilized(&lefts, &left_se),
        right_stabilized: stabilized_unflagged(&rights, &right.increment_std_errors, &right.divergence_suspected),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTruncationRow {
    pub level: f64,
    pub estimate: QEstimate,
    pub increment: f64,
    pub increment_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTruncationReport {
    pub rows: Vec<QTruncationRow>,
    pub monotone: bool,
    /// Increment rule of [`stabilized`], and no heavy-tail flag among the
    /// last four levels.
    pub stabilized: bool,
    pub divergence_suspected_at_last: bool,
}

/// `Q(x, y; V_n, t)` along the truncation levels on common paths.
#[allow(clippy::too_many_arguments)]
pub fn q_truncation_study(
    v: &PotentialSpec,
    x: &[f64],
    y: &[f64],
    t: f64,
    levels: &[f64],
    mc: &McConfig,
    rng: RngSeed,
) -> Result<QTruncationReport> {
    check_levels(levels)?;
    let vs = truncations(v, levels)?;
    let members: Vec<&dyn Potential> = vs.iter().map(|p| p as &dyn Potential).collect();
    let fam = estimate_q_family(x, y, &members, t, mc, rng)?;
    let rows: Vec<QTruncationRow> = fam
        .estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (increment, increment_std_error) = if i == 0 {
                (0.0, 0.0)
            } else {
                (e.mean - fam.estimates[i - 1].mean, fam.increment_std_errors[i - 1])
            };
            QTruncationRow {
                level: levels[i],
                estimate: *e,
                increment,
                increment_std_error,
            }
        })
        .collect();
    let means: Vec<f64> = fam.estimates.iter().map(|e| e.mean).collect();
    let flags: Vec<bool> = fam.estimates.iter().map(|e| e.divergence_suspected).collect();
    Ok(QTruncationReport {
        monotone: non_decreasing(&means, 0.0),
        stabilized: stabilized_unflagged(&means, &fam.increment_std_errors, &flags),
        divergence_suspected_at_last: fam.estimates.last().is_some_and(|e| e.divergence_suspected),
        rows,
    })
}

/// The dyadic ladder `1, 2, 4, ..., max`.
pub fn dyadic_levels(max: u32) -> Vec<f64> {
    let mut out = Vec::new();
    let mut n = 1u32;
    while n <= max {
        out.push(n as f64);
        n *= 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngSeed;
    use proptest::prelude::*;

    #[test]
    fn cutoff_branches() {
        let f = apply_cutoff(|x| x, 2.0).unwrap();
        assert_eq!(f.eval(5.0), 2.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(-7.0), -2.0);
        let g = apply_cutoff(|x: f64| (-x).exp(), 10.0).unwrap();
        assert_eq!(g.eval(-5.0), 10.0);
        assert!(apply_cutoff(|x| x, 0.0).is_err());
    }

    #[test]
    fn resolvent_distance_basics() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        let probe = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(resolvent_distance(&a, &a, &probe).unwrap(), 0.0);
        assert!(resolvent_distance(&a, &a, &DVector::zeros(2)).is_err());
        let mut prev = f64::INFINITY;
        for n in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let an = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / n, 0.0]));
            let d = resolvent_distance(&an, &DMatrix::zeros(2, 2), &probe).unwrap();
            // |1/(a+i) - 1/i| = a / sqrt(a^2 + 1) on the first coordinate
            let a1 = 1.0 / n;
            assert!((d - a1 / (a1 * a1 + 1.0).sqrt()).abs() < 1e-14);
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn counterexample_norms() {
        let (seq, psi) = indicator_counterexample(256, &[4, 16, 64]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let r = check_theorem31(&seq, |x| x, &psi).unwrap();
        for (i, &n) in [4.0f64, 16.0, 64.0].iter().enumerate() {
            assert!((r.f_norms[i] - 1.0).abs() < 1e-12);
            assert!((r.distances_to_limit[i] - 1.0).abs() < 1e-12);
            assert!((r.f_sq_norms[i] - n.sqrt()).abs() < 1e-12);
            assert!((r.resolvent_distances[i] - 1.0 / (n + 1.0).sqrt()).abs() < 1e-12);
        }
        assert!(!r.converges);
        assert!(!r.second_moment_bounded);
        assert!(r.consistent());
        assert!(indicator_counterexample(4, &[8]).is_err());
    }

    /// `F(x) = |x|^{3/2}` grows faster than linearly, and along the
    /// counterexample `||F(A_n) psi|| = n^{1/4}` is unbounded too.
    #[test]
    fn superlinear_weakening_also_fails() {
        let (seq, psi) = indicator_counterexample(256, &[4, 16, 64, 256]).unwrap();
        let r = check_theorem31(&seq, |x: f64| x.abs().powf(1.5), &psi).unwrap();
        for (i, &n) in [4.0f64, 16.0, 64.0, 256.0].iter().enumerate() {
            assert!((r.f_norms[i] - n.powf(0.25)).abs() < 1e-10);
        }
    }

    #[test]
    fn bounded_sequence_converges() {
        let mut rng = RngSeed::new(8).rng();
        let a = random_symmetric(6, &mut rng);
        let e = random_symmetric(6, &mut rng);
        let members: Vec<_> = [1.0, 4.0, 16.0, 64.0, 256.0].iter().map(|n| &a + &e / *n).collect();
        let seq = OperatorSequence::new(members, a, "a + e/n").unwrap();
        let psi = DVector::from_element(6, 1.0);
        let r = check_theorem31(&seq, |x: f64| x.atan(), &psi).unwrap();
        assert!(r.resolvent_converges);
        assert!(r.converges);
        assert!(r.second_moment_bounded);
        assert!(r.consistent());
    }

    #[test]
    fn sequence_validation() {
        let sym = DMatrix::<f64>::identity(2, 2);
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(OperatorSequence::new(vec![asym], sym.clone(), "x").is_err());
        assert!(OperatorSequence::new(vec![DMatrix::identity(3, 3)], sym, "x").is_err());
    }

    #[test]
    fn stabilization_rule() {
        assert!(stabilized(&[1.0, 2.0, 2.0, 2.0, 2.0], &[0.0; 4]));
        assert!(!stabilized(&[1.0, 2.0, 2.0, 2.0, 3.0], &[0.0; 4]));
        assert!(stabilized(&[1.0, 2.0, 2.1, 2.2, 2.3], &[0.0, 0.05, 0.05, 0.05]));
        assert!(stabilized(&[1.0, 1.0005, 1.001, 1.0015], &[0.0; 3]));
        assert!(!stabilized(&[1.0, 1.0, 1.0], &[0.0; 2]));
        assert!(stabilized_unflagged(
            &[1.0, 2.0, 2.0, 2.0, 2.0],
            &[0.0; 4],
            &[true, false, false, false, false]
        ));
        assert!(!stabilized_unflagged(
            &[1.0, 2.0, 2.0, 2.0, 2.0],
            &[0.0; 4],
            &[false, false, false, false, true]
        ));
        assert!(non_decreasing(&[1.0, 1.0 - 1e-12, 2.0], 1e-10));
        assert!(!non_decreasing(&[1.0, 1.0 - 1e-12, 2.0], 0.0));
        assert_eq!(dyadic_levels(64), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }

    proptest! {
        #[test]
        fn cutoff_is_bounded_and_exact_inside(x in -20.0f64..20.0, m in 0.01f64..100.0) {
            let f = apply_cutoff(|x: f64| x * x.abs() - 3.0, m).unwrap();
            let base = x * x.abs() - 3.0;
            prop_assert!(f.eval(x).abs() <= m);
            if base.abs() <= m {
                prop_assert_eq!(f.eval(x), base);
            }
            // |f - f_m| <= f^2 / m pointwise
            prop_assert!((base - f.eval(x)).abs() <= base * base / m * (1.0 + 1e-12));
        }
    }
}
