//! One function per experiment, each producing flat tables and a summary.

use std::path::{Path, PathBuf};

use fkmc::bounds::{square_grid, verify_bound_sweep};
use fkmc::convergence::{
    agree, apply_cutoff, check_theorem31, cutoff_contraction, indicator_counterexample, q_truncation_study,
    random_symmetric, truncation_study, OracleConfig,
};
use fkmc::feynman_kac::{estimate_q, free_kernel, integrate_kernel, matrix_element, refine_steps, QuadratureConfig};
use fkmc::oracles::{mehler_kernel, stark_kernel, GridOracle};
use fkmc::stochastic::{ExpMoment, RngSeed};
use fkmc::wavefunction::Wavefunction;

use crate::config::{Experiment, ExperimentConfig, PotentialName, TruncationTarget};
use crate::CliError;

/// A CSV table bound for `path`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: String,
}

pub const Q_ESTIMATE_COLUMNS: &[&str] = &[
    "x",
    "y",
    "t",
    "mean",
    "std_error",
    "n_samples",
    "n_steps",
    "divergence_suspected",
    "top_k_share",
];
pub const MATRIX_ELEMENT_COLUMNS: &[&str] = &["t", "value", "std_error", "quadrature_nodes", "mc_samples_per_node"];
pub const BOUND_SWEEP_COLUMNS: &[&str] = &[
    "x",
    "y",
    "q_mean",
    "q_stderr",
    "bound",
    "pass",
    "jensen",
    "chain_ordered",
];
pub const TRUNCATION_COLUMNS: &[&str] = &[
    "level",
    "left",
    "right",
    "right_std_error",
    "increment",
    "increment_std_error",
    "agree",
    "divergence_suspected",
    "top_k_share",
];
pub const COUNTEREXAMPLE_COLUMNS: &[&str] = &["n", "resolvent_distance", "f_norm", "f_sq_norm", "distance_to_limit"];
pub const CUTOFF_COLUMNS: &[&str] = &["matrix", "cutoff_level", "lhs", "rhs", "pass"];
pub const CROSSCHECK_COLUMNS: &[&str] = &[
    "t",
    "mc_value",
    "mc_std_error",
    "grid_value",
    "closed_form",
    "grid_vs_closed_rel",
    "grid_agrees",
    "mc_vs_grid_agrees",
    "mc_vs_closed_agrees",
];
pub const REFINE_COLUMNS: &[&str] = &["n_steps", "mean", "std_error", "diff", "diff_std_error", "z_score"];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

fn fmt_moment(m: ExpMoment) -> String {
    match m {
        ExpMoment::Finite(v) => fmt_f64(v),
        ExpMoment::Divergent => "inf".into(),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// `out.csv` -> `out-cutoff.csv`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}-{suffix}.{ext}"))
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let rng = RngSeed::new(cfg.seed);
    match cfg.experiment {
        Experiment::QEstimate => q_estimate(cfg, rng),
        Experiment::MatrixElement => matrix_element_run(cfg, rng),
        Experiment::BoundSweep => bound_sweep(cfg, rng),
        Experiment::TruncationStudy => truncation(cfg, rng),
        Experiment::Theorem31Demo => theorem31(cfg, rng),
        Experiment::OracleCrosscheck => crosscheck(cfg, rng),
        Experiment::RefineSteps => refine(cfg, rng),
    }
}

fn q_estimate(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let q = estimate_q(&cfg.x, &cfg.y, &v, cfg.t, &cfg.mc, rng)?;
    let row = vec![
        fmt_vec(&cfg.x),
        fmt_vec(&cfg.y),
        fmt_f64(cfg.t),
        fmt_f64(q.mean),
        fmt_f64(q.std_error),
        q.n_samples.to_string(),
        q.n_steps.to_string(),
        q.divergence_suspected.to_string(),
        fmt_f64(q.top_k_share),
    ];
    let flag = if q.divergence_suspected {
        ", divergence suspected"
    } else {
        ""
    };
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: Q_ESTIMATE_COLUMNS,
            rows: vec![row],
        }],
        summary: format!("q-estimate: Q = {} ± {}{flag}", q.mean, q.std_error),
    })
}

fn wavefunctions(cfg: &ExperimentConfig) -> Result<(Wavefunction, Wavefunction), CliError> {
    Ok((cfg.phi.build()?, cfg.psi.build()?))
}

fn matrix_element_run(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let (phi, psi) = wavefunctions(cfg)?;
    let e = matrix_element(&phi, &psi, &v, cfg.t, &cfg.quadrature, &cfg.mc, rng)?;
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: MATRIX_ELEMENT_COLUMNS,
            rows: vec![vec![
                fmt_f64(cfg.t),
                fmt_f64(e.value),
                fmt_f64(e.std_error),
                e.quadrature_nodes.to_string(),
                e.mc_samples_per_node.to_string(),
            ]],
        }],
        summary: format!("matrix-element: {} ± {}", e.value, e.std_error),
    })
}

fn bound_sweep(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let s = cfg.sweep;
    let grid = square_grid(s.lo, s.hi, s.points);
    let delta = 2.0 * s.delta0 / cfg.t;
    let report = verify_bound_sweep(&v, cfg.t, delta, &grid, &cfg.mc, rng)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_vec(&r.x),
                fmt_vec(&r.y),
                fmt_f64(r.q.mean),
                fmt_f64(r.q.std_error),
                fmt_f64(r.bound),
                r.pass.to_string(),
                fmt_moment(r.jensen),
                r.chain_ordered.to_string(),
            ]
        })
        .collect();
    let n = report.rows.len();
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: BOUND_SWEEP_COLUMNS,
            rows,
        }],
        summary: format!(
            "bound-sweep: pass {}/{n}, chain ordered {}/{n}",
            report.passes(),
            report.chain_ordered()
        ),
    })
}

fn truncation(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let levels = &cfg.truncation.levels;
    let (rows, summary) = match cfg.truncation.target {
        TruncationTarget::Q => {
            let r = q_truncation_study(&v, &cfg.x, &cfg.y, cfg.t, levels, &cfg.mc, rng)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        fmt_f64(row.level),
                        String::new(),
                        fmt_f64(row.estimate.mean),
                        fmt_f64(row.estimate.std_error),
                        fmt_f64(row.increment),
                        fmt_f64(row.increment_std_error),
                        String::new(),
                        row.estimate.divergence_suspected.to_string(),
                        fmt_f64(row.estimate.top_k_share),
                    ]
                })
                .collect();
            let summary = format!(
                "truncation-study: {}, monotone {}, divergence suspected {}",
                if r.stabilized { "stabilized" } else { "no stabilization" },
                yes_no(r.monotone),
                yes_no(r.divergence_suspected_at_last)
            );
            (rows, summary)
        }
        TruncationTarget::MatrixElement => {
            let (phi, psi) = wavefunctions(cfg)?;
            let oracle = OracleConfig {
                half_width: cfg.oracle.half_width,
                n_points: cfg.oracle.n_points,
            };
            let r = truncation_study(&v, &phi, &psi, cfg.t, levels, &oracle, &cfg.quadrature, &cfg.mc, rng)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        fmt_f64(row.level),
                        fmt_f64(row.left),
                        fmt_f64(row.right.value),
                        fmt_f64(row.right.std_error),
                        fmt_f64(row.increment),
                        fmt_f64(row.increment_std_error),
                        row.agree.to_string(),
                        row.divergence_suspected.to_string(),
                        String::new(),
                    ]
                })
                .collect();
            let agreeing = r.rows.iter().filter(|row| row.agree).count();
            let summary = format!(
                "truncation-study: {}, monotone {}, divergence suspected {}, left {}, left monotone {}, agree {agreeing}/{}",
                if r.right_stabilized { "stabilized" } else { "no stabilization" },
                yes_no(r.right_monotone),
                yes_no(r.rows.last().is_some_and(|row| row.divergence_suspected)),
                if r.left_stabilized { "stabilized" } else { "no stabilization" },
                yes_no(r.left_monotone),
                r.rows.len()
            );
            (rows, summary)
        }
    };
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: TRUNCATION_COLUMNS,
            rows,
        }],
        summary,
    })
}

/// Relative slack for the cutoff contraction inequality, which holds
/// exactly up to rounding.
const CONTRACTION_SLACK: f64 = 1e-12;

fn theorem31(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let th = &cfg.theorem31;
    let (seq, psi) = indicator_counterexample(th.grid_points, &th.levels)?;
    let report = check_theorem31(&seq, |x| x, &psi)?;
    let counter_rows = th
        .levels
        .iter()
        .enumerate()
        .map(|(i, n)| {
            vec![
                n.to_string(),
                fmt_f64(report.resolvent_distances[i]),
                fmt_f64(report.f_norms[i]),
                fmt_f64(report.f_sq_norms[i]),
                fmt_f64(report.distances_to_limit[i]),
            ]
        })
        .collect();

    let mut cutoff_rows = Vec::new();
    let mut passes = 0;
    for i in 0..th.matrices {
        let a = random_symmetric(th.matrix_size, &mut rng.derive(i as u64).rng());
        let probe = random_symmetric(th.matrix_size, &mut rng.derive(i as u64).derive(1).rng())
            .column(0)
            .into_owned();
        for &m in &th.cutoff_levels {
            let f = apply_cutoff(|x: f64| (-x).exp(), m)?;
            let (lhs, rhs) = cutoff_contraction(&a, &f, &probe)?;
            let pass = lhs <= rhs * (1.0 + CONTRACTION_SLACK);
            passes += usize::from(pass);
            cutoff_rows.push(vec![
                i.to_string(),
                fmt_f64(m),
                fmt_f64(lhs),
                fmt_f64(rhs),
                pass.to_string(),
            ]);
        }
    }
    let total = cutoff_rows.len();
    Ok(Outcome {
        tables: vec![
            Table {
                path: cfg.output_path.clone(),
                header: COUNTEREXAMPLE_COLUMNS,
                rows: counter_rows,
            },
            Table {
                path: sibling(&cfg.output_path, "cutoff"),
                header: CUTOFF_COLUMNS,
                rows: cutoff_rows,
            },
        ],
        summary: format!(
            "theorem31-demo: counterexample converges {}, second moments bounded {}, consistent {}; cutoff contraction pass {passes}/{total}",
            yes_no(report.converges),
            yes_no(report.second_moment_bounded),
            yes_no(report.consistent())
        ),
    })
}

fn crosscheck(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let (phi, psi) = wavefunctions(cfg)?;
    let grid = GridOracle::new(&v, cfg.oracle.half_width, cfg.oracle.n_points)?;
    let p = &cfg.potential;
    let mut rows = Vec::new();
    let mut agreeing = 0;
    for (k, &t) in cfg.crosscheck_times.iter().enumerate() {
        let mc = matrix_element(&phi, &psi, &v, t, &cfg.quadrature, &cfg.mc, rng.derive(k as u64))?;
        let g = grid.matrix_element(&phi, &psi, t)?;
        let closed = closed_form(p.name, p, &phi, &psi, t, &cfg.quadrature)?;
        let mc_vs_grid = agree(g, mc.value, mc.std_error);
        let mut row = vec![fmt_f64(t), fmt_f64(mc.value), fmt_f64(mc.std_error), fmt_f64(g)];
        let ok = match closed {
            Some(c) => {
                let rel = (g - c).abs() / c.abs();
                let grid_ok = rel <= cfg.oracle.tolerance;
                let mc_vs_closed = agree(c, mc.value, mc.std_error);
                row.extend([
                    fmt_f64(c),
                    fmt_f64(rel),
                    grid_ok.to_string(),
                    mc_vs_grid.to_string(),
                    mc_vs_closed.to_string(),
                ]);
                grid_ok && mc_vs_grid && mc_vs_closed
            }
            None => {
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    mc_vs_grid.to_string(),
                    String::new(),
                ]);
                mc_vs_grid
            }
        };
        agreeing += usize::from(ok);
        rows.push(row);
    }
    let n = rows.len();
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: CROSSCHECK_COLUMNS,
            rows,
        }],
        summary: format!("oracle-crosscheck: agree {agreeing}/{n}"),
    })
}

fn closed_form(
    name: PotentialName,
    p: &crate::config::PotentialConfig,
    phi: &Wavefunction,
    psi: &Wavefunction,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<Option<f64>, CliError> {
    let value = match name {
        PotentialName::Zero => integrate_kernel(phi, psi, |x, y| free_kernel(x, y, t).unwrap_or(f64::NAN), quad)?,
        PotentialName::Constant => {
            integrate_kernel(phi, psi, |x, y| free_kernel(x, y, t).unwrap_or(f64::NAN), quad)? * (-p.c * t).exp()
        }
        PotentialName::Harmonic => {
            let omega = p.omega;
            integrate_kernel(
                phi,
                psi,
                |x, y| mehler_kernel(x[0], y[0], omega, t).unwrap_or(f64::NAN),
                quad,
            )?
        }
        PotentialName::Stark => {
            let f = p.field[0];
            integrate_kernel(
                phi,
                psi,
                |x, y| stark_kernel(x[0], y[0], f, t).unwrap_or(f64::NAN),
                quad,
            )?
        }
        PotentialName::InvertedQuadratic => return Ok(None),
    };
    Ok(Some(value))
}

fn refine(cfg: &ExperimentConfig, rng: RngSeed) -> Result<Outcome, CliError> {
    let v = cfg.potential.build()?;
    let r = refine_steps(&cfg.x, &cfg.y, &v, cfg.t, &cfg.mc, &cfg.steps_schedule, rng)?;
    let rows = r
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![
                s.n_steps.to_string(),
                fmt_f64(s.estimate.mean),
                fmt_f64(s.estimate.std_error),
            ];
            match i.checked_sub(1).map(|j| r.differences[j]) {
                Some(d) => row.extend([fmt_f64(d.value), fmt_f64(d.std_error), fmt_f64(d.z_score())]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
            row
        })
        .collect();
    let order = r
        .empirical_order
        .map_or_else(|| "n/a".to_string(), |o| format!("{o:.3}"));
    Ok(Outcome {
        tables: vec![Table {
            path: cfg.output_path.clone(),
            header: REFINE_COLUMNS,
            rows,
        }],
        summary: format!("refine-steps: empirical order {order}, max |z| {:.3}", r.max_z_score()),
    })
}
