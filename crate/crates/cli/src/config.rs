//! Strict TOML configuration for the experiment runner.
//!
//! `experiment` is the only mandatory key. Every other key has a default,
//! and keys outside the schema are errors. Validation keeps going after the
//! first problem so that one run reports all of them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fkmc::feynman_kac::{McConfig, QuadratureConfig};
use fkmc::potentials::PotentialSpec;
use fkmc::wavefunction::Wavefunction;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    QEstimate,
    MatrixElement,
    BoundSweep,
    TruncationStudy,
    Theorem31Demo,
    OracleCrosscheck,
    RefineSteps,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::QEstimate,
        Experiment::MatrixElement,
        Experiment::BoundSweep,
        Experiment::TruncationStudy,
        Experiment::Theorem31Demo,
        Experiment::OracleCrosscheck,
        Experiment::RefineSteps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::QEstimate => "q-estimate",
            Experiment::MatrixElement => "matrix-element",
            Experiment::BoundSweep => "bound-sweep",
            Experiment::TruncationStudy => "truncation-study",
            Experiment::Theorem31Demo => "theorem31-demo",
            Experiment::OracleCrosscheck => "oracle-crosscheck",
            Experiment::RefineSteps => "refine-steps",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment \"{s}\""))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialName {
    Zero,
    Harmonic,
    Stark,
    InvertedQuadratic,
    Constant,
}

impl PotentialName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "zero" => PotentialName::Zero,
            "harmonic" => PotentialName::Harmonic,
            "stark" => PotentialName::Stark,
            "inverted-quadratic" => PotentialName::InvertedQuadratic,
            "constant" => PotentialName::Constant,
            _ => return None,
        })
    }
}

/// A catalog potential by name. `F` fixes the dimension of a Stark field;
/// the other entries take `dim` (default 1).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub name: PotentialName,
    pub dim: usize,
    pub field: Vec<f64>,
    pub omega: f64,
    pub c: f64,
}

impl PotentialConfig {
    pub fn build(&self) -> fkmc::Result<PotentialSpec> {
        match self.name {
            PotentialName::Zero => PotentialSpec::zero(self.dim),
            PotentialName::Harmonic => PotentialSpec::harmonic(self.dim, self.omega),
            PotentialName::Stark => PotentialSpec::stark(self.field.clone()),
            PotentialName::InvertedQuadratic => PotentialSpec::inverted_quadratic(self.dim, self.c),
            PotentialName::Constant => PotentialSpec::constant(self.dim, self.c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavefunctionShape {
    Bump,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionConfig {
    pub shape: WavefunctionShape,
    pub center: Vec<f64>,
    pub width: f64,
    /// Truncation radius of a Gaussian; chosen from its tail when absent.
    pub radius: Option<f64>,
}

impl WavefunctionConfig {
    pub fn build(&self) -> fkmc::Result<Wavefunction> {
        match self.shape {
            WavefunctionShape::Bump => Wavefunction::bump(self.center.clone(), self.width),
            WavefunctionShape::Gaussian => Wavefunction::gaussian(self.center.clone(), self.width, self.radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub half_width: f64,
    pub n_points: usize,
    /// Relative agreement required between the grid and a closed form.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub delta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationTarget {
    MatrixElement,
    Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSettings {
    pub levels: Vec<f64>,
    pub target: TruncationTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem31Settings {
    pub grid_points: usize,
    pub levels: Vec<usize>,
    pub matrices: usize,
    pub matrix_size: usize,
    pub cutoff_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub potential: PotentialConfig,
    pub phi: WavefunctionConfig,
    pub psi: WavefunctionConfig,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub mc: McConfig,
    pub quadrature: QuadratureConfig,
    pub oracle: OracleSettings,
    pub sweep: SweepSettings,
    pub truncation: TruncationSettings,
    pub steps_schedule: Vec<usize>,
    pub crosscheck_times: Vec<f64>,
    pub theorem31: Theorem31Settings,
    pub seed: u64,
    pub workers: usize,
    pub output_path: PathBuf,
}

/// Collects every problem in a document.
#[derive(Default)]
struct Reader {
    errors: Vec<String>,
}

fn key_path(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Reader {
    fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn reject_unknown(&mut self, section: &str, table: &Table, allowed: &[&str]) {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in table.keys() {
            if !allowed.contains(key.as_str()) {
                self.error(format!("unknown key \"{}\"", key_path(section, key)));
            }
        }
    }

    fn table<'a>(&mut self, parent: &'a Table, section: &str) -> Option<&'a Table> {
        match parent.get(section) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.error(format!("\"{section}\" must be a table"));
                None
            }
        }
    }

    fn f64_or(&mut self, table: &Table, section: &str, key: &str, default: f64) -> f64 {
        match table.get(key) {
            None => default,
            Some(v) => as_f64(v).unwrap_or_else(|| {
                self.error(format!("{} must be a number", key_path(section, key)));
                default
            }),
        }
    }

    fn opt_f64(&mut self, table: &Table, section: &str, key: &str) -> Option<f64> {
        table.get(key).and_then(|v| {
            let r = as_f64(v);
            if r.is_none() {
                self.error(format!("{} must be a number", key_path(section, key)));
            }
            r
        })
    }

    fn int_or(&mut self, table: &Table, section: &str, key: &str, default: i64) -> i64 {
        match table.get(key) {
            None => default,
            Some(Value::Integer(i)) => *i,
            Some(_) => {
                self.error(format!("{} must be an integer", key_path(section, key)));
                default
            }
        }
    }

    fn positive_usize_or(&mut self, table: &Table, section: &str, key: &str, default: usize) -> usize {
        let v = self.int_or(table, section, key, default as i64);
        if v <= 0 {
            self.error(format!("{} must be a positive integer", key_path(section, key)));
            default
        } else {
            v as usize
        }
    }

    fn str_or<'a>(&mut self, table: &'a Table, section: &str, key: &str, default: &'a str) -> &'a str {
        match table.get(key) {
            None => default,
            Some(Value::String(s)) => s,
            Some(_) => {
                self.error(format!("{} must be a string", key_path(section, key)));
                default
            }
        }
    }

    /// A number or an array of numbers.
    fn f64_list_or(&mut self, table: &Table, section: &str, key: &str, default: &[f64]) -> Vec<f64> {
        match table.get(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items.iter().map(as_f64).collect();
                parsed.unwrap_or_else(|| {
                    self.error(format!("{} must contain only numbers", key_path(section, key)));
                    default.to_vec()
                })
            }
            Some(v) => match as_f64(v) {
                Some(f) => vec![f],
                None => {
                    self.error(format!(
                        "{} must be a number or an array of numbers",
                        key_path(section, key)
                    ));
                    default.to_vec()
                }
            },
        }
    }

    fn usize_list_or(&mut self, table: &Table, section: &str, key: &str, default: &[usize]) -> Vec<usize> {
        match table.get(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<usize>> = items
                    .iter()
                    .map(|v| match v {
                        Value::Integer(i) if *i > 0 => Some(*i as usize),
                        _ => None,
                    })
                    .collect();
                parsed.unwrap_or_else(|| {
                    self.error(format!(
                        "{} must be an array of positive integers",
                        key_path(section, key)
                    ));
                    default.to_vec()
                })
            }
            Some(_) => {
                self.error(format!(
                    "{} must be an array of positive integers",
                    key_path(section, key)
                ));
                default.to_vec()
            }
        }
    }

    fn require_positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.error(format!("{name} must be > 0"));
        }
    }

    fn require_increasing<T: PartialOrd>(&mut self, name: &str, values: &[T]) {
        if values.is_empty() {
            self.error(format!("{name} must not be empty"));
        } else if values.windows(2).any(|w| w[0] >= w[1]) {
            self.error(format!("{name} must be strictly increasing"));
        }
    }
}

const TOP_LEVEL_KEYS: &[&str] = &[
    "experiment",
    "potential",
    "F",
    "omega",
    "c",
    "dim",
    "phi",
    "psi",
    "x",
    "y",
    "t",
    "mc",
    "quadrature",
    "oracle",
    "sweep",
    "truncation",
    "refine",
    "crosscheck",
    "theorem31",
    "seed",
    "workers",
    "output_path",
];

fn read_potential(r: &mut Reader, doc: &Table) -> Option<PotentialConfig> {
    // `potential = "stark"` with parameters beside it, or a `[potential]` table
    let (section, params, name) = match doc.get("potential") {
        None => ("", doc, "zero".to_string()),
        Some(Value::String(s)) => ("", doc, s.clone()),
        Some(Value::Table(t)) => {
            r.reject_unknown("potential", t, &["name", "F", "omega", "c", "dim"]);
            for key in ["F", "omega", "c", "dim"] {
                if doc.contains_key(key) {
                    r.error(format!("\"{key}\" belongs inside the [potential] table"));
                }
            }
            match t.get("name") {
                Some(Value::String(s)) => ("potential", t, s.clone()),
                Some(_) => {
                    r.error("potential.name must be a string");
                    return None;
                }
                None => {
                    r.error("potential table is missing \"name\"");
                    return None;
                }
            }
        }
        Some(_) => {
            r.error("potential must be a name or a table");
            return None;
        }
    };
    let Some(kind) = PotentialName::parse(&name) else {
        r.error(format!(
            "unknown potential \"{name}\" (expected zero, harmonic, stark, inverted-quadratic or constant)"
        ));
        return None;
    };
    let uses = |key: &str| {
        matches!(
            (kind, key),
            (PotentialName::Stark, "F")
                | (PotentialName::Harmonic, "omega" | "dim")
                | (PotentialName::InvertedQuadratic | PotentialName::Constant, "c" | "dim")
                | (PotentialName::Zero, "dim")
        )
    };
    for key in ["F", "omega", "c", "dim"] {
        if params.contains_key(key) && !uses(key) {
            r.error(format!(
                "{} is not a parameter of potential \"{name}\"",
                key_path(section, key)
            ));
        }
    }
    let dim = r.positive_usize_or(params, section, "dim", 1);
    let omega = r.f64_or(params, section, "omega", 1.0);
    if kind == PotentialName::Harmonic {
        r.require_positive(&key_path(section, "omega"), omega);
    }
    let mut c = 0.0;
    if matches!(kind, PotentialName::InvertedQuadratic | PotentialName::Constant) {
        match r.opt_f64(params, section, "c") {
            Some(v) => c = v,
            None if !params.contains_key("c") => r.error(format!(
                "potential \"{name}\" requires parameter {}",
                key_path(section, "c")
            )),
            None => {}
        }
        if kind == PotentialName::InvertedQuadratic && !(c >= 0.0) {
            r.error(format!("{} must be >= 0", key_path(section, "c")));
        }
    }
    let mut field = Vec::new();
    if kind == PotentialName::Stark {
        if params.contains_key("F") {
            field = r.f64_list_or(params, section, "F", &[]);
            if field.is_empty() {
                r.error(format!("{} must not be empty", key_path(section, "F")));
            }
        } else {
            r.error(format!(
                "potential \"stark\" requires parameter {}",
                key_path(section, "F")
            ));
        }
    }
    let dim = if kind == PotentialName::Stark {
        field.len().max(1)
    } else {
        dim
    };
    Some(PotentialConfig {
        name: kind,
        dim,
        field,
        omega,
        c,
    })
}

fn read_wavefunction(r: &mut Reader, doc: &Table, section: &str, dim: usize) -> WavefunctionConfig {
    let empty = Table::new();
    let t = r.table(doc, section).unwrap_or(&empty);
    r.reject_unknown(section, t, &["kind", "center", "width", "radius"]);
    let shape = match r.str_or(t, section, "kind", "bump") {
        "bump" => WavefunctionShape::Bump,
        "gaussian" => WavefunctionShape::Gaussian,
        other => {
            r.error(format!(
                "unknown wavefunction \"{other}\" in {section}.kind (expected bump or gaussian)"
            ));
            WavefunctionShape::Bump
        }
    };
    let center = r.f64_list_or(t, section, "center", &vec![0.0; dim]);
    if center.len() != dim {
        r.error(format!(
            "{section}.center has {} entries, potential dimension is {dim}",
            center.len()
        ));
    }
    let width = r.f64_or(t, section, "width", 1.0);
    r.require_positive(&format!("{section}.width"), width);
    let radius = r.opt_f64(t, section, "radius");
    if shape == WavefunctionShape::Bump && radius.is_some() {
        r.error(format!("{section}.radius applies to gaussian wavefunctions only"));
    }
    if let Some(rad) = radius {
        r.require_positive(&format!("{section}.radius"), rad);
    }
    WavefunctionConfig {
        shape,
        center,
        width,
        radius,
    }
}

/// Validates a parsed document, applying defaults.
pub fn validate_config(doc: &Table) -> Result<ExperimentConfig, Vec<String>> {
    let mut r = Reader::default();
    r.reject_unknown("", doc, TOP_LEVEL_KEYS);

    let experiment = match doc.get("experiment") {
        None => {
            r.error("missing mandatory key \"experiment\"");
            None
        }
        Some(Value::String(s)) => match s.parse::<Experiment>() {
            Ok(e) => Some(e),
            Err(msg) => {
                r.error(msg);
                None
            }
        },
        Some(_) => {
            r.error("experiment must be a string");
            None
        }
    };

    let potential = read_potential(&mut r, doc);
    let dim = potential.as_ref().map_or(1, |p| p.dim);
    let phi = read_wavefunction(&mut r, doc, "phi", dim);
    let psi = read_wavefunction(&mut r, doc, "psi", dim);

    let x = r.f64_list_or(doc, "", "x", &vec![0.0; dim]);
    let y = r.f64_list_or(doc, "", "y", &vec![0.0; dim]);
    for (name, v) in [("x", &x), ("y", &y)] {
        if v.len() != dim {
            r.error(format!("{name} has {} entries, potential dimension is {dim}", v.len()));
        }
    }
    let t = r.f64_or(doc, "", "t", 1.0);
    r.require_positive("t", t);

    let empty = Table::new();
    let mc_t = r.table(doc, "mc").unwrap_or(&empty);
    r.reject_unknown("mc", mc_t, &["n_samples", "n_steps", "top_k", "heavy_fraction"]);
    let d = McConfig::default();
    let mc = McConfig {
        n_samples: r.positive_usize_or(mc_t, "mc", "n_samples", d.n_samples),
        n_steps: r.positive_usize_or(mc_t, "mc", "n_steps", d.n_steps),
        top_k: r.positive_usize_or(mc_t, "mc", "top_k", d.top_k),
        heavy_fraction: r.f64_or(mc_t, "mc", "heavy_fraction", d.heavy_fraction),
    };
    if !(mc.heavy_fraction > 0.0 && mc.heavy_fraction <= 1.0) {
        r.error("mc.heavy_fraction must lie in (0, 1]");
    }

    let q_t = r.table(doc, "quadrature").unwrap_or(&empty);
    r.reject_unknown("quadrature", q_t, &["nodes_per_axis"]);
    let quadrature = QuadratureConfig {
        nodes_per_axis: r.positive_usize_or(q_t, "quadrature", "nodes_per_axis", 32),
    };

    let o_t = r.table(doc, "oracle").unwrap_or(&empty);
    r.reject_unknown("oracle", o_t, &["L", "n_points", "tolerance"]);
    let oracle = OracleSettings {
        half_width: r.f64_or(o_t, "oracle", "L", 10.0),
        n_points: r.positive_usize_or(o_t, "oracle", "n_points", 1000),
        tolerance: r.f64_or(o_t, "oracle", "tolerance", 1e-3),
    };
    r.require_positive("oracle.L", oracle.half_width);
    r.require_positive("oracle.tolerance", oracle.tolerance);
    if oracle.n_points < 3 {
        r.error("oracle.n_points must be at least 3");
    }

    let s_t = r.table(doc, "sweep").unwrap_or(&empty);
    r.reject_unknown("sweep", s_t, &["lo", "hi", "points", "delta0"]);
    let sweep = SweepSettings {
        lo: r.f64_or(s_t, "sweep", "lo", -3.0),
        hi: r.f64_or(s_t, "sweep", "hi", 3.0),
        points: r.positive_usize_or(s_t, "sweep", "points", 7),
        delta0: r.f64_or(s_t, "sweep", "delta0", 0.5),
    };
    if !(sweep.lo <= sweep.hi) {
        r.error("sweep.lo must not exceed sweep.hi");
    }
    if !(sweep.delta0 > 0.0 && sweep.delta0 < 1.0) {
        r.error("sweep.delta0 must lie in (0, 1)");
    }

    let tr_t = r.table(doc, "truncation").unwrap_or(&empty);
    r.reject_unknown("truncation", tr_t, &["levels", "target"]);
    let levels = r.f64_list_or(tr_t, "truncation", "levels", &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
    r.require_increasing("truncation.levels", &levels);
    if levels.iter().any(|&l| !(l >= 0.0)) {
        r.error("truncation.levels must be >= 0");
    }
    let target = match r.str_or(tr_t, "truncation", "target", "matrix-element") {
        "matrix-element" => TruncationTarget::MatrixElement,
        "q" => TruncationTarget::Q,
        other => {
            r.error(format!(
                "unknown truncation.target \"{other}\" (expected matrix-element or q)"
            ));
            TruncationTarget::MatrixElement
        }
    };

    let rf_t = r.table(doc, "refine").unwrap_or(&empty);
    r.reject_unknown("refine", rf_t, &["schedule"]);
    let steps_schedule = r.usize_list_or(rf_t, "refine", "schedule", &[8, 16, 32, 64]);
    r.require_increasing("refine.schedule", &steps_schedule);
    if let Some(&finest) = steps_schedule.last() {
        if steps_schedule.iter().any(|&n| !finest.is_multiple_of(n)) {
            r.error("every refine.schedule entry must divide the last one");
        }
    }

    let cc_t = r.table(doc, "crosscheck").unwrap_or(&empty);
    r.reject_unknown("crosscheck", cc_t, &["times"]);
    let crosscheck_times = r.f64_list_or(cc_t, "crosscheck", "times", &[t]);
    if cc_t.contains_key("times") && (crosscheck_times.is_empty() || crosscheck_times.iter().any(|&v| !(v > 0.0))) {
        r.error("crosscheck.times must be nonempty and > 0");
    }

    let th_t = r.table(doc, "theorem31").unwrap_or(&empty);
    r.reject_unknown(
        "theorem31",
        th_t,
        &["grid_points", "levels", "matrices", "matrix_size", "cutoff_levels"],
    );
    let theorem31 = Theorem31Settings {
        grid_points: r.positive_usize_or(th_t, "theorem31", "grid_points", 256),
        levels: r.usize_list_or(th_t, "theorem31", "levels", &[4, 16, 64]),
        matrices: r.positive_usize_or(th_t, "theorem31", "matrices", 50),
        matrix_size: r.positive_usize_or(th_t, "theorem31", "matrix_size", 20),
        cutoff_levels: r.f64_list_or(th_t, "theorem31", "cutoff_levels", &[1.0, 10.0, 100.0]),
    };
    r.require_increasing("theorem31.levels", &theorem31.levels);
    if theorem31.levels.iter().any(|&n| n > theorem31.grid_points) {
        r.error("theorem31.levels must not exceed theorem31.grid_points");
    }
    if theorem31.cutoff_levels.is_empty() || theorem31.cutoff_levels.iter().any(|&m| !(m > 0.0)) {
        r.error("theorem31.cutoff_levels must be nonempty and > 0");
    }

    let seed = r.int_or(doc, "", "seed", 0);
    if seed < 0 {
        r.error("seed must be >= 0");
    }
    let workers = r.positive_usize_or(doc, "", "workers", 1);
    let output_default = experiment.map_or_else(|| "out.csv".to_string(), |e| format!("{e}.csv"));
    let output_path = PathBuf::from(r.str_or(doc, "", "output_path", &output_default));

    if let (Some(e), Some(p)) = (experiment, potential.as_ref()) {
        let needs_1d = matches!(
            e,
            Experiment::BoundSweep | Experiment::OracleCrosscheck | Experiment::TruncationStudy
        ) && !(e == Experiment::TruncationStudy && target == TruncationTarget::Q);
        if needs_1d && p.dim != 1 {
            r.error(format!("experiment {e} needs a one-dimensional potential"));
        }
        if e == Experiment::OracleCrosscheck {
            for wf in [&phi, &psi] {
                if wf.shape == WavefunctionShape::Bump
                    && wf
                        .center
                        .iter()
                        .any(|c| (c - wf.width).abs() > oracle.half_width || (c + wf.width).abs() > oracle.half_width)
                {
                    r.error("wavefunction support exceeds the oracle domain [-L, L]");
                }
            }
        }
    }

    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    Ok(ExperimentConfig {
        experiment: experiment.expect("checked above"),
        potential: potential.expect("checked above"),
        phi,
        psi,
        x,
        y,
        t,
        mc,
        quadrature,
        oracle,
        sweep,
        truncation: TruncationSettings { levels, target },
        steps_schedule,
        crosscheck_times,
        theorem31,
        seed: seed as u64,
        workers,
        output_path,
    })
}

/// Parses TOML text and validates it.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| vec![format!("invalid TOML: {}", e.message())])?;
    validate_config(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        parse_config(text).expect_err("should be rejected")
    }

    #[test]
    fn experiment_is_mandatory() {
        assert_eq!(errors(""), vec!["missing mandatory key \"experiment\"".to_string()]);
    }

    #[test]
    fn defaults_applied() {
        let c = parse_config("experiment = \"q-estimate\"").unwrap();
        assert_eq!(c.potential.name, PotentialName::Zero);
        assert_eq!(c.t, 1.0);
        assert_eq!(c.x, vec![0.0]);
        assert_eq!(c.mc, McConfig::default());
        assert_eq!(c.quadrature.nodes_per_axis, 32);
        assert_eq!(c.seed, 0);
        assert_eq!(c.workers, 1);
        assert_eq!(c.output_path, PathBuf::from("q-estimate.csv"));
        assert_eq!(c.phi.shape, WavefunctionShape::Bump);
    }

    #[test]
    fn negative_time() {
        assert_eq!(
            errors("experiment = \"q-estimate\"\nt = -1"),
            vec!["t must be > 0".to_string()]
        );
    }

    #[test]
    fn stark_field_missing() {
        let e = errors("experiment = \"q-estimate\"\npotential = \"stark\"");
        assert_eq!(e, vec!["potential \"stark\" requires parameter F".to_string()]);
        let e = errors("experiment = \"q-estimate\"\n[potential]\nname = \"stark\"");
        assert_eq!(
            e,
            vec!["potential \"stark\" requires parameter potential.F".to_string()]
        );
    }

    #[test]
    fn both_potential_forms() {
        let a = parse_config("experiment = \"q-estimate\"\npotential = \"stark\"\nF = [1.0]").unwrap();
        let b = parse_config("experiment = \"q-estimate\"\n[potential]\nname = \"stark\"\nF = 1").unwrap();
        assert_eq!(a.potential, b.potential);
        assert_eq!(a.potential.field, vec![1.0]);
        let h = parse_config("experiment = \"q-estimate\"\npotential = { name = \"harmonic\", omega = 2.0, dim = 2 }\nx = [0, 0]\ny = [1, 1]\n[phi]\ncenter = [0, 0]\n[psi]\ncenter = [0, 0]").unwrap();
        assert_eq!(h.potential.dim, 2);
        assert_eq!(h.potential.omega, 2.0);
    }

    #[test]
    fn every_problem_reported() {
        let e = errors(
            "experiment = \"nope\"\nt = 0\nbogus = 1\npotential = \"warp\"\n[mc]\nn_samples = 0\nextra = 2\n[truncation]\nlevels = [4, 2]",
        );
        for needle in [
            "unknown experiment \"nope\"",
            "t must be > 0",
            "unknown key \"bogus\"",
            "unknown potential \"warp\"",
            "mc.n_samples must be a positive integer",
            "unknown key \"mc.extra\"",
            "truncation.levels must be strictly increasing",
        ] {
            assert!(e.iter().any(|m| m.contains(needle)), "missing {needle:?} in {e:?}");
        }
    }

    #[test]
    fn misplaced_parameters() {
        let e = errors("experiment = \"q-estimate\"\npotential = \"zero\"\nomega = 2");
        assert!(e[0].contains("omega is not a parameter of potential \"zero\""));
        let e = errors("experiment = \"q-estimate\"\nc = 1\n[potential]\nname = \"constant\"");
        assert!(e.iter().any(|m| m.contains("belongs inside the [potential] table")));
    }

    #[test]
    fn dimension_mismatch() {
        let e = errors("experiment = \"q-estimate\"\npotential = \"stark\"\nF = [1, 0]\nx = [0]");
        assert!(e.iter().any(|m| m.contains("x has 1 entries")));
    }

    #[test]
    fn schedule_must_nest() {
        let e = errors("experiment = \"refine-steps\"\n[refine]\nschedule = [3, 8]");
        assert!(e[0].contains("divide the last"));
    }

    #[test]
    fn bad_toml() {
        assert!(errors("experiment = ")[0].starts_with("invalid TOML"));
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
