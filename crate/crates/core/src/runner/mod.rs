//! Configuration-driven verification runs: planning, parallel evaluation in
//! deterministic order, and CSV/JSON reports.

mod config;
mod report;

pub use config::{
    expand_checks, CheckKind, ClassicalSpec, CollectionSpec, LiftSettings, OutputSpec, QcElement, QcSpec, RunConfig,
    SweepSpec, Tolerances, CONFIG_SCHEMA,
};
pub use report::{strip_wall_time, CheckRecord, Status, Summary, VerificationReport, CSV_COLUMNS, REPORT_SCHEMA};

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fockspace::{ginibre_state, make_state, make_state_with_tail_bound, StateFamily};
use crate::inequalities::{
    entropy_sum_form_check, epi_basic, guha_monotonicity, theorem1_check, theorem2_check, theorem3_check,
    theorem4_check, Ensemble, InequalityMargin, SubsetCollection, WeightChoice, WeightDistribution,
};
use crate::information::debruijn_check;
use crate::liftproof::{lemma2_check, probe_operators, projector_decomposition_check, prop1_check, IdentityCheck};
use crate::{DensityMatrix, Error, Subset, C64};

/// Environment variable holding the largest cutoff a run may request.
pub const MAX_CUTOFF_ENV: &str = "QEPI_MAX_CUTOFF";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid(_) | RunError::BudgetExceeded(_) => 64,
            RunError::Io(_) => 74,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

/// Hex SHA-256 of the canonical JSON serialization.
pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Every row name a check kind can produce, for `list-checks`.
pub fn check_catalog() -> Vec<(CheckKind, &'static str)> {
    CheckKind::CONCRETE.iter().map(|&k| (k, k.description())).collect()
}

#[derive(Debug, Clone)]
enum Job {
    Epi { a: StateFamily, b: StateFamily, eta: f64 },
    Subsets { families: Vec<StateFamily>, collection: CollectionSpec },
    Fisher { families: Vec<StateFamily>, collection: CollectionSpec },
    Guha { family: StateFamily, n: usize },
    Debruijn { family: StateFamily, step: f64 },
    Qc { spec: QcSpec },
    Lift { family: StateFamily, v: Subset },
    Projector { family: StateFamily },
}

impl Job {
    fn rows(&self) -> &'static [&'static str] {
        match self {
            Job::Epi { .. } => &["epi_entropy", "epi_exp"],
            Job::Subsets { .. } => &["theorem1", "entropy_sum_form"],
            Job::Fisher { .. } => &["theorem2"],
            Job::Guha { .. } => &["guha"],
            Job::Debruijn { .. } => &["debruijn"],
            Job::Qc { .. } => &["theorem3", "theorem4"],
            Job::Lift { .. } => &["prop1", "lemma2"],
            Job::Projector { .. } => &["projector"],
        }
    }
}

#[derive(Debug, Clone)]
struct Point {
    kind: CheckKind,
    family: String,
    numbers: Vec<f64>,
    label: String,
    params: String,
    n: usize,
    cutoff: usize,
    job: Job,
}

impl Point {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then_with(|| self.family.cmp(&other.family))
            .then_with(|| {
                for (a, b) in self.numbers.iter().zip(&other.numbers) {
                    match a.total_cmp(b) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                self.numbers.len().cmp(&other.numbers.len())
            })
            .then_with(|| self.label.cmp(&other.label))
    }
}

fn ensemble_label(families: &[StateFamily]) -> String {
    let first = &families[0];
    if families.iter().all(|f| f == first) {
        first.to_string()
    } else {
        let parts: Vec<String> = families.iter().map(|f| f.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

/// Every evaluation point of the run, in report order.
fn plan(config: &RunConfig) -> Result<Vec<Point>, RunError> {
    let families = config.families();
    let checks = expand_checks(&config.checks);
    let cutoff = config.cutoff;
    let lift_cutoff = config.lift.cutoff.unwrap_or(cutoff);
    let mut points = Vec::new();
    let mut ensembles: Vec<Vec<StateFamily>> = Vec::new();
    for f in &families {
        for &n in &config.sweep.n {
            ensembles.push(vec![f.clone(); n]);
        }
    }
    ensembles.extend(config.ensembles.iter().cloned());
    let mut push = |p: Point| -> Result<(), RunError> {
        if points.len() >= config.max_points {
            return Err(RunError::BudgetExceeded(format!("more than {} evaluation points", config.max_points)));
        }
        points.push(p);
        Ok(())
    };
    for kind in checks {
        match kind {
            CheckKind::Epi => {
                let pairs: Vec<(usize, usize)> = if families.len() == 1 {
                    vec![(0, 0)]
                } else {
                    (0..families.len()).flat_map(|i| (i + 1..families.len()).map(move |j| (i, j))).collect()
                };
                for (i, j) in pairs {
                    for &eta in &config.sweep.eta {
                        let (a, b) = (families[i].clone(), families[j].clone());
                        push(Point {
                            kind,
                            family: format!("{a}|{b}"),
                            numbers: vec![eta],
                            label: String::new(),
                            params: format!("eta={eta}"),
                            n: 2,
                            cutoff,
                            job: Job::Epi { a, b, eta },
                        })?;
                    }
                }
                subset_points(config, &ensembles, kind, &mut push, false)?;
            }
            CheckKind::FisherStam => subset_points(config, &ensembles, kind, &mut push, true)?,
            CheckKind::Monotonicity => {
                for f in &families {
                    for &n in config.sweep.n.iter().filter(|n| **n >= 2) {
                        push(Point {
                            kind,
                            family: f.to_string(),
                            numbers: vec![n as f64],
                            label: String::new(),
                            params: format!("n={n}"),
                            n,
                            cutoff,
                            job: Job::Guha { family: f.clone(), n },
                        })?;
                    }
                }
            }
            CheckKind::Debruijn => {
                for f in &families {
                    for &step in &config.sweep.t {
                        push(Point {
                            kind,
                            family: f.to_string(),
                            numbers: vec![step],
                            label: String::new(),
                            params: format!("step={step}"),
                            n: 1,
                            cutoff,
                            job: Job::Debruijn { family: f.clone(), step },
                        })?;
                    }
                }
            }
            CheckKind::QcEpi => {
                for (i, q) in config.qc.iter().enumerate() {
                    push(Point {
                        kind,
                        family: q.label(),
                        numbers: vec![i as f64],
                        label: String::new(),
                        params: format!("n={};n_prime={};t=1", q.states.len(), q.classical.len()),
                        n: q.states.len(),
                        cutoff,
                        job: Job::Qc { spec: q.clone() },
                    })?;
                }
            }
            CheckKind::Liftproof => {
                let spec = config.lift.spec;
                for f in &families {
                    for v in [Subset::from_bits(1), Subset::from_bits(2), Subset::from_bits(3)] {
                        push(Point {
                            kind,
                            family: f.to_string(),
                            numbers: vec![v.bits() as f64],
                            label: String::new(),
                            params: format!("v={v};spec={spec:?}"),
                            n: 2,
                            cutoff: lift_cutoff,
                            job: Job::Lift { family: f.clone(), v },
                        })?;
                    }
                    let k = config.lift.projector_registers;
                    push(Point {
                        kind,
                        family: f.to_string(),
                        numbers: vec![f64::INFINITY],
                        label: "projector".into(),
                        params: format!("registers={k};spec={spec:?}"),
                        n: k,
                        cutoff: config.lift.projector_cutoff,
                        job: Job::Projector { family: f.clone() },
                    })?;
                }
            }
            CheckKind::All => unreachable!("expanded"),
        }
    }
    points.sort_by(|a, b| a.cmp_key(b));
    Ok(points)
}

fn subset_points(
    config: &RunConfig,
    ensembles: &[Vec<StateFamily>],
    kind: CheckKind,
    push: &mut impl FnMut(Point) -> Result<(), RunError>,
    fisher: bool,
) -> Result<(), RunError> {
    for e in ensembles {
        let n = e.len();
        for c in &config.collections {
            let subsets = c.subsets(n).map_err(|err| RunError::ConfigInvalid(format!("collection {}: {err}", c.label())))?;
            // Collections that do not fit this n (for example pairs at n = 1) are skipped.
            if SubsetCollection::quantum(n, subsets).is_err() {
                continue;
            }
            let job = if fisher {
                Job::Fisher { families: e.clone(), collection: c.clone() }
            } else {
                Job::Subsets { families: e.clone(), collection: c.clone() }
            };
            push(Point {
                kind,
                family: ensemble_label(e),
                numbers: vec![n as f64],
                label: c.label(),
                params: format!("n={n};collection={}", c.label()),
                n,
                cutoff: config.cutoff,
                job,
            })?;
        }
    }
    Ok(())
}

/// A row before status classification.
struct Raw {
    check: &'static str,
    lhs: f64,
    rhs: f64,
    margin: f64,
    tolerance: f64,
    trace_deficit: f64,
    quad_err: f64,
}

impl Raw {
    fn inequality(check: &'static str, m: &InequalityMargin) -> Self {
        Raw {
            check,
            lhs: m.lhs,
            rhs: m.rhs,
            margin: m.margin,
            tolerance: m.tolerance,
            trace_deficit: m.diagnostics.trace_deficit,
            quad_err: m.diagnostics.quadrature_error,
        }
    }

    fn identity(check: &'static str, c: &IdentityCheck, tolerance: f64, trace_deficit: f64) -> Self {
        Raw {
            check,
            lhs: c.lhs.re,
            rhs: c.rhs.re,
            margin: -c.residual,
            tolerance,
            trace_deficit,
            quad_err: c.quadrature_error,
        }
    }
}

fn states_of(families: &[StateFamily], cutoff: usize) -> crate::Result<Vec<DensityMatrix>> {
    families.iter().map(|f| make_state(f, cutoff)).collect()
}

fn evaluate(config: &RunConfig, point: &Point) -> crate::Result<Vec<Raw>> {
    let tol = &config.tolerances;
    let cutoff = point.cutoff;
    match &point.job {
        Job::Epi { a, b, eta } => {
            let [m1, m2] = epi_basic(&make_state(a, cutoff)?, &make_state(b, cutoff)?, *eta, tol.entropy)?;
            Ok(vec![Raw::inequality("epi_entropy", &m1), Raw::inequality("epi_exp", &m2)])
        }
        Job::Subsets { families, collection } => {
            let e = Ensemble::new(states_of(families, cutoff)?, Vec::new(), config.quadrature)?;
            let c = SubsetCollection::quantum(families.len(), collection.subsets(families.len())?)?;
            let m1 = theorem1_check(&e, &c, tol.entropy)?;
            let m2 = entropy_sum_form_check(&e, &c, &WeightDistribution::uniform(c.len())?, tol.entropy)?;
            Ok(vec![Raw::inequality("theorem1", &m1), Raw::inequality("entropy_sum_form", &m2)])
        }
        Job::Fisher { families, collection } => {
            let e = Ensemble::new(states_of(families, cutoff)?, Vec::new(), config.quadrature)?;
            let c = SubsetCollection::quantum(families.len(), collection.subsets(families.len())?)?;
            let m = theorem2_check(&e, &c, &WeightChoice::Optimal, tol.fisher)?;
            Ok(vec![Raw::inequality("theorem2", &m)])
        }
        Job::Guha { family, n } => {
            let margins = guha_monotonicity(&make_state(family, cutoff)?, *n, tol.entropy, tol.trace_deficit_gate)?;
            let last = margins.last().ok_or_else(|| Error::InvalidParameter("no monotonicity margin".into()))?;
            Ok(vec![Raw::inequality("guha", last)])
        }
        Job::Debruijn { family, step } => {
            let rho = make_state(family, cutoff)?;
            let d = debruijn_check(&rho, *step)?;
            Ok(vec![Raw {
                check: "debruijn",
                lhs: d.derivative,
                rhs: d.fisher,
                margin: -d.relative_residual,
                tolerance: tol.debruijn,
                trace_deficit: rho.trace_deficit(),
                quad_err: 0.0,
            }])
        }
        Job::Qc { spec } => {
            let classical = spec.classical.iter().map(|c| c.build()).collect::<crate::Result<Vec<_>>>()?;
            let e = Ensemble::new(states_of(&spec.states, cutoff)?, classical, config.quadrature)?;
            let c = spec.collection()?;
            let m3 = theorem3_check(&e, &c, tol.entropy)?;
            let m4 = theorem4_check(&e, &c, &WeightChoice::Optimal, tol.fisher)?;
            Ok(vec![Raw::inequality("theorem3", &m3), Raw::inequality("theorem4", &m4)])
        }
        Job::Lift { family, v } => {
            let rho = make_state_with_tail_bound(family, cutoff, config.lift.tail_bound)?;
            let (t, r) = probe_operators(&rho, &rho);
            let spec = &config.lift.spec;
            let p = prop1_check(&t, &r, &rho, &rho, *v, spec, &config.quadrature)?;
            let l = lemma2_check(&rho, &rho, &r, *v, spec, &config.quadrature)?;
            let deficit = rho.trace_deficit();
            Ok(vec![Raw::identity("prop1", &p, tol.lift, deficit), Raw::identity("lemma2", &l, tol.lift, deficit)])
        }
        Job::Projector { family } => {
            let k = config.lift.projector_registers;
            let rho = make_state_with_tail_bound(family, cutoff, config.lift.tail_bound)?;
            let states = vec![rho.clone(); k];
            let dim = rho.dim().pow(k as u32);
            let tests: Vec<_> = (0..2u64)
                .map(|i| ginibre_state(dim, config.seed.wrapping_add(i)) * C64::new(0.3, 1.0))
                .collect();
            let rep = projector_decomposition_check(&states, &tests, &config.lift.spec)?;
            let worst = rep.worst();
            Ok(vec![Raw {
                check: "projector",
                lhs: worst,
                rhs: 0.0,
                margin: -worst,
                tolerance: tol.projector,
                trace_deficit: rho.trace_deficit(),
                quad_err: 0.0,
            }])
        }
    }
}

fn is_skip(e: &Error) -> bool {
    matches!(e, Error::SupportDeficient { .. } | Error::UnsupportedMix(_))
}

fn records_for(config: &RunConfig, point: &Point) -> Vec<CheckRecord> {
    let start = Instant::now();
    let outcome = evaluate(config, point);
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut deficit_gate = config.tolerances.trace_deficit_gate;
    if matches!(point.job, Job::Lift { .. } | Job::Projector { .. }) {
        deficit_gate = deficit_gate.max(config.lift.tail_bound);
    }
    let base = |check: &str| CheckRecord {
        check: check.to_string(),
        family: point.family.clone(),
        params: point.params.clone(),
        n: point.n,
        cutoff: point.cutoff,
        lhs: f64::NAN,
        rhs: f64::NAN,
        margin: f64::NAN,
        tolerance: f64::NAN,
        pass: false,
        status: Status::Diagnostic,
        trace_deficit: f64::NAN,
        quad_err: f64::NAN,
        error: None,
        wall_time_s,
    };
    match outcome {
        Ok(rows) => rows
            .into_iter()
            .map(|r| {
                let pass = r.margin >= -r.tolerance;
                let healthy = r.trace_deficit <= deficit_gate && r.quad_err <= config.tolerances.quadrature_gate;
                let status = match (healthy, pass) {
                    (false, _) => Status::Diagnostic,
                    (true, true) => Status::Pass,
                    (true, false) => Status::Fail,
                };
                CheckRecord {
                    lhs: r.lhs,
                    rhs: r.rhs,
                    margin: r.margin,
                    tolerance: r.tolerance,
                    pass,
                    status,
                    trace_deficit: r.trace_deficit,
                    quad_err: r.quad_err,
                    ..base(r.check)
                }
            })
            .collect(),
        Err(e) => point
            .job
            .rows()
            .iter()
            .map(|name| CheckRecord {
                status: if is_skip(&e) { Status::Skip } else { Status::Diagnostic },
                error: Some(e.to_string()),
                ..base(name)
            })
            .collect(),
    }
}

/// Validate, plan and evaluate `config` on a pool of `jobs` workers (the
/// rayon default when `None`). No files are touched.
pub fn execute(config: &RunConfig, jobs: Option<usize>, max_cutoff: Option<usize>) -> Result<VerificationReport, RunError> {
    config.validate(max_cutoff)?;
    let start = Instant::now();
    let points = plan(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Io(e.to_string()))?;
    let records: Vec<CheckRecord> =
        pool.install(|| points.par_iter().map(|p| records_for(config, p)).collect::<Vec<_>>()).into_iter().flatten().collect();
    Ok(VerificationReport {
        schema: REPORT_SCHEMA.into(),
        config_hash: config_hash(config),
        seed: config.seed,
        summary: Summary::of(&records),
        records,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Options of a `verify` run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub max_cutoff: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: VerificationReport,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Load, run and write both reports. Report paths are relative to
/// `out_dir` (default: the current directory).
pub fn run(opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut config = load_config(&opts.config)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let report = execute(&config, opts.jobs, opts.max_cutoff)?;
    let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let json_path = dir.join(&config.output.json);
    let csv_path = dir.join(&config.output.csv);
    report.write_json(&json_path)?;
    report.write_csv(&csv_path)?;
    Ok(RunOutcome { report, json_path, csv_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        RunConfig::from_json(&format!(r#"{{"schema": "qepi-config/v1", "cutoff": 30, {extra}}}"#)).unwrap()
    }

    #[test]
    fn unknown_keys_and_empty_checks_are_rejected() {
        let bad = RunConfig::from_json(r#"{"schema": "qepi-config/v1", "cutoff": 30, "checks": ["epi"], "colour": 1}"#);
        assert!(matches!(bad, Err(RunError::ConfigInvalid(_))));
        let empty = config(r#""checks": [], "states": [{"family": "vacuum"}]"#);
        assert!(matches!(execute(&empty, Some(1), None), Err(RunError::ConfigInvalid(_))));
        let capped = config(r#""checks": ["epi"], "states": [{"family": "vacuum"}]"#);
        assert!(matches!(execute(&capped, Some(1), Some(20)), Err(RunError::ConfigInvalid(_))));
    }

    #[test]
    fn eta_sweep_counts_rows_in_order() {
        let c = config(
            r#""checks": ["epi"], "states": [{"family": "thermal", "nbar": 0.5}, {"family": "thermal", "nbar": 1.0}],
               "sweep": {"eta": [1.0, 0.0, 0.5, 0.25, 0.75]}"#,
        );
        let rep = execute(&RunConfig { cutoff: 40, ..c }, Some(2), None).unwrap();
        assert_eq!(rep.records.len(), 10);
        assert_eq!(rep.exit_code(), 0);
        let etas: Vec<&str> = rep.records.iter().step_by(2).map(|r| r.params.as_str()).collect();
        assert_eq!(etas, ["eta=0", "eta=0.25", "eta=0.5", "eta=0.75", "eta=1"]);
    }

    #[test]
    fn truncation_is_a_diagnostic() {
        let mut c = config(r#""checks": ["epi"], "states": [{"family": "cat", "alpha": 2.0}]"#);
        c.cutoff = 4;
        let rep = execute(&c, Some(1), None).unwrap();
        assert_eq!(rep.exit_code(), 2);
        assert!(rep.records.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("cutoff"))));
    }

    #[test]
    fn budget_is_enforced() {
        let mut c = config(r#""checks": ["epi"], "states": [{"family": "vacuum"}], "sweep": {"eta": [0.1, 0.2, 0.3]}"#);
        c.max_points = 2;
        assert!(matches!(execute(&c, Some(1), None), Err(RunError::BudgetExceeded(_))));
    }
}
