use serde::{Deserialize, Serialize};

use crate::fockspace::{StateFamily, TAIL_BOUND};
use crate::information::InnerProductSpec;
use crate::inequalities::{DEFAULT_ENTROPY_TOLERANCE, DEFAULT_FISHER_TOLERANCE};
use crate::quadrature::QuadratureConfig;
use crate::subset::MAX_REGISTERS;
use crate::{ClassicalRV, Subset, C64};

use super::RunError;

pub const CONFIG_SCHEMA: &str = "qepi-config/v1";

/// A verification run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub cutoff: usize,
    pub checks: Vec<CheckKind>,
    /// Single-register families; i.i.d. ensembles are built from each.
    #[serde(default)]
    pub states: Vec<StateFamily>,
    /// Number of extra `random_full_support` families, seeded `seed, seed+1, …`.
    #[serde(default)]
    pub random_states: usize,
    /// Explicit non-i.i.d. ensembles, one family per register.
    #[serde(default)]
    pub ensembles: Vec<Vec<StateFamily>>,
    #[serde(default)]
    pub collections: Vec<CollectionSpec>,
    #[serde(default)]
    pub qc: Vec<QcSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub lift: LiftSettings,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    /// Largest number of evaluation points a run may plan.
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_max_points() -> usize {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Epi,
    Monotonicity,
    Debruijn,
    FisherStam,
    QcEpi,
    Liftproof,
    All,
}

impl CheckKind {
    pub const CONCRETE: [CheckKind; 6] = [
        CheckKind::Epi,
        CheckKind::Monotonicity,
        CheckKind::Debruijn,
        CheckKind::FisherStam,
        CheckKind::QcEpi,
        CheckKind::Liftproof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Epi => "epi",
            CheckKind::Monotonicity => "monotonicity",
            CheckKind::Debruijn => "debruijn",
            CheckKind::FisherStam => "fisher-stam",
            CheckKind::QcEpi => "qc-epi",
            CheckKind::Liftproof => "liftproof",
            CheckKind::All => "all",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CheckKind::Epi => {
                "two-state entropy power inequalities over the eta grid; with collections, the subset entropy power \
                 inequality and its entropy-sum form (rows epi_entropy, epi_exp, theorem1, entropy_sum_form)"
            }
            CheckKind::Monotonicity => "S(rho^n) - S(rho^(n-1)) for each n >= 2 of the n grid (rows guha)",
            CheckKind::Debruijn => "entropy derivative along the heat flow vs KMB Fisher information (rows debruijn)",
            CheckKind::FisherStam => "subset Fisher-Stam inequality with optimal weights (rows theorem2)",
            CheckKind::QcEpi => "quantum-classical entropy power and Fisher-Stam inequalities (rows theorem3, theorem4)",
            CheckKind::Liftproof => "lifted inner-product identities and the subset projector decomposition (rows prop1, lemma2, projector)",
            CheckKind::All => "every check above",
        }
    }
}

/// Expanded, deduplicated check list.
pub fn expand_checks(checks: &[CheckKind]) -> Vec<CheckKind> {
    if checks.contains(&CheckKind::All) {
        return CheckKind::CONCRETE.to_vec();
    }
    let mut out = checks.to_vec();
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CollectionSpec {
    Singletons,
    /// All subsets of `[n]` of the given size.
    AllOfSize { k: usize },
    /// All subsets of size `n − 1`.
    Leave1Out,
    Full,
    /// Explicit subsets, 1-based indices.
    Explicit { subsets: Vec<Vec<usize>> },
}

impl CollectionSpec {
    pub fn label(&self) -> String {
        match self {
            CollectionSpec::Singletons => "singletons".into(),
            CollectionSpec::AllOfSize { k } => format!("size{k}"),
            CollectionSpec::Leave1Out => "leave1out".into(),
            CollectionSpec::Full => "full".into(),
            CollectionSpec::Explicit { subsets } => {
                let parts: Vec<String> = subsets
                    .iter()
                    .map(|s| s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
                    .collect();
                format!("explicit[{}]", parts.join("|"))
            }
        }
    }

    pub fn subsets(&self, n: usize) -> crate::Result<Vec<Subset>> {
        match self {
            CollectionSpec::Singletons => (1..=n).map(Subset::singleton).collect(),
            CollectionSpec::AllOfSize { k } => Ok(Subset::all_of_size(n, *k)),
            CollectionSpec::Leave1Out => Ok(Subset::all_of_size(n, n.saturating_sub(1))),
            CollectionSpec::Full => Ok(vec![Subset::full(n)]),
            CollectionSpec::Explicit { subsets } => subsets.iter().map(|s| Subset::of(s)).collect(),
        }
    }
}

/// A classical register law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalSpec {
    Gaussian {
        h: f64,
        #[serde(default)]
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// Points as `[re, im]` pairs.
    Finite { points: Vec<[f64; 2]>, probs: Vec<f64> },
}

impl ClassicalSpec {
    pub fn build(&self) -> crate::Result<ClassicalRV> {
        match self {
            ClassicalSpec::Gaussian { h, re, im } => ClassicalRV::gaussian(C64::new(*re, *im), *h),
            ClassicalSpec::Finite { points, probs } => {
                ClassicalRV::finite(points.iter().map(|p| C64::new(p[0], p[1])).collect(), probs.clone())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ClassicalSpec::Gaussian { h, re, im } => format!("gaussian({h};{re}{im:+}i)"),
            ClassicalSpec::Finite { points, .. } => format!("finite({})", points.len()),
        }
    }
}

/// A quantum-classical configuration: registers and `(v, w)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcSpec {
    pub states: Vec<StateFamily>,
    pub classical: Vec<ClassicalSpec>,
    pub elements: Vec<QcElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcElement {
    pub v: Vec<usize>,
    #[serde(default)]
    pub w: Vec<usize>,
}

impl QcSpec {
    pub fn label(&self) -> String {
        let q: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
        let c: Vec<String> = self.classical.iter().map(|s| s.label()).collect();
        format!("{}/{}", q.join(","), c.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Beam-splitter transmissivities for `epi`.
    pub eta: Vec<f64>,
    /// Register counts for `epi`, `fisher-stam` and `monotonicity`.
    pub n: Vec<usize>,
    /// Heat-flow steps for `debruijn`.
    pub t: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { eta: vec![0.5], n: vec![2], t: vec![1e-3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub entropy: f64,
    pub fisher: f64,
    /// Relative residual of the de Bruijn identity.
    pub debruijn: f64,
    /// Relative residual of the lifted identities.
    pub lift: f64,
    pub projector: f64,
    /// Rows whose states lost more trace than this are diagnostic failures.
    pub trace_deficit_gate: f64,
    /// Rows whose quadrature error exceeds this are diagnostic failures.
    pub quadrature_gate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            entropy: DEFAULT_ENTROPY_TOLERANCE,
            fisher: DEFAULT_FISHER_TOLERANCE,
            debruijn: 1e-3,
            lift: 1e-3,
            projector: 1e-9,
            trace_deficit_gate: 1e-6,
            quadrature_gate: 1e-3,
        }
    }
}

/// Settings for `liftproof`, which runs at its own (small) cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftSettings {
    /// Cutoff of the two-register identities; the run cutoff if absent.
    pub cutoff: Option<usize>,
    /// Tail bound for building states at the lift cutoffs. It also replaces
    /// the trace-deficit gate on lift rows when larger.
    pub tail_bound: f64,
    pub spec: InnerProductSpec,
    pub projector_registers: usize,
    pub projector_cutoff: usize,
}

impl Default for LiftSettings {
    fn default() -> Self {
        Self {
            cutoff: None,
            tail_bound: TAIL_BOUND,
            spec: InnerProductSpec::Linear { k: 1, t: 0.5 },
            projector_registers: 3,
            projector_cutoff: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub json: String,
    pub csv: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { json: "report.json".into(), csv: "report.csv".into() }
    }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::ConfigInvalid(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Families the i.i.d. checks iterate over: the listed ones followed by
    /// the seeded random ones.
    pub fn families(&self) -> Vec<StateFamily> {
        let mut out = self.states.clone();
        out.extend((0..self.random_states as u64).map(|i| StateFamily::RandomFullSupport { seed: self.seed.wrapping_add(i) }));
        out
    }

    /// Structural checks that need no numerics. `max_cutoff` is the external
    /// safety cap.
    pub fn validate(&self, max_cutoff: Option<usize>) -> Result<(), RunError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(invalid(format!("schema must be \"{CONFIG_SCHEMA}\", got \"{}\"", self.schema)));
        }
        if self.checks.is_empty() {
            return Err(invalid("empty check list"));
        }
        let cap = |what: &str, c: usize| -> Result<(), RunError> {
            if c == 0 {
                return Err(invalid(format!("{what} must be at least 1")));
            }
            match max_cutoff {
                Some(m) if c > m => Err(invalid(format!("{what} {c} exceeds the cap {m}"))),
                _ => Ok(()),
            }
        };
        cap("cutoff", self.cutoff)?;
        if let Some(c) = self.lift.cutoff {
            cap("lift cutoff", c)?;
        }
        cap("projector cutoff", self.lift.projector_cutoff)?;
        if !(1..=4).contains(&self.lift.projector_registers) {
            return Err(invalid("projector_registers must be between 1 and 4"));
        }
        self.lift.spec.validate().map_err(|e| invalid(e.to_string()))?;
        if !self.lift.spec.is_linear() {
            return Err(invalid("lift spec must be a linear inner product"));
        }
        if !(self.lift.tail_bound > 0.0) {
            return Err(invalid("lift tail_bound must be positive"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("entropy", t.entropy),
            ("fisher", t.fisher),
            ("debruijn", t.debruijn),
            ("lift", t.lift),
            ("projector", t.projector),
            ("trace_deficit_gate", t.trace_deficit_gate),
            ("quadrature_gate", t.quadrature_gate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("tolerance {name} = {v} must be finite and nonnegative")));
            }
        }
        if let Some(e) = self.sweep.eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(invalid(format!("eta {e} outside [0, 1]")));
        }
        if let Some(n) = self.sweep.n.iter().find(|n| **n == 0 || **n > MAX_REGISTERS) {
            return Err(invalid(format!("n = {n} outside 1..={MAX_REGISTERS}")));
        }
        if let Some(s) = self.sweep.t.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid(format!("heat step {s} must be positive")));
        }
        for e in &self.ensembles {
            if e.is_empty() || e.len() > MAX_REGISTERS {
                return Err(invalid(format!("ensembles need 1..={MAX_REGISTERS} registers")));
            }
        }
        for q in &self.qc {
            q.collection().map_err(|e| invalid(format!("qc configuration {}: {e}", q.label())))?;
            for c in &q.classical {
                c.build().map_err(|e| invalid(format!("classical register {}: {e}", c.label())))?;
            }
        }
        let checks = expand_checks(&self.checks);
        let needs_states = [CheckKind::Epi, CheckKind::Monotonicity, CheckKind::Debruijn, CheckKind::FisherStam, CheckKind::Liftproof];
        for c in &checks {
            if needs_states.contains(c) && self.families().is_empty() && !(matches!(c, CheckKind::Epi | CheckKind::FisherStam) && !self.ensembles.is_empty()) {
                return Err(invalid(format!("check {} needs at least one state family", c.name())));
            }
        }
        if checks.contains(&CheckKind::FisherStam) && self.collections.is_empty() {
            return Err(invalid("fisher-stam needs at least one collection"));
        }
        if checks.contains(&CheckKind::QcEpi) && self.qc.is_empty() {
            return Err(invalid("qc-epi needs at least one qc configuration"));
        }
        Ok(())
    }
}

impl QcSpec {
    pub fn collection(&self) -> crate::Result<crate::inequalities::SubsetCollection> {
        let elements = self
            .elements
            .iter()
            .map(|e| Ok((Subset::of(&e.v)?, Subset::of(&e.w)?)))
            .collect::<crate::Result<Vec<_>>>()?;
        crate::inequalities::SubsetCollection::new(self.states.len(), self.classical.len(), elements)
    }
}
