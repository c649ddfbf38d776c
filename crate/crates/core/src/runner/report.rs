use std::fs;
use std::path::Path;

use serde::Serialize;

use super::RunError;

pub const REPORT_SCHEMA: &str = "qepi-report/v1";

pub const CSV_COLUMNS: [&str; 12] =
    ["check", "family", "params", "n", "cutoff", "lhs", "rhs", "margin", "tolerance", "pass", "trace_deficit", "quad_err"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// The margin is below `−tolerance`.
    Fail,
    /// Numerics could not be trusted: a gate tripped or a numerical error
    /// (truncation, quadrature, convergence) was raised.
    Diagnostic,
    /// A precondition of the check does not hold for this input.
    Skip,
}

/// One report row. Inequality rows carry `margin = lhs − rhs`; identity rows
/// (`debruijn`, `prop1`, `lemma2`, `projector`) carry the two sides and
/// `margin = −relative residual`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub family: String,
    pub params: String,
    pub n: usize,
    pub cutoff: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub trace_deficit: f64,
    pub quad_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    /// Margin failures plus diagnostic failures.
    pub failed: usize,
    pub skipped: usize,
    /// The part of `failed` caused by numerical diagnostics.
    pub diagnostic: usize,
}

impl Summary {
    pub fn of(records: &[CheckRecord]) -> Self {
        let mut s = Summary { total: records.len(), ..Default::default() };
        for r in records {
            match r.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::Diagnostic => {
                    s.failed += 1;
                    s.diagnostic += 1;
                }
                Status::Skip => s.skipped += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub seed: u64,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
    pub wall_time_s: f64,
}

impl VerificationReport {
    /// 0 if every row passed or was skipped, 2 if any row is a diagnostic
    /// failure, otherwise 1 if any margin failed.
    pub fn exit_code(&self) -> i32 {
        if self.summary.diagnostic > 0 {
            2
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Result<String, RunError> {
        serde_json::to_string_pretty(self).map_err(|e| RunError::Io(e.to_string()))
    }

    /// JSON with every `wall_time_s` field removed: the part of the report
    /// covered by the determinism guarantee.
    pub fn deterministic_json(&self) -> Result<String, RunError> {
        let mut v = serde_json::to_value(self).map_err(|e| RunError::Io(e.to_string()))?;
        strip_wall_time(&mut v);
        serde_json::to_string_pretty(&v).map_err(|e| RunError::Io(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<(), RunError> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RunError> {
        let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.check.clone(),
                r.family.clone(),
                r.params.clone(),
                r.n.to_string(),
                r.cutoff.to_string(),
                num(r.lhs),
                num(r.rhs),
                num(r.margin),
                num(r.tolerance),
                r.pass.to_string(),
                num(r.trace_deficit),
                num(r.quad_err),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
    }
}

/// Shortest round-trip representation; empty for NaN (no value).
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

pub fn strip_wall_time(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("wall_time_s");
            map.values_mut().for_each(strip_wall_time);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}
