use paving_core::ensembles::SymbolFile;
use paving_core::equivalence::{LogmodularRecord, ReductionReport};
use paving_core::extension::ExtensionBounds;
use paving_core::linalg::MatrixFile;
use paving_core::paving::{Method, Partition, PavingReport, PositiveCertificate};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    pub results: Vec<ResultRecord>,
    pub invariant_checks: Vec<InvariantCheck>,
    /// Present only when timing was requested, so that reports of repeated
    /// runs compare byte for byte.
    pub timing: Option<Timing>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.invariant_checks.iter().all(|c| c.pass)
    }

    pub fn from_json_str(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub total_seconds: f64,
}

/// One entry of the `results` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResultRecord {
    Paving { trial: u64, r: usize, report: PavingReport },
    Certificate { trial: u64, r: usize, certificate: PositiveCertificate },
    ScanRow(ScanRow),
    Suite { suite: String, trials: u64, failures: u64 },
    Reduction { trial: u64, r: usize, report: ReductionReport },
    Extension { trial: u64, bounds: ExtensionBounds },
    FejerRiesz { trial: u64, symbol: SymbolFile, factor: SymbolFile, roots: Vec<[f64; 2]>, max_error: f64 },
    Cholesky { trial: u64, factor: MatrixFile, max_diagonal_deviation: f64 },
    Logmodular { trial: u64, record: LogmodularRecord },
}

/// Per-`r` aggregate of a scan; `values[t]` and `partitions[t]` belong to
/// trial `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRow {
    pub r: usize,
    pub method: Method,
    pub objective: String,
    pub trials: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub values: Vec<f64>,
    pub partitions: Vec<Partition>,
    /// Trials whose result was taken from `r − 1` because the search at `r`
    /// did no better.
    pub warm_started: Vec<u64>,
}

/// Accumulates checks by name: a check passes only if every recorded
/// instance passes, and keeps the largest recorded value.
#[derive(Default, Debug)]
pub struct Checks {
    list: Vec<InvariantCheck>,
}

impl Checks {
    /// Records `value ≤ tol`.
    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.record(name, value <= tol, value, tol);
    }

    pub fn record(&mut self, name: &str, pass: bool, value: f64, tol: f64) {
        let value = if value.is_finite() { value } else { f64::MAX.copysign(value) };
        if let Some(c) = self.list.iter_mut().find(|c| c.name == name) {
            c.pass &= pass;
            c.value = c.value.max(value);
        } else {
            self.list.push(InvariantCheck { name: name.into(), pass, value, tol });
        }
    }

    /// Records a boolean outcome as a failure count against tolerance 0.
    pub fn holds(&mut self, name: &str, ok: bool) {
        self.record(name, ok, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.list.iter()
    }

    pub fn into_vec(self) -> Vec<InvariantCheck> {
        self.list
    }
}
