use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paving_core::ensembles::EnsembleKind;
use paving_core::paving::{self, Method};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "paving", version, about = "Matrix paving, state-extension and factorization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Search pavings of a matrix file or an ensemble.
    Pave(Common),
    /// Epsilon-versus-r curves over ensemble trials (JSON plus CSV).
    Scan(Common),
    /// Run a named property suite.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Paving of Toeplitz sections through the real and imaginary symbol parts.
    Toeplitz(Common),
    /// Bounds on extensions of a diagonal state.
    Extend {
        /// Weight file `{"w": [...]}`; uniform weights when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fejér–Riesz or Cholesky factorization.
    Factor {
        kind: FactorKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Hoffman,
    CholeskyHomomorphism,
    Refinement,
    Sandwich,
    FejerRiesz,
    Duality,
}

impl Suite {
    pub fn default_trials(self) -> u64 {
        match self {
            Suite::Hoffman => 500,
            Suite::CholeskyHomomorphism => 200,
            Suite::Refinement => 100,
            Suite::Sandwich | Suite::FejerRiesz | Suite::Duality => 50,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorKind {
    FejerRiesz,
    Cholesky,
}

/// Search method on the command line; `auto` picks exact enumeration when
/// `n` is within the exact cap for `r`, annealing otherwise.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Exact,
    Greedy,
    Anneal,
}

impl MethodArg {
    pub fn resolve(self, n: usize, r: usize) -> Method {
        match self {
            MethodArg::Exact => Method::Exact,
            MethodArg::Greedy => Method::Greedy,
            MethodArg::Anneal => Method::Anneal,
            MethodArg::Auto if n <= paving::default_exact_cap(r) => Method::Exact,
            MethodArg::Auto => Method::Anneal,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    Norm,
    Certificate,
}

/// Inclusive block-count range, written `R` or `LO..HI` (also `LO-HI`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RRange {
    pub lo: usize,
    pub hi: usize,
}

impl RRange {
    pub fn iter(self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for RRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("invalid block count '{t}': {e}"));
        let (lo, hi) = match s.split_once("..").or_else(|| s.split_once('-')) {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo == 0 || hi < lo {
            return Err(format!("invalid block-count range '{s}' (need 1 <= lo <= hi)"));
        }
        Ok(RRange { lo, hi })
    }
}

impl fmt::Display for RRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

fn parse_ensemble(s: &str) -> Result<EnsembleKind, String> {
    s.parse().map_err(|e: paving_core::Error| e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// Input file (matrix, symbol, depending on the command).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// zero-diag-hermitian | strict-upper | positive-band | toeplitz
    #[arg(long, value_parser = parse_ensemble)]
    pub ensemble: Option<EnsembleKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Lower band limit for positive-band.
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    /// Upper band limit for positive-band.
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    /// Symbol degree for Toeplitz and Fejér–Riesz draws.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Block count `R` or inclusive range `LO..HI`.
    #[arg(long, default_value = "2")]
    pub r: RRange,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Norm)]
    pub objective: ObjectiveArg,
    /// Number of trials (suite default for `verify`, 1 otherwise).
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses the machine parallelism.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Overrides the command's check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock timing in the report.
    #[arg(long)]
    pub timing: bool,
}

/// Full configuration echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub suite: Option<Suite>,
    pub factor: Option<FactorKind>,
    pub weights: Option<PathBuf>,
    pub common: Common,
}

impl RunConfig {
    pub fn from_command(cmd: &Command) -> RunConfig {
        let (name, suite, factor, weights, common) = match cmd {
            Command::Pave(c) => ("pave", None, None, None, c),
            Command::Scan(c) => ("scan", None, None, None, c),
            Command::Verify { suite, common } => ("verify", Some(*suite), None, None, common),
            Command::Toeplitz(c) => ("toeplitz", None, None, None, c),
            Command::Extend { weights, common } => ("extend", None, None, weights.clone(), common),
            Command::Factor { kind, common } => ("factor", None, Some(*kind), None, common),
        };
        RunConfig { command: name.into(), suite, factor, weights, common: common.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!("3".parse::<RRange>().unwrap(), RRange { lo: 3, hi: 3 });
        assert_eq!("1..4".parse::<RRange>().unwrap(), RRange { lo: 1, hi: 4 });
        assert_eq!("1..=4".parse::<RRange>().unwrap(), RRange { lo: 1, hi: 4 });
        assert_eq!("2-5".parse::<RRange>().unwrap(), RRange { lo: 2, hi: 5 });
        assert!("0".parse::<RRange>().is_err());
        assert!("4..2".parse::<RRange>().is_err());
        assert!("x".parse::<RRange>().is_err());
    }

    #[test]
    fn auto_method() {
        assert_eq!(MethodArg::Auto.resolve(16, 2), Method::Exact);
        assert_eq!(MethodArg::Auto.resolve(16, 3), Method::Anneal);
        assert_eq!(MethodArg::Greedy.resolve(4, 2), Method::Greedy);
    }
}
