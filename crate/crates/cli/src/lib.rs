//! Experiment harness: every subcommand produces a [`report::Report`] whose
//! `invariant_checks` decide the exit status.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

use std::time::Instant;

use anyhow::{Context, Result};

use config::{Command, RunConfig};
use report::{Report, Timing, SCHEMA_VERSION};

/// A finished run: the report plus the CSV table of a scan.
pub struct RunOutput {
    pub report: Report,
    pub csv: Option<String>,
}

/// Runs `cmd` on a pool of `--workers` threads.
pub fn run(cmd: &Command) -> Result<RunOutput> {
    let config = RunConfig::from_command(cmd);
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.common.workers).build().context("building worker pool")?;
    let start = Instant::now();
    let (outcome, csv) = pool.install(|| -> Result<_> {
        Ok(match cmd {
            Command::Pave(c) => (commands::pave(c)?, None),
            Command::Scan(c) => {
                let (o, csv) = commands::scan(c)?;
                (o, Some(csv))
            }
            Command::Toeplitz(c) => (commands::toeplitz(c)?, None),
            Command::Verify { suite, common } => (suites::run(*suite, common)?, None),
            Command::Extend { weights, common } => (commands::extend(common, weights.as_deref())?, None),
            Command::Factor { kind, common } => (commands::factor(common, *kind)?, None),
        })
    })?;
    let (results, checks) = outcome;
    let timing = config.common.timing.then(|| Timing { total_seconds: start.elapsed().as_secs_f64() });
    let report =
        Report { schema_version: SCHEMA_VERSION, config, results, invariant_checks: checks.into_vec(), timing };
    Ok(RunOutput { report, csv })
}

/// Writes the report (pretty JSON) to `--out` or stdout; a scan table goes
/// next to `--out` with extension `.csv`.
pub fn write_output(out: &RunOutput) -> Result<()> {
    let json = serde_json::to_string_pretty(&out.report)? + "\n";
    match &out.report.config.common.out {
        Some(path) => {
            std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            if let Some(csv) = &out.csv {
                let p = path.with_extension("csv");
                std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}
