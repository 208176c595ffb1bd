use std::process::ExitCode;

use clap::Parser;
use paving_cli::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match paving_cli::run(&cli.command).and_then(|out| {
        paving_cli::write_output(&out)?;
        Ok(out.report.all_pass())
    }) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("paving: one or more invariant checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("paving: {e:#}");
            ExitCode::from(2)
        }
    }
}
