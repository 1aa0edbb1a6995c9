//! Scenario runner for the `seaqt-bell` command-line tool.

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod overlay;
pub mod run;
pub mod scenarios;

use std::path::{Path, PathBuf};

pub use config::{Overrides, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use scenarios::Command;

use manifest::ManifestBuilder;
use output::OutputDir;

/// Runs a scenario command end to end and returns the output directory.
pub fn execute(command: Command, config: &ScenarioConfig) -> CliResult<PathBuf> {
    let mut out = OutputDir::create(&config.output_dir)?;
    let builder = ManifestBuilder::start(command.as_str(), Some(config));
    builder.write_config(&mut out)?;
    let outcome = match command {
        Command::Evolve => run::run_evolution(config, &mut out)?,
        Command::Sweep => run::run_sweep(config, &mut out)?,
        Command::Batch => run::run_batch(config, &mut out)?.0,
        Command::Compare => run::run_compare(config, &mut out)?.0,
    };
    builder.finish(&mut out, outcome.calibration, outcome.seeds, outcome.runs)?;
    if !outcome.errors.is_empty() {
        return Err(CliError::Numerical(outcome.errors.join("; ")));
    }
    Ok(out.root().to_path_buf())
}

/// Compares measured data against a trace and writes `overlay_report.json`.
pub fn execute_overlay(trace: &Path, data: &Path, out_dir: &Path) -> CliResult<overlay::OverlayReport> {
    let report = overlay::run_overlay(trace, data)?;
    let mut out = OutputDir::create(out_dir)?;
    let builder = ManifestBuilder::start("overlay", None);
    out.write_json("overlay_report.json", &report)?;
    builder.finish(&mut out, None, Vec::new(), Vec::new())?;
    Ok(report)
}
