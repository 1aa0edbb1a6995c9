//! Run manifest, written last into every output directory.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliResult;
use crate::output::{OutputDir, OutputFile};
use crate::run::{CalibrationRecord, RunRecord};

pub const MANIFEST_VERSION: &str = "v1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub manifest_version: &'static str,
    pub artifact_version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ScenarioConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub runs: Vec<RunRecord>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

/// Tracks timing from the start of a command until the manifest is written.
pub struct ManifestBuilder {
    command: String,
    config: Option<ScenarioConfig>,
    started: Instant,
    started_unix: u64,
}

impl ManifestBuilder {
    pub fn start(command: &str, config: Option<&ScenarioConfig>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config: config.cloned(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Writes `resolved_config.toml` so the run can be replayed with
    /// `--config`.
    pub fn write_config(&self, out: &mut OutputDir) -> CliResult<()> {
        if let Some(c) = &self.config {
            out.write_bytes(RESOLVED_CONFIG_FILE, c.to_toml()?.as_bytes())?;
        }
        Ok(())
    }

    pub fn finish(
        self,
        out: &mut OutputDir,
        calibration: Option<CalibrationRecord>,
        seeds: Vec<u64>,
        runs: Vec<RunRecord>,
    ) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            manifest_version: MANIFEST_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            scenario: self.config.as_ref().map(|c| c.scenario.clone()),
            config: self.config,
            calibration,
            seeds,
            threads: rayon::current_num_threads(),
            runs,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: out.files().to_vec(),
        };
        out.write_json(MANIFEST_FILE, &manifest)
    }
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}
