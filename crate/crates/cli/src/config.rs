//! Versioned scenario configuration.
//!
//! Resolution order: registry preset, then the TOML file given with
//! `--config` (merged table by table, so a file only needs the keys it
//! changes), then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seaqt_bell::dynamics::IntegrationSettings;
use seaqt_bell::lindblad::LindbladParams;
use seaqt_bell::seaqt::SeaqtParams;
use seaqt_bell::states::{CConfig, CompositeHamiltonian};

use crate::error::{CliError, CliResult};
use crate::scenarios;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    Seaqt,
    Lindblad,
    Both,
}

impl Framework {
    pub fn runs_seaqt(self) -> bool {
        matches!(self, Framework::Seaqt | Framework::Both)
    }

    pub fn runs_lindblad(self) -> bool {
        matches!(self, Framework::Lindblad | Framework::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub eps_a: f64,
    pub eps_b: f64,
}

impl HamiltonianConfig {
    pub fn build(&self) -> CompositeHamiltonian {
        CompositeHamiltonian::new(self.eps_a, self.eps_b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    Weighted {
        zeta: Vec<f64>,
    },
    General {
        n: usize,
        sigma: f64,
        base_seed: u64,
        /// How many records (closest to the reference first) get a full
        /// trajectory in `evolve`.
        #[serde(default = "default_evolve_count")]
        evolve_count: usize,
    },
}

fn default_evolve_count() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    pub stop_at_stationary: bool,
    /// Times a rejected trajectory may be restarted with `dt / 10`.
    pub max_refinements: usize,
}

impl IntegrationConfig {
    pub fn settings(&self) -> IntegrationSettings {
        IntegrationSettings {
            dt: self.dt,
            t_end: self.t_end,
            sample_stride: self.sample_stride,
            stop_at_stationary: self.stop_at_stationary,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub c1_values: Vec<f64>,
    pub zeta_step: f64,
}

impl SweepConfig {
    /// `1, 1 - step, ..., 0`, built from integer multiples to avoid drift.
    pub fn zeta_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.zeta_step).round() as usize;
        (0..=n).map(|k| (n - k) as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub histogram_bins: usize,
    pub max_failure_fraction: f64,
}

/// Maps internal time onto the paper's dimensionless axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Calibration {
    /// Internal time is reported as is.
    None,
    /// Scale time so that the SEAQT trajectory of the weighted state at
    /// `zeta` crosses `B_max = 2` at `target`.
    PaperAxis { zeta: f64, target: f64 },
}

impl Calibration {
    pub const PAPER: Calibration = Calibration::PaperAxis {
        zeta: 0.68,
        target: 0.19,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: String,
    pub framework: Framework,
    pub state: CConfig,
    pub hamiltonian: HamiltonianConfig,
    pub seaqt: SeaqtParams,
    pub lindblad: LindbladParams,
    pub perturbation: PerturbationSpec,
    pub integration: IntegrationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub batch: BatchConfig,
    pub calibration: Calibration,
    pub output_dir: PathBuf,
}

fn bad(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ScenarioConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if scenarios::find(&self.scenario).is_none() {
            return Err(bad("scenario", format!("unknown scenario {:?}", self.scenario)));
        }
        self.state.check().map_err(|e| bad("state", e))?;
        for (k, v) in [("hamiltonian.eps_a", self.hamiltonian.eps_a), ("hamiltonian.eps_b", self.hamiltonian.eps_b)] {
            if !v.is_finite() {
                return Err(bad(k, "must be finite"));
            }
        }
        self.seaqt.validate().map_err(|e| bad("seaqt", e))?;
        self.lindblad.validate().map_err(|e| bad("lindblad", e))?;
        match &self.perturbation {
            PerturbationSpec::Weighted { zeta } => {
                if zeta.is_empty() {
                    return Err(bad("perturbation.zeta", "must not be empty"));
                }
                if let Some(z) = zeta.iter().find(|z| !(0.0..=1.0).contains(*z)) {
                    return Err(bad("perturbation.zeta", format!("{z} outside [0, 1]")));
                }
            }
            PerturbationSpec::General { n, sigma, evolve_count, .. } => {
                if *n == 0 {
                    return Err(bad("perturbation.n", "must be at least 1"));
                }
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(bad("perturbation.sigma", format!("must be positive, got {sigma}")));
                }
                if *evolve_count == 0 {
                    return Err(bad("perturbation.evolve_count", "must be at least 1"));
                }
            }
        }
        self.integration.settings().validate().map_err(|e| bad("integration", e))?;
        if let Some(sw) = &self.sweep {
            if sw.c1_values.is_empty() {
                return Err(bad("sweep.c1_values", "must not be empty"));
            }
            for &c1 in &sw.c1_values {
                CConfig::new(c1, self.state.c2, self.state.c3).map_err(|e| bad("sweep.c1_values", e))?;
            }
            if !(sw.zeta_step > 0.0 && sw.zeta_step <= 1.0) {
                return Err(bad("sweep.zeta_step", format!("must lie in (0, 1], got {}", sw.zeta_step)));
            }
            let n = 1.0 / sw.zeta_step;
            if (n - n.round()).abs() > 1e-9 {
                return Err(bad("sweep.zeta_step", "must divide 1 evenly"));
            }
        }
        if self.batch.histogram_bins == 0 {
            return Err(bad("batch.histogram_bins", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.batch.max_failure_fraction) {
            return Err(bad("batch.max_failure_fraction", "must lie in [0, 1]"));
        }
        if let Calibration::PaperAxis { zeta, target } = self.calibration {
            if !(0.0..=1.0).contains(&zeta) {
                return Err(bad("calibration.zeta", "must lie in [0, 1]"));
            }
            if !(target > 0.0 && target.is_finite()) {
                return Err(bad("calibration.target", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
    }
}

/// Recursively overlays `top` onto `base`. A table whose `kind` or `name`
/// tag changes replaces the base table wholesale, since the variants do not
/// share fields.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                let retagged = |old: &toml::Value, new: &toml::Value| {
                    ["kind", "name"].iter().any(|tag| {
                        matches!((old.get(tag), new.get(tag)), (Some(a), Some(b)) if a != b)
                    })
                };
                match b.get_mut(&k) {
                    Some(existing) if existing.is_table() && v.is_table() && !retagged(existing, &v) => {
                        merge(existing, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Reads a config file and resolves it against `scenario` (or the scenario
/// named inside the file).
pub fn load(path: Option<&Path>, scenario: Option<&str>) -> CliResult<ScenarioConfig> {
    let file: Option<toml::Value> = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Some(parse_toml(&text, p)?)
        }
        None => None,
    };
    let from_file = file
        .as_ref()
        .and_then(|v| v.get("scenario"))
        .and_then(|s| s.as_str())
        .map(str::to_string);
    let name = match (scenario, from_file.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(bad("scenario", format!("--scenario {a} conflicts with {b:?} in the config file")))
        }
        (Some(a), _) => a.to_string(),
        (None, Some(b)) => b.to_string(),
        (None, None) => return Err(bad("scenario", "no scenario given (use --scenario or set it in --config)")),
    };
    let entry = scenarios::find(&name).ok_or_else(|| bad("scenario", format!("unknown scenario {name:?}")))?;
    let preset = (entry.build)();
    let mut value = toml::Value::try_from(&preset).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(f) = file {
        merge(&mut value, f);
    }
    let config: ScenarioConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.map(|p| p.display().to_string()).unwrap_or_default())))?;
    config.validate()?;
    Ok(config)
}

fn parse_toml(text: &str, path: &Path) -> CliResult<toml::Value> {
    let value: toml::Value = text
        .parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match value.get("schema_version") {
        None => Err(bad("schema_version", "missing")),
        Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => Ok(value),
        Some(other) => Err(bad("schema_version", format!("unsupported version {other}"))),
    }
}

/// Flags that override the resolved configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ScenarioConfig) -> CliResult<()> {
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        match &mut config.perturbation {
            PerturbationSpec::General { base_seed, n, .. } => {
                if let Some(s) = self.seed {
                    *base_seed = s;
                }
                if let Some(k) = self.n {
                    *n = k;
                }
            }
            PerturbationSpec::Weighted { .. } => {
                if self.n.is_some() {
                    return Err(bad("perturbation.n", "only general perturbations have a batch size"));
                }
            }
        }
        config.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn preset_round_trips_through_toml() {
        for entry in scenarios::REGISTRY {
            let c = (entry.build)();
            c.validate().unwrap();
            let text = c.to_toml().unwrap();
            let f = write(&text);
            assert_eq!(load(Some(f.path()), None).unwrap(), c);
        }
    }

    #[test]
    fn file_overrides_only_given_keys() {
        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n[integration]\nt_end = 0.5\n");
        let c = load(Some(f.path()), None).unwrap();
        let preset = (scenarios::find("fig1-sudden-death").unwrap().build)();
        assert_eq!(c.integration.t_end, 0.5);
        assert_eq!(c.integration.dt, preset.integration.dt);
        assert_eq!(c.seaqt, preset.seaqt);
    }

    #[test]
    fn perturbation_kind_can_be_switched() {
        let f = write(
            "schema_version = 1\n[perturbation]\nkind = \"general\"\nn = 4\nsigma = 0.1\nbase_seed = 3\n",
        );
        let c = load(Some(f.path()), Some("fig1-sudden-death")).unwrap();
        assert!(matches!(c.perturbation, PerturbationSpec::General { n: 4, evolve_count: 5, .. }));
    }

    #[test]
    fn errors_name_the_field() {
        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n[integration]\ndt = -1.0\n");
        let msg = load(Some(f.path()), None).unwrap_err().to_string();
        assert!(msg.contains("integration"), "{msg}");

        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n[seaqt]\ntau_a = 0.0\n");
        assert!(load(Some(f.path()), None).unwrap_err().to_string().contains("seaqt"));

        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n[state]\nc1 = 1.0\nc2 = 1.0\nc3 = 1.0\n");
        assert!(load(Some(f.path()), None).unwrap_err().to_string().contains("state"));

        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n[integration]\nbogus = 1\n");
        let err = load(Some(f.path()), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn version_and_scenario_checks() {
        let f = write("schema_version = 2\nscenario = \"fig1-sudden-death\"\n");
        assert!(load(Some(f.path()), None).is_err());
        let f = write("scenario = \"fig1-sudden-death\"\n");
        assert!(load(Some(f.path()), None).is_err());
        let f = write("schema_version = 1\nscenario = \"nope\"\n");
        assert!(load(Some(f.path()), None).is_err());
        let f = write("schema_version = 1\nscenario = \"fig1-sudden-death\"\n");
        assert!(load(Some(f.path()), Some("fig2-seaqt-zeta-family")).is_err());
        assert!(load(None, None).is_err());
        assert!(matches!(load(Some(Path::new("/nonexistent/x.toml")), None), Err(CliError::Io(_))));
    }

    #[test]
    fn overrides_apply() {
        let mut c = load(None, Some("fig8-10-seaqt-batch")).unwrap();
        Overrides {
            out: Some("elsewhere".into()),
            seed: Some(9),
            n: Some(12),
        }
        .apply(&mut c)
        .unwrap();
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
        assert!(matches!(c.perturbation, PerturbationSpec::General { n: 12, base_seed: 9, .. }));

        let mut w = load(None, Some("fig1-sudden-death")).unwrap();
        let o = Overrides {
            n: Some(3),
            ..Default::default()
        };
        assert!(o.apply(&mut w).is_err());
    }

    #[test]
    fn zeta_grid_is_exact() {
        let sw = SweepConfig {
            c1_values: vec![0.4],
            zeta_step: 0.01,
        };
        let g = sw.zeta_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[32], 0.68);
        assert_eq!(*g.last().unwrap(), 0.0);
    }
}
