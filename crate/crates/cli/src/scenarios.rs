//! Named experiments, one per figure family.

use std::path::PathBuf;

use serde::Serialize;

use seaqt_bell::lindblad::LindbladParams;
use seaqt_bell::seaqt::SeaqtParams;
use seaqt_bell::CConfig;

use crate::config::{
    BatchConfig, Calibration, Framework, HamiltonianConfig, IntegrationConfig, PerturbationSpec, ScenarioConfig,
    SweepConfig, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Evolve,
    Sweep,
    Batch,
    Compare,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Batch => "batch",
            Command::Compare => "compare",
        }
    }
}

pub struct Scenario {
    pub name: &'static str,
    pub command: Command,
    pub figures: &'static str,
    pub summary: &'static str,
    pub build: fn() -> ScenarioConfig,
}

/// Paper-scale batch size; `--preset ci` shrinks it.
pub const PAPER_BATCH: usize = 1500;
pub const CI_BATCH: usize = 300;
pub const DEFAULT_SEED: u64 = 2024;

pub const SWEEP_C1: [f64; 5] = [0.1, 0.4, 0.8, 0.9, 0.996];

fn base(name: &str, framework: Framework) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        scenario: name.to_string(),
        framework,
        state: CConfig::BASELINE,
        hamiltonian: HamiltonianConfig { eps_a: 1.0, eps_b: 1.0 },
        seaqt: SeaqtParams::default(),
        lindblad: LindbladParams::default(),
        perturbation: PerturbationSpec::Weighted { zeta: vec![0.68] },
        integration: IntegrationConfig {
            dt: 1e-3,
            t_end: 5.0,
            sample_stride: 10,
            stop_at_stationary: true,
            max_refinements: 2,
        },
        sweep: None,
        batch: BatchConfig {
            histogram_bins: 30,
            max_failure_fraction: 0.2,
        },
        calibration: Calibration::PAPER,
        output_dir: PathBuf::from("out").join(name),
    }
}

fn zeta_family() -> Vec<f64> {
    // 1, 0.96, ..., 0.68
    (0..=8).map(|k| (25 - k) as f64 / 25.0).collect()
}

fn general(n: usize) -> PerturbationSpec {
    PerturbationSpec::General {
        n,
        sigma: 0.1,
        base_seed: DEFAULT_SEED,
        evolve_count: 5,
    }
}

fn long_run(c: &mut ScenarioConfig) {
    c.integration.t_end = 30.0;
    c.integration.sample_stride = 100;
    c.calibration = Calibration::None;
}

fn sweep(name: &str, framework: Framework) -> ScenarioConfig {
    let mut c = base(name, framework);
    long_run(&mut c);
    c.sweep = Some(SweepConfig {
        c1_values: SWEEP_C1.to_vec(),
        zeta_step: 0.01,
    });
    c
}

fn batch(name: &str, framework: Framework) -> ScenarioConfig {
    let mut c = base(name, framework);
    long_run(&mut c);
    c.perturbation = general(PAPER_BATCH);
    c
}

fn general_evolutions(name: &str, framework: Framework) -> ScenarioConfig {
    let mut c = base(name, framework);
    c.perturbation = general(PAPER_BATCH);
    c
}

pub static REGISTRY: &[Scenario] = &[
    Scenario {
        name: "fig1-sudden-death",
        command: Command::Evolve,
        figures: "Fig. 1",
        summary: "zeta = 0.68 weighted state under SEAQT and Lindblad; concurrence and CHSH",
        build: || base("fig1-sudden-death", Framework::Both),
    },
    Scenario {
        name: "fig2-seaqt-zeta-family",
        command: Command::Evolve,
        figures: "Fig. 2",
        summary: "SEAQT evolutions for zeta = 1, 0.96, ..., 0.68",
        build: || {
            let mut c = base("fig2-seaqt-zeta-family", Framework::Seaqt);
            c.perturbation = PerturbationSpec::Weighted { zeta: zeta_family() };
            c
        },
    },
    Scenario {
        name: "fig3-4-seaqt-sweep",
        command: Command::Sweep,
        figures: "Figs. 3, 4",
        summary: "SEAQT relative entropy, entropies and entropy generation over (c1, zeta)",
        build: || sweep("fig3-4-seaqt-sweep", Framework::Seaqt),
    },
    Scenario {
        name: "fig5-lindblad-zeta-family",
        command: Command::Evolve,
        figures: "Fig. 5",
        summary: "Lindblad evolutions for zeta = 1, 0.96, ..., 0.68",
        build: || {
            let mut c = base("fig5-lindblad-zeta-family", Framework::Lindblad);
            c.perturbation = PerturbationSpec::Weighted { zeta: zeta_family() };
            c
        },
    },
    Scenario {
        name: "fig6-7-lindblad-sweep",
        command: Command::Sweep,
        figures: "Figs. 6, 7",
        summary: "Lindblad relative entropy, entropies and entropy generation over (c1, zeta)",
        build: || sweep("fig6-7-lindblad-sweep", Framework::Lindblad),
    },
    Scenario {
        name: "fig8-10-seaqt-batch",
        command: Command::Batch,
        figures: "Figs. 8, 10",
        summary: "GUE batch under SEAQT: histograms and Pearson correlations with entropy generation",
        build: || batch("fig8-10-seaqt-batch", Framework::Seaqt),
    },
    Scenario {
        name: "fig9-seaqt-general-evolutions",
        command: Command::Evolve,
        figures: "Fig. 9",
        summary: "SEAQT evolutions of the five GUE records closest to the Bell-diagonal state",
        build: || general_evolutions("fig9-seaqt-general-evolutions", Framework::Seaqt),
    },
    Scenario {
        name: "fig11-13-lindblad-batch",
        command: Command::Batch,
        figures: "Figs. 11, 13",
        summary: "GUE batch under Lindblad: histograms and Pearson correlations with entropy generation",
        build: || batch("fig11-13-lindblad-batch", Framework::Lindblad),
    },
    Scenario {
        name: "fig12-lindblad-general-evolutions",
        command: Command::Evolve,
        figures: "Fig. 12",
        summary: "Lindblad evolutions of the five GUE records closest to the Bell-diagonal state",
        build: || general_evolutions("fig12-lindblad-general-evolutions", Framework::Lindblad),
    },
    Scenario {
        name: "fig14-compare-gp1",
        command: Command::Compare,
        figures: "Fig. 14",
        summary: "SEAQT and Lindblad side by side from GP1 on a shared time grid",
        build: || {
            let mut c = general_evolutions("fig14-compare-gp1", Framework::Both);
            c.perturbation = PerturbationSpec::General {
                n: PAPER_BATCH,
                sigma: 0.1,
                base_seed: DEFAULT_SEED,
                evolve_count: 1,
            };
            c
        },
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    REGISTRY.iter().find(|s| s.name == name)
}

/// One line per scenario, as printed by `list-scenarios`.
pub fn listing() -> String {
    let width = REGISTRY.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in REGISTRY {
        out.push_str(&format!(
            "{:<width$}  {:<8} {:<12} {}\n",
            s.name,
            s.command.as_str(),
            s.figures,
            s.summary
        ));
    }
    out
}
