//! Scenario execution. Trajectories run in parallel; results are collected in
//! input order so every file is independent of the thread count.

use rayon::prelude::*;
use serde::Serialize;

use seaqt_bell::dynamics::{first_crossing, integrate_refining, EvolutionTrace, IntegrationSettings};
use seaqt_bell::lindblad::LindbladDynamics;
use seaqt_bell::measures::{pearson, relative_entropy, RelativeEntropy};
use seaqt_bell::perturbation::{generate_batch, weighted_average, Batch, BatchDiagnostics, PerturbationRecord};
use seaqt_bell::seaqt::SeaqtDynamics;
use seaqt_bell::states::{bell_diagonal, CConfig, DensityMatrix};
use seaqt_bell::KERNEL_THRESHOLD;

use crate::config::{Calibration, Framework, PerturbationSpec, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, fmt_rel, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Seaqt,
    Lindblad,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Seaqt => "seaqt",
            Engine::Lindblad => "lindblad",
        }
    }

    pub fn selected(fw: Framework) -> Vec<Engine> {
        let mut v = Vec::new();
        if fw.runs_seaqt() {
            v.push(Engine::Seaqt);
        }
        if fw.runs_lindblad() {
            v.push(Engine::Lindblad);
        }
        v
    }
}

/// How internal time was mapped to reported time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationRecord {
    pub calibration: Calibration,
    /// SEAQT crossing time of `B_max = 2` in internal units.
    pub internal_crossing: Option<f64>,
    /// Reported time = `scale * internal time`.
    pub scale: f64,
}

/// One integrated trajectory, as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub engine: Engine,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub dt_used: f64,
    pub terminated_by: &'static str,
    pub stationary_time: Option<f64>,
    pub samples: usize,
}

impl RunRecord {
    fn new(label: String, engine: Engine, seed: Option<u64>, trace: &EvolutionTrace, dt_used: f64) -> Self {
        RunRecord {
            label,
            engine,
            seed,
            dt_used,
            terminated_by: trace.terminated_by.as_str(),
            stationary_time: trace.stationary_time,
            samples: trace.len(),
        }
    }

    fn rejected(label: String, engine: Engine, seed: Option<u64>, config: &ScenarioConfig) -> Self {
        RunRecord {
            label,
            engine,
            seed,
            dt_used: config.integration.dt / 10f64.powi(config.integration.max_refinements as i32),
            terminated_by: REJECTED,
            stationary_time: None,
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunOutcome {
    pub calibration: Option<CalibrationRecord>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
    /// Trajectories that could not be completed; the command exits with a
    /// numerical failure after writing everything else.
    #[serde(skip)]
    pub errors: Vec<String>,
}

pub fn reference_state(config: &ScenarioConfig) -> CliResult<DensityMatrix> {
    Ok(bell_diagonal(&config.state)?)
}

/// Integrates one trajectory with the configured refinement budget.
pub fn simulate(
    engine: Engine,
    config: &ScenarioConfig,
    rho0: &DensityMatrix,
    settings: &IntegrationSettings,
) -> seaqt_bell::Result<(EvolutionTrace, f64)> {
    let h = config.hamiltonian.build();
    let n = config.integration.max_refinements;
    match engine {
        Engine::Seaqt => integrate_refining(&SeaqtDynamics::new(h, config.seaqt)?, rho0, settings, n),
        Engine::Lindblad => integrate_refining(&LindbladDynamics::new(h, config.lindblad)?, rho0, settings, n),
    }
}

fn numerical(label: &str, e: seaqt_bell::Error) -> CliError {
    CliError::Numerical(format!("{label}: {e}"))
}

fn base_settings(config: &ScenarioConfig) -> CliResult<IntegrationSettings> {
    Ok(IntegrationSettings {
        reference: Some(reference_state(config)?),
        ..config.integration.settings()
    })
}

pub fn calibrate(config: &ScenarioConfig) -> CliResult<CalibrationRecord> {
    match config.calibration {
        Calibration::None => Ok(CalibrationRecord {
            calibration: Calibration::None,
            internal_crossing: None,
            scale: 1.0,
        }),
        Calibration::PaperAxis { zeta, target } => {
            let rho = weighted_average(&reference_state(config)?, zeta)?;
            let settings = IntegrationSettings {
                dt: config.integration.dt,
                t_end: 2.0,
                sample_stride: 1,
                stop_at_stationary: true,
                ..Default::default()
            };
            let (trace, _) = simulate(Engine::Seaqt, config, &rho, &settings).map_err(|e| numerical("calibration", e))?;
            let crossing = first_crossing(&trace.times, &trace.series(|m| m.chsh_max), 2.0).ok_or_else(|| {
                CliError::Numerical(format!(
                    "calibration: SEAQT B_max from zeta = {zeta} never crosses 2 before t = {}",
                    settings.t_end
                ))
            })?;
            log::info!("calibration: internal crossing {crossing}, scale {}", target / crossing);
            Ok(CalibrationRecord {
                calibration: config.calibration,
                internal_crossing: Some(crossing),
                scale: target / crossing,
            })
        }
    }
}

pub const EVOLVE_HEADER: [&str; 10] = [
    "t",
    "S",
    "dS_dt",
    "S_gen",
    "E",
    "B_max",
    "D_rel",
    "energy",
    "purity",
    "stationary_flag",
];

pub fn evolve_rows(trace: &EvolutionTrace, scale: f64) -> Vec<Vec<String>> {
    (0..trace.len())
        .map(|k| {
            let m = &trace.measures[k];
            let t = trace.times[k];
            let stationary = trace.stationary_time.is_some_and(|ts| t >= ts);
            vec![
                fmt_f64(t * scale),
                fmt_f64(m.entropy),
                fmt_f64(trace.entropy_rate[k] / scale),
                fmt_f64(trace.entropy_generation[k]),
                fmt_f64(m.concurrence),
                fmt_f64(m.chsh_max),
                fmt_rel(&m.relative_entropy),
                fmt_f64(m.energy),
                fmt_f64(m.purity),
                (stationary as u8).to_string(),
            ]
        })
        .collect()
}

/// Batch records ordered by closeness `D(rho || rho0)` to the reference
/// state; the first is GP1.
pub fn closest_records<'a>(batch: &'a Batch, rho0: &DensityMatrix, count: usize) -> Vec<(&'a PerturbationRecord, RelativeEntropy)> {
    let mut ranked: Vec<_> = batch
        .records
        .iter()
        .map(|r| (r, relative_entropy(r.state(), rho0, KERNEL_THRESHOLD)))
        .collect();
    ranked.sort_by(|a, b| a.1.value().total_cmp(&b.1.value()).then(a.0.index.cmp(&b.0.index)));
    ranked.truncate(count);
    ranked
}

fn generate(config: &ScenarioConfig, n: usize, sigma: f64, base_seed: u64) -> CliResult<Batch> {
    let batch = generate_batch(n, sigma, base_seed, &reference_state(config)?, &config.hamiltonian.build())?;
    let d = &batch.diagnostics;
    if d.failure_fraction() > config.batch.max_failure_fraction {
        return Err(CliError::Numerical(format!(
            "{} of {} records failed constraint restoration (no root: {}, invalid roots: {})",
            d.failed_records.len(),
            d.requested,
            d.no_root,
            d.all_roots_invalid
        )));
    }
    Ok(batch)
}

/// A labelled initial state.
struct Start {
    label: String,
    rho: DensityMatrix,
    seed: Option<u64>,
}

fn starts(config: &ScenarioConfig, count_limit: Option<usize>, out: &mut OutputDir) -> CliResult<Vec<Start>> {
    let rho0 = reference_state(config)?;
    match &config.perturbation {
        PerturbationSpec::Weighted { zeta } => zeta
            .iter()
            .take(count_limit.unwrap_or(usize::MAX))
            .map(|&z| {
                Ok(Start {
                    label: format!("zeta{z:.3}"),
                    rho: weighted_average(&rho0, z)?,
                    seed: None,
                })
            })
            .collect(),
        PerturbationSpec::General {
            n,
            sigma,
            base_seed,
            evolve_count,
        } => {
            let batch = generate(config, *n, *sigma, *base_seed)?;
            let count = count_limit.unwrap_or(*evolve_count).min(*evolve_count);
            let picked = closest_records(&batch, &rho0, count);
            let rows: Vec<Vec<String>> = picked
                .iter()
                .enumerate()
                .map(|(k, (r, d))| {
                    vec![
                        format!("GP{}", k + 1),
                        r.index.to_string(),
                        base_seed.wrapping_add(r.index as u64).to_string(),
                        fmt_rel(d),
                        fmt_f64(seaqt_bell::measures::concurrence(r.state())),
                        fmt_f64(seaqt_bell::measures::chsh_max(r.state())),
                    ]
                })
                .collect();
            out.write_csv("gp_records.csv", &["gp", "record", "seed", "D_rel", "E", "B_max"], &rows)?;
            Ok(picked
                .iter()
                .enumerate()
                .map(|(k, (r, _))| Start {
                    label: format!("gp{}", k + 1),
                    rho: *r.state(),
                    seed: Some(base_seed.wrapping_add(r.index as u64)),
                })
                .collect())
        }
    }
}

fn run_all(
    config: &ScenarioConfig,
    jobs: &[(Engine, &Start)],
    settings: &IntegrationSettings,
) -> CliResult<Vec<(EvolutionTrace, f64)>> {
    jobs.par_iter()
        .map(|(engine, s)| {
            simulate(*engine, config, &s.rho, settings).map_err(|e| numerical(&format!("{} {}", engine.as_str(), s.label), e))
        })
        .collect()
}

pub fn run_evolution(config: &ScenarioConfig, out: &mut OutputDir) -> CliResult<RunOutcome> {
    let cal = calibrate(config)?;
    let starts = starts(config, None, out)?;
    let settings = base_settings(config)?;
    let jobs: Vec<(Engine, &Start)> = Engine::selected(config.framework)
        .into_iter()
        .flat_map(|e| starts.iter().map(move |s| (e, s)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(engine, s)| simulate(*engine, config, &s.rho, &settings))
        .collect();

    let mut outcome = RunOutcome {
        calibration: Some(cal),
        seeds: starts.iter().filter_map(|s| s.seed).collect(),
        ..Default::default()
    };
    for ((engine, start), res) in jobs.iter().zip(results) {
        match res {
            Ok((trace, dt)) => {
                let name = format!("evolve_{}_{}.csv", engine.as_str(), start.label);
                out.write_csv(&name, &EVOLVE_HEADER, &evolve_rows(&trace, cal.scale))?;
                outcome
                    .runs
                    .push(RunRecord::new(start.label.clone(), *engine, start.seed, &trace, dt));
            }
            // The other trajectories are still written; the command fails
            // once the manifest is out.
            Err(e @ seaqt_bell::Error::StepRejected { .. }) => {
                outcome.errors.push(format!("{} {}: {e}", engine.as_str(), start.label));
                outcome.runs.push(RunRecord::rejected(start.label.clone(), *engine, start.seed, config));
            }
            Err(e) => return Err(numerical(&format!("{} {}", engine.as_str(), start.label), e)),
        }
    }
    Ok(outcome)
}

pub const SWEEP_HEADER: [&str; 7] = [
    "c1",
    "zeta",
    "S_initial",
    "S_final",
    "D_initial_vs_final",
    "S_gen_total",
    "terminated_by",
];

/// `terminated_by` value of a trajectory whose integration was rejected.
pub const REJECTED: &str = "step_rejected";

pub fn run_sweep(config: &ScenarioConfig, out: &mut OutputDir) -> CliResult<RunOutcome> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: section required by the sweep command".into()))?;
    let grid = sweep.zeta_grid();
    let mut points = Vec::new();
    for &c1 in &sweep.c1_values {
        let c = CConfig::new(c1, config.state.c2, config.state.c3)?;
        let rho0 = bell_diagonal(&c)?;
        for &z in &grid {
            points.push((c1, z, weighted_average(&rho0, z)?));
        }
    }
    let settings = config.integration.settings();
    let mut outcome = RunOutcome::default();
    for engine in Engine::selected(config.framework) {
        let results: Vec<_> = points
            .par_iter()
            .map(|(_, _, rho)| simulate(engine, config, rho, &settings))
            .collect();
        let mut rows = Vec::with_capacity(points.len());
        let mut rejected = 0;
        for ((c1, z, rho), res) in points.iter().zip(results) {
            let label = format!("c1={c1},zeta={z:.2}");
            let (trace, dt) = match res {
                Ok(ok) => ok,
                // A point whose flow leaves the state space is kept as a row
                // so the grid stays rectangular; anything else aborts.
                Err(e @ seaqt_bell::Error::StepRejected { .. }) => {
                    log::warn!("{} {label}: {e}", engine.as_str());
                    rejected += 1;
                    let s0 = seaqt_bell::measures::entropy(rho, KERNEL_THRESHOLD);
                    rows.push(vec![
                        fmt_f64(*c1),
                        fmt_f64(*z),
                        fmt_f64(s0),
                        fmt_f64(f64::NAN),
                        fmt_f64(f64::NAN),
                        fmt_f64(f64::NAN),
                        REJECTED.to_string(),
                    ]);
                    outcome.runs.push(RunRecord::rejected(label, engine, None, config));
                    continue;
                }
                Err(e) => return Err(numerical(&format!("{} {label}", engine.as_str()), e)),
            };
            let first = trace.measures[0];
            let last = trace.final_measures();
            rows.push(vec![
                fmt_f64(*c1),
                fmt_f64(*z),
                fmt_f64(first.entropy),
                fmt_f64(last.entropy),
                fmt_rel(&relative_entropy(rho, trace.final_state(), KERNEL_THRESHOLD)),
                fmt_f64(*trace.entropy_generation.last().expect("non-empty trace")),
                trace.terminated_by.as_str().to_string(),
            ]);
            outcome.runs.push(RunRecord::new(label, engine, None, &trace, dt));
        }
        if rejected as f64 > config.batch.max_failure_fraction * points.len() as f64 {
            return Err(CliError::Numerical(format!(
                "{}: {rejected} of {} sweep points rejected",
                engine.as_str(),
                points.len()
            )));
        }
        out.write_csv(&format!("sweep_{}.csv", engine.as_str()), &SWEEP_HEADER, &rows)?;
    }
    Ok(outcome)
}

/// Per-framework statistics written to `correlation.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub engine: Engine,
    pub records: usize,
    pub failed_trajectories: Vec<usize>,
    /// Pearson coefficient of `E_final - E_initial` against total entropy generation.
    pub r_e: f64,
    pub r_b: f64,
    pub mean_e_initial: f64,
    pub mean_b_initial: f64,
    pub mean_e_final: f64,
    pub mean_b_final: f64,
    pub fraction_b_initial_below_2: f64,
    pub fraction_b_final_below_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSpec {
    pub quantity: &'static str,
    pub bins: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub sigma: f64,
    pub base_seed: u64,
    pub diagnostics: BatchDiagnostics,
    pub histograms: Vec<HistogramSpec>,
    pub frameworks: Vec<CorrelationReport>,
}

#[derive(Debug, Clone, Copy)]
struct Endpoints {
    e0: f64,
    b0: f64,
    e1: f64,
    b1: f64,
    s0: f64,
    s1: f64,
    sgen: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 { f64::NAN } else { s / n as f64 }
}

/// Uniform bins over `[lower, upper]`; the top edge belongs to the last bin.
pub fn histogram(values: &[f64], bins: usize, lower: f64, upper: f64) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = (upper - lower) / bins as f64;
    for &v in values {
        let k = if width > 0.0 { ((v - lower) / width).floor() as isize } else { 0 };
        counts[k.clamp(0, bins as isize - 1) as usize] += 1;
    }
    counts
}

pub fn run_batch(config: &ScenarioConfig, out: &mut OutputDir) -> CliResult<(RunOutcome, BatchReport)> {
    let PerturbationSpec::General { n, sigma, base_seed, .. } = config.perturbation else {
        return Err(CliError::Config("perturbation.kind: batch needs a general perturbation".into()));
    };
    let batch = generate(config, n, sigma, base_seed)?;
    let settings = base_settings(config)?;
    let engines = Engine::selected(config.framework);

    let mut outcome = RunOutcome {
        calibration: None,
        seeds: batch.records.iter().map(|r| base_seed.wrapping_add(r.index as u64)).collect(),
        ..Default::default()
    };
    let mut record_rows = Vec::new();
    let mut per_engine = Vec::new();
    for &engine in &engines {
        let results: Vec<_> = batch
            .records
            .par_iter()
            .map(|r| simulate(engine, config, r.state(), &settings))
            .collect();
        let mut ends = Vec::new();
        let mut failed = Vec::new();
        for (r, res) in batch.records.iter().zip(results) {
            let seed = base_seed.wrapping_add(r.index as u64);
            match res {
                Ok((trace, dt)) => {
                    let m0 = trace.measures[0];
                    let m1 = *trace.final_measures();
                    let e = Endpoints {
                        e0: m0.concurrence,
                        b0: m0.chsh_max,
                        e1: m1.concurrence,
                        b1: m1.chsh_max,
                        s0: m0.entropy,
                        s1: m1.entropy,
                        sgen: *trace.entropy_generation.last().expect("non-empty trace"),
                    };
                    record_rows.push(vec![
                        r.index.to_string(),
                        seed.to_string(),
                        engine.as_str().to_string(),
                        fmt_f64(e.e0),
                        fmt_f64(e.b0),
                        fmt_f64(e.e1),
                        fmt_f64(e.b1),
                        fmt_f64(e.s0),
                        fmt_f64(e.s1),
                        fmt_f64(e.sgen),
                        fmt_rel(&m0.relative_entropy),
                        fmt_f64(dt),
                        trace.terminated_by.as_str().to_string(),
                    ]);
                    outcome
                        .runs
                        .push(RunRecord::new(format!("record{}", r.index), engine, Some(seed), &trace, dt));
                    ends.push(e);
                }
                Err(e) => {
                    log::warn!("{} record {} (seed {seed}): {e}", engine.as_str(), r.index);
                    failed.push(r.index);
                }
            }
        }
        let lost = batch.diagnostics.failed_records.len() + failed.len();
        if lost as f64 > config.batch.max_failure_fraction * n as f64 {
            return Err(CliError::Numerical(format!(
                "{}: {lost} of {n} records failed (generation: {}, integration: {})",
                engine.as_str(),
                batch.diagnostics.failed_records.len(),
                failed.len()
            )));
        }
        per_engine.push((engine, ends, failed));
    }

    out.write_csv(
        "records.csv",
        &[
            "index",
            "seed",
            "framework",
            "E_initial",
            "B_initial",
            "E_final",
            "B_final",
            "S_initial",
            "S_final",
            "S_gen_total",
            "D_rel_initial",
            "dt_used",
            "terminated_by",
        ],
        &record_rows,
    )?;

    // One bin layout per measure, shared by initial and final values of every
    // framework so the histograms overlay directly.
    let bins = config.batch.histogram_bins;
    type Pick = fn(&Endpoints) -> (f64, f64);
    let measures: [(&'static str, Pick); 2] = [("E", |e| (e.e0, e.e1)), ("B_max", |e| (e.b0, e.b1))];
    let mut specs = Vec::new();
    let mut hist_rows = Vec::new();
    for (name, pick) in measures {
        let all: Vec<f64> = per_engine
            .iter()
            .flat_map(|(_, ends, _)| ends.iter().flat_map(|e| {
                let (a, b) = pick(e);
                [a, b]
            }))
            .collect();
        let lower = all.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (upper - lower) / bins as f64;
        for (engine, ends, _) in &per_engine {
            for (stage, which) in [("initial", 0), ("final", 1)] {
                let vals: Vec<f64> = ends
                    .iter()
                    .map(|e| if which == 0 { pick(e).0 } else { pick(e).1 })
                    .collect();
                for (k, count) in histogram(&vals, bins, lower, upper).into_iter().enumerate() {
                    hist_rows.push(vec![
                        name.to_string(),
                        stage.to_string(),
                        engine.as_str().to_string(),
                        k.to_string(),
                        fmt_f64(lower + k as f64 * width),
                        fmt_f64(if k + 1 == bins { upper } else { lower + (k + 1) as f64 * width }),
                        count.to_string(),
                    ]);
                }
            }
        }
        specs.push(HistogramSpec {
            quantity: name,
            bins,
            lower,
            upper,
        });
    }
    out.write_csv(
        "histogram.csv",
        &["quantity", "stage", "framework", "bin", "lower", "upper", "count"],
        &hist_rows,
    )?;

    let mut frameworks = Vec::new();
    for (engine, ends, failed) in per_engine {
        let sgen: Vec<f64> = ends.iter().map(|e| e.sgen).collect();
        let de: Vec<f64> = ends.iter().map(|e| e.e1 - e.e0).collect();
        let db: Vec<f64> = ends.iter().map(|e| e.b1 - e.b0).collect();
        let r = |xs: &[f64]| pearson(xs, &sgen).map_err(|e| CliError::Numerical(format!("{} correlation: {e}", engine.as_str())));
        let k = ends.len() as f64;
        frameworks.push(CorrelationReport {
            engine,
            records: ends.len(),
            failed_trajectories: failed,
            r_e: r(&de)?,
            r_b: r(&db)?,
            mean_e_initial: mean(ends.iter().map(|e| e.e0)),
            mean_b_initial: mean(ends.iter().map(|e| e.b0)),
            mean_e_final: mean(ends.iter().map(|e| e.e1)),
            mean_b_final: mean(ends.iter().map(|e| e.b1)),
            fraction_b_initial_below_2: ends.iter().filter(|e| e.b0 < 2.0).count() as f64 / k,
            fraction_b_final_below_2: ends.iter().filter(|e| e.b1 < 2.0).count() as f64 / k,
        });
    }
    let report = BatchReport {
        sigma,
        base_seed,
        diagnostics: batch.diagnostics,
        histograms: specs,
        frameworks,
    };
    out.write_json("correlation.json", &report)?;
    Ok((outcome, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub initial_state: String,
    pub time_scale: f64,
    pub crossing_seaqt: Option<f64>,
    pub crossing_lindblad: Option<f64>,
    pub samples: usize,
}

pub const COMPARE_HEADER: [&str; 9] = [
    "t",
    "S_seaqt",
    "dS_dt_seaqt",
    "E_seaqt",
    "B_max_seaqt",
    "S_lindblad",
    "dS_dt_lindblad",
    "E_lindblad",
    "B_max_lindblad",
];

pub fn run_compare(config: &ScenarioConfig, out: &mut OutputDir) -> CliResult<(RunOutcome, CompareSummary)> {
    let cal = calibrate(config)?;
    let start = starts(config, Some(1), out)?.remove(0);
    // Both runs cover the full window so the rows line up.
    let settings = IntegrationSettings {
        stop_at_stationary: false,
        ..base_settings(config)?
    };
    let jobs = [(Engine::Seaqt, &start), (Engine::Lindblad, &start)];
    let mut traces = run_all(config, &jobs, &settings)?;
    let (tl, dl) = traces.pop().expect("two jobs");
    let (ts, ds) = traces.pop().expect("two jobs");
    if ts.times != tl.times {
        return Err(CliError::Numerical(format!(
            "compare: sample grids differ ({} vs {} samples); lower integration.dt so neither run needs refinement",
            ts.len(),
            tl.len()
        )));
    }
    let s = cal.scale;
    let rows: Vec<Vec<String>> = (0..ts.len())
        .map(|k| {
            let (a, b) = (&ts.measures[k], &tl.measures[k]);
            vec![
                fmt_f64(ts.times[k] * s),
                fmt_f64(a.entropy),
                fmt_f64(ts.entropy_rate[k] / s),
                fmt_f64(a.concurrence),
                fmt_f64(a.chsh_max),
                fmt_f64(b.entropy),
                fmt_f64(tl.entropy_rate[k] / s),
                fmt_f64(b.concurrence),
                fmt_f64(b.chsh_max),
            ]
        })
        .collect();
    out.write_csv("compare.csv", &COMPARE_HEADER, &rows)?;
    let scaled: Vec<f64> = ts.times.iter().map(|t| t * s).collect();
    let summary = CompareSummary {
        initial_state: start.label.clone(),
        time_scale: s,
        crossing_seaqt: first_crossing(&scaled, &ts.series(|m| m.chsh_max), 2.0),
        crossing_lindblad: first_crossing(&scaled, &tl.series(|m| m.chsh_max), 2.0),
        samples: ts.len(),
    };
    out.write_json("compare_summary.json", &summary)?;
    let outcome = RunOutcome {
        calibration: Some(cal),
        seeds: start.seed.into_iter().collect(),
        runs: vec![
            RunRecord::new(start.label.clone(), Engine::Seaqt, start.seed, &ts, ds),
            RunRecord::new(start.label.clone(), Engine::Lindblad, start.seed, &tl, dl),
        ],
        errors: Vec::new(),
    };
    Ok((outcome, summary))
}
