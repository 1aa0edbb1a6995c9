use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seaqt_bell_cli::config::{self, Overrides};
use seaqt_bell_cli::scenarios::{self, CI_BATCH, PAPER_BATCH};
use seaqt_bell_cli::{execute, execute_overlay, CliError, CliResult, Command};

#[derive(Parser)]
#[command(name = "seaqt-bell", version, about = "SEAQT and Lindblad evolutions of perturbed Bell-diagonal states")]
struct Cli {
    /// Scenario configuration (TOML, schema_version = 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for general perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Batch size preset for general perturbations.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// n = 1500
    Paper,
    /// n = 300
    Ci,
}

#[derive(Args)]
struct ScenarioArg {
    /// Registered scenario name (see `list-scenarios`).
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Write one trace CSV per trajectory.
    Evolve(ScenarioArg),
    /// Summarise final states over a (c1, zeta) grid.
    Sweep(ScenarioArg),
    /// GUE batch with histograms and correlation report.
    Batch(ScenarioArg),
    /// SEAQT and Lindblad side by side from one initial state.
    Compare(ScenarioArg),
    /// Residuals of measured data against a trace CSV.
    Overlay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Print the scenario registry.
    ListScenarios,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let (command, arg) = match cli.command {
        Sub::ListScenarios => {
            print!("{}", scenarios::listing());
            return Ok(());
        }
        Sub::Overlay { trace, data } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out/overlay"));
            let report = execute_overlay(&trace, &data, &out)?;
            for (name, r) in &report.residuals {
                println!(
                    "{name}: n = {}, max |r| = {:e}, mean |r| = {:e}, mean r = {:e}",
                    r.n, r.max_abs, r.mean_abs, r.mean
                );
            }
            return Ok(());
        }
        Sub::Evolve(a) => (Command::Evolve, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Batch(a) => (Command::Batch, a),
        Sub::Compare(a) => (Command::Compare, a),
    };
    let mut config = config::load(cli.config.as_deref(), arg.scenario.as_deref())?;
    Overrides {
        out: cli.out,
        seed: cli.seed,
        n: cli.preset.map(|p| match p {
            Preset::Paper => PAPER_BATCH,
            Preset::Ci => CI_BATCH,
        }),
    }
    .apply(&mut config)?;
    let dir = execute(command, &config)?;
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
