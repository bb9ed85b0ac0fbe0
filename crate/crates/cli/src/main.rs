//! `episwitch`: configuration-driven simulation and threshold analysis of
//! SIS epidemics on networks with Markov-switched parameters and white-noise
//! transmission.
//!
//! Subcommands: `analyze` (closed-form threshold report), `simulate` (one
//! trajectory: CSV + SVG), `ensemble` (Monte Carlo statistics: JSON + CSV),
//! `reproduce` (bundled scenarios end to end). Exit codes: 0 success,
//! 1 validation error, 2 runtime error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use episwitch::dynamics::{simulate, Model, SimError};
use episwitch::experiments::{occupation_histogram, run_ensemble, ExperimentError};
use episwitch::thresholds::{classify, ThresholdError};

mod config;
mod figures;
mod plot;

use config::{load_config, parse_config, ConfigError, ExperimentConfig};

/// Default norm level for the survival fractions printed by `ensemble`.
const SURVIVAL_CHI: f64 = 0.05;

/// Bin count for the occupation CSV written by `ensemble`.
const OCCUPATION_BINS: usize = 24;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown figure id {id:?}; known ids: {known}")]
    UnknownFigure { id: String, known: String },
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("ensemble failed: {0}")]
    Experiment(#[from] ExperimentError),
    #[error("analysis failed: {0}")]
    Threshold(#[from] ThresholdError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => 3,
            CliError::Config(_) | CliError::UnknownFigure { .. } => 1,
            CliError::Sim(_) | CliError::Threshold(_) => 2,
            CliError::Experiment(e) => match e {
                ExperimentError::Run { .. } => 2,
                ExperimentError::Io(_) => 3,
                _ => 1,
            },
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "episwitch",
    version,
    about = "Simulation and threshold analysis of SIS epidemics on networks \
             with Markov-switched parameters and noisy transmission"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the closed-form threshold report for a configured model
    Analyze {
        /// Path to the JSON experiment config
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output.directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one trajectory; write CSV and an SVG plot
    Simulate {
        /// Path to the JSON experiment config
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output.directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectory seed (defaults to run.master_seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Add per-node columns to the trajectory CSV
        #[arg(long)]
        dump_nodes: bool,
        /// Skip the SVG plot
        #[arg(long)]
        no_plot: bool,
    },
    /// Run a Monte Carlo ensemble; write JSON and CSV statistics
    Ensemble {
        /// Path to the JSON experiment config
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output.directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (defaults to run.master_seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of runs (defaults to run.n_runs)
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Rebuild a bundled scenario end to end (report, trajectory, plot)
    Reproduce {
        /// Scenario id: 1a, 1b, 2, 3a or 3b
        #[arg(long)]
        figure: String,
        /// Output directory (overrides the config's output.directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the SVG plot
        #[arg(long)]
        no_plot: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here; keep their zero status.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze { config, out } => cmd_analyze(&config, out),
        Command::Simulate {
            config,
            out,
            seed,
            dump_nodes,
            no_plot,
        } => cmd_simulate(&config, out, seed, dump_nodes, no_plot),
        Command::Ensemble {
            config,
            out,
            seed,
            runs,
        } => cmd_ensemble(&config, out, seed, runs),
        Command::Reproduce {
            figure,
            out,
            no_plot,
        } => cmd_reproduce(&figure, out, no_plot),
    }
}

/// A validated config plus the directory its relative paths resolve
/// against.
struct Loaded {
    cfg: ExperimentConfig,
    base_dir: PathBuf,
}

fn load(config_path: &Path) -> Result<Loaded, CliError> {
    let cfg = load_config(config_path)?;
    let base_dir = config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok(Loaded { cfg, base_dir })
}

fn out_dir(cfg: &ExperimentConfig, over: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = over.unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        context: format!("cannot create {}", dir.display()),
        source,
    })?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_report(model: &Model, dir: &Path) -> Result<(), CliError> {
    let report = classify(model)?;
    print!("{}", report.render_table());
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&dir.join("report.json"), &(json + "\n"))
}

fn cmd_analyze(config_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let loaded = load(config_path)?;
    let model = loaded.cfg.build_model(&loaded.base_dir)?;
    let dir = out_dir(&loaded.cfg, out)?;
    write_report(&model, &dir)
}

fn simulate_one(
    cfg: &ExperimentConfig,
    model: &Model,
    dir: &Path,
    seed: u64,
    dump_nodes: bool,
    no_plot: bool,
) -> Result<(), CliError> {
    let x0 = cfg.x0_vector(model.node_count());
    let traj = simulate(
        model,
        &x0,
        cfg.s0_index(),
        cfg.run.horizon,
        cfg.run.dt,
        seed,
    )?;
    let csv_path = dir.join("trajectory.csv");
    traj.write_csv_file(&csv_path, dump_nodes || cfg.output.dump_nodes)
        .map_err(|source| CliError::Io {
            context: format!("cannot write {}", csv_path.display()),
            source,
        })?;
    println!("wrote {}", csv_path.display());
    if cfg.output.plot && !no_plot {
        let title = format!("|x(t)| and s(t), seed {seed}");
        let svg = plot::trajectory_svg(&traj, model.state_count(), &title);
        write_file(&dir.join("plot.svg"), &svg)?;
    }
    let last = traj.len() - 1;
    println!(
        "seed {seed}: {} steps, final |x| = {:.6}, clamp ratio = {:.2e}",
        last,
        traj.norm_at(last),
        traj.clamp_ratio()
    );
    Ok(())
}

fn cmd_simulate(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    dump_nodes: bool,
    no_plot: bool,
) -> Result<(), CliError> {
    let loaded = load(config_path)?;
    let model = loaded.cfg.build_model(&loaded.base_dir)?;
    let dir = out_dir(&loaded.cfg, out)?;
    let seed = seed.unwrap_or(loaded.cfg.run.master_seed);
    simulate_one(&loaded.cfg, &model, &dir, seed, dump_nodes, no_plot)
}

fn cmd_ensemble(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<(), CliError> {
    let loaded = load(config_path)?;
    let cfg = &loaded.cfg;
    let model = cfg.build_model(&loaded.base_dir)?;
    let n_runs = runs.unwrap_or(cfg.run.n_runs);
    let master = seed.unwrap_or(cfg.run.master_seed);
    let x0 = cfg.x0_vector(model.node_count());
    let stats = run_ensemble(
        &model,
        &x0,
        cfg.s0_index(),
        cfg.run.horizon,
        cfg.run.dt,
        n_runs,
        master,
    )?;

    let dir = out_dir(cfg, out)?;
    let json_path = dir.join("ensemble.json");
    stats.write_json_file(&json_path)?;
    println!("wrote {}", json_path.display());
    let runs_path = dir.join("runs.csv");
    stats
        .write_runs_csv_file(&runs_path)
        .map_err(|source| CliError::Io {
            context: format!("cannot write {}", runs_path.display()),
            source,
        })?;
    println!("wrote {}", runs_path.display());
    let hist = occupation_histogram(&stats, OCCUPATION_BINS)?;
    let occ_path = dir.join("occupation.csv");
    hist.write_csv_file(&occ_path)
        .map_err(|source| CliError::Io {
            context: format!("cannot write {}", occ_path.display()),
            source,
        })?;
    println!("wrote {}", occ_path.display());

    println!(
        "{n_runs} runs (master seed {master}): median lyap = {:.6}, mean lyap = {:.6}",
        stats.median_lyap(),
        stats.mean_lyap()
    );
    println!(
        "mean time average |x| = {:.6}, mean final |x| = {:.6}, max clamp ratio = {:.2e}",
        stats.mean_time_average(),
        stats.mean_final_norm(),
        stats.max_clamp_ratio()
    );
    // Survival at several checkpoints rather than one instant: permanence is
    // a statement about all late times, so expose any non-stationarity.
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let t = cfg.run.horizon * frac;
        let s = stats.survival_fraction(SURVIVAL_CHI, t)?;
        println!(
            "P(|x({:.6})| >= {SURVIVAL_CHI}) ~= {:.3} +- {:.3}",
            s.t_used, s.fraction, s.half_width
        );
    }
    let marginal = stats.env_marginal();
    let pi = model
        .switching()
        .stationary()
        .map(|p| p.as_slice().to_vec())
        .unwrap_or_default();
    println!(
        "tail state occupancy = [{}], stationary pi = [{}]",
        marginal
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        pi.iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn cmd_reproduce(figure: &str, out: Option<PathBuf>, no_plot: bool) -> Result<(), CliError> {
    let text = figures::figure_config(figure).ok_or_else(|| CliError::UnknownFigure {
        id: figure.to_string(),
        known: figures::known_ids(),
    })?;
    let cfg = parse_config(text)?;
    // Bundled configs are self-contained (no edge-list files).
    let model = cfg.build_model(Path::new("."))?;
    let dir = out_dir(&cfg, out)?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    println!(
        "scenario {figure}: N = {}, m = {}",
        model.node_count(),
        model.state_count()
    );
    write_report(&model, &dir)?;
    simulate_one(&cfg, &model, &dir, cfg.run.master_seed, false, no_plot)
}
