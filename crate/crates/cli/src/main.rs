mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, Overrides};
use error::RunError;

#[derive(Parser)]
#[command(name = "eqlab", version, about = "Emitter-electron entanglement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Ground-state probability and purity after one comb, over (theta, beta).
    Fig1Maps(RunArgs),
    /// Worst-case purity loss against the number of comb peaks.
    Fig1dScaling(RunArgs),
    /// Accessible steady states and the inscribed sphere.
    Fig2Region(RunArgs),
    /// Eigenvalues and eigenvector weights over (|I|, beta).
    Fig3Eigenmaps(RunArgs),
    /// Bloch trajectories and phase-locking runs.
    Fig3Trajectories(RunArgs),
    /// Rabi maps and windows for the hardware presets.
    Fig3Hardware(RunArgs),
    /// Electron spectra and state reconstruction.
    Fig4Tomography(RunArgs),
    /// Steady state and spectrum along one drive parameter.
    Sweep(RunArgs),
    /// Closed-form scattering against the time-dependent lattice model.
    OracleCheck(RunArgs),
    /// Check a config file without running it.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(experiment: Experiment, args: RunArgs) -> Result<PathBuf, RunError> {
    let raw = args.config.as_deref().map(config::read_raw).transpose()?;
    let flags = Overrides { seed: args.seed, out: args.out };
    let cfg = config::resolve(experiment, raw, &flags)?;
    log::info!("running {} into {}", cfg.experiment, cfg.output_dir.display());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| RunError::Output(e.to_string()))?;
    let mut sink = output::Sink::create(&cfg.output_dir)?;
    pool.install(|| experiments::run(&cfg, &mut sink))?;
    sink.finish(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Validate { file } => {
            return match config::read_raw(&file).and_then(|raw| {
                let e = raw.experiment;
                config::resolve(e, Some(raw), &Overrides::default()).map(|_| e)
            }) {
                Ok(e) => {
                    println!("ok: {e}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            };
        }
        Command::Fig1Maps(a) => (Experiment::Fig1Maps, a),
        Command::Fig1dScaling(a) => (Experiment::Fig1dScaling, a),
        Command::Fig2Region(a) => (Experiment::Fig2Region, a),
        Command::Fig3Eigenmaps(a) => (Experiment::Fig3Eigenmaps, a),
        Command::Fig3Trajectories(a) => (Experiment::Fig3Trajectories, a),
        Command::Fig3Hardware(a) => (Experiment::Fig3Hardware, a),
        Command::Fig4Tomography(a) => (Experiment::Fig4Tomography, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::OracleCheck(a) => (Experiment::OracleCheck, a),
    };
    match run(experiment, args) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
