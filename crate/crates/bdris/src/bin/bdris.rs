//! Thin CLI over the experiment harness.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when every
//! simulated trial failed. `BDRIS_THREADS` caps worker concurrency.

use bdris::harness::{
    all_trials_failed, emit_plots, run_experiment, ExperimentConfig, FigureKind,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bdris",
    about = "Individual vs. cascaded channel estimation experiments for beyond-diagonal RIS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its metrics CSV (plus SVG plots).
    Run {
        /// JSON experiment configuration.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Bundled preset: fig3, fig4, fig5, or smoke.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip SVG emission.
        #[arg(long)]
        no_plots: bool,
    },
    /// Render SVG figures from an existing metrics CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Which figure to render.
        #[arg(long, value_enum, default_value_t = FigureArg::Auto)]
        figure: FigureArg,
    },
    /// Parse and validate a configuration file, reporting problems.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Auto,
    NmseN,
    NmsePower,
    Pilots,
}

impl From<FigureArg> for FigureKind {
    fn from(value: FigureArg) -> Self {
        match value {
            FigureArg::Auto => FigureKind::Auto,
            FigureArg::NmseN => FigureKind::NmseVsN,
            FigureArg::NmsePower => FigureKind::NmseVsPower,
            FigureArg::Pilots => FigureKind::PilotsVsN,
        }
    }
}

fn load_config(
    config: Option<PathBuf>,
    preset: Option<String>,
) -> Result<ExperimentConfig, String> {
    match (config, preset) {
        (Some(path), None) => ExperimentConfig::from_json_file(&path).map_err(|e| e.to_string()),
        (None, Some(name)) => ExperimentConfig::preset(&name).map_err(|e| e.to_string()),
        (None, None) => Err("one of --config or --preset is required".into()),
        (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            preset,
            trials,
            seed,
            out,
            no_plots,
        } => {
            let mut cfg = match load_config(config, preset) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Err(e) = cfg.validate() {
                eprintln!("configuration error: {e}");
                return ExitCode::from(1);
            }
            match run_experiment(&cfg, &out) {
                Ok((records, csv_path)) => {
                    let failed = records.iter().filter(|r| r.nmse.is_none()).count();
                    println!(
                        "wrote {} records to {} ({} without NMSE)",
                        records.len(),
                        csv_path.display(),
                        failed
                    );
                    if !no_plots {
                        match emit_plots(&csv_path, FigureKind::Auto, &out) {
                            Ok(paths) => {
                                for p in paths {
                                    println!("wrote {}", p.display());
                                }
                            }
                            Err(e) => eprintln!("plot emission skipped: {e}"),
                        }
                    }
                    if all_trials_failed(&records, &cfg) {
                        eprintln!("every trial failed");
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Plot { csv, out, figure } => match emit_plots(&csv, figure.into(), &out) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("plot failed: {e}");
                ExitCode::from(2)
            }
        },
        Command::ValidateConfig { config } => match ExperimentConfig::from_json_file(&config) {
            Ok(cfg) => {
                println!(
                    "ok: {} ({} sweep points, {} trials)",
                    cfg.experiment_id,
                    cfg.sweep_points().len(),
                    cfg.trials
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid: {e}");
                ExitCode::from(1)
            }
        },
    }
}
