use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pumpout_lab::chart::emit_chart;
use pumpout_lab::config::ExperimentConfig;
use pumpout_lab::experiment::run_experiment;
use pumpout_lab::sweep::{sweep_gamma, DEFAULT_GAMMA_GRID};

#[derive(Parser)]
#[command(name = "pumpout", version, about = "Noisy-label training experiments")]
struct Cli {
    /// Overrides `train.seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the training split size.
    #[arg(long, global = true)]
    limit: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train once and write per-epoch metrics.
    Run {
        config: PathBuf,
        /// CSV output; defaults to `output.csv` from the config, else `<name>.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pick gamma by validation accuracy on the noisy validation labels.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Directory for one CSV per gamma.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Render metric CSVs as an SVG line chart.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn load(cli: &Cli, path: &Path) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        config.train.seed = seed;
    }
    if let Some(limit) = cli.limit {
        config.train_limit = Some(limit);
    }
    Ok(config)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Run { config, output } => {
            let cfg = load(cli, config)?;
            let csv = output
                .clone()
                .or_else(|| cfg.output_csv.clone())
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
            let result = run_experiment(&cfg, Some(&csv))?;
            let s = &result.summary;
            println!(
                "{}: {} epochs in {:.1}s, final test accuracy {}, best {}, label precision {}, train noise {:.4}",
                cfg.name,
                result.metrics.len(),
                result.wall_clock_s,
                fmt_opt(s.final_test_accuracy),
                fmt_opt(s.best_test_accuracy),
                fmt_opt(s.final_label_precision),
                s.train_noise_rate,
            );
            println!("metrics written to {}", csv.display());
        }
        Command::Sweep { config, grid, out_dir } => {
            let cfg = load(cli, config)?;
            let grid = grid.clone().unwrap_or_else(|| DEFAULT_GAMMA_GRID.to_vec());
            let result = sweep_gamma(&cfg, &grid, Some(out_dir))?;
            for run in &result.runs {
                println!(
                    "gamma {:<6} validation {} test {}",
                    run.gamma,
                    fmt_opt(run.result.summary.validation_accuracy),
                    fmt_opt(run.result.summary.final_test_accuracy),
                );
            }
            println!("chosen gamma {}", result.chosen_gamma);
        }
        Command::Plot { csv, output } => {
            emit_chart(csv, output)?;
            println!("chart written to {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
