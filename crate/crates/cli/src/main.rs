use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rydopt::config::RunConfig;
use rydopt::records::parse_genomes;
use rydopt::runner::{self, RunOptions, RunStatus, RunSummary};

#[derive(Parser)]
#[command(name = "rydopt", version, about = "Noise-resilient pi-pulse design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a config file describes.
    Run {
        config: PathBuf,
        /// Write results here instead of `run.output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Stop with a checkpoint after this generation.
        #[arg(long)]
        halt_after: Option<usize>,
    },
    /// Continue a run from its checkpoint file.
    Resume {
        checkpoint: PathBuf,
        /// Refuse to resume unless this config matches the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        halt_after: Option<usize>,
    },
    /// Evaluate genomes read from a file (one per line) under a config's
    /// noise and budget; prints the evaluation CSV.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        genome: PathBuf,
        /// Also write the CSV here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plot one or more front CSV files into an SVG.
    Plot {
        #[arg(required = true)]
        fronts: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write sampled noise realizations to CSV.
    NoiseDump {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        realizations: usize,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        /// Time span; defaults to `duration.max`.
        #[arg(long)]
        duration: Option<f64>,
    },
}

fn report(summary: &RunSummary) {
    match summary.status {
        RunStatus::Halted => println!(
            "halted after generation {}; resume with `rydopt resume {}`",
            summary.generation,
            summary.output_dir.join(runner::CHECKPOINT_FILE).display()
        ),
        RunStatus::Completed => {
            println!(
                "completed {} generations in {}",
                summary.generation,
                summary.output_dir.display()
            );
            if let Some(best) = summary.front.iter().map(|r| r.infidelity).reduce(f64::min) {
                println!("front: {} points, lowest F {best:.6e}", summary.front.len());
            }
            if let Some(best) = &summary.best {
                println!(
                    "incumbent F {:.6e} ± {:.1e} ({} evaluations)",
                    best.value, best.stderr, best.evaluations
                );
            }
            for r in &summary.evaluations {
                let g = r.rydberg_time.map_or(f64::NAN, |g| g.0);
                println!("candidate {}: F {:.6e} ± {:.1e}, G {g:.6}", r.index, r.infidelity, r.infidelity_stderr);
            }
        }
    }
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output_dir,
            halt_after,
        } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = output_dir {
                cfg.run.output_dir = dir;
            }
            let summary = runner::run_experiment(&cfg, &RunOptions { halt_after })?;
            report(&summary);
        }
        Command::Resume {
            checkpoint,
            config,
            halt_after,
        } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let summary = runner::resume(&checkpoint, cfg.as_ref(), &RunOptions { halt_after })?;
            report(&summary);
        }
        Command::Evaluate {
            config,
            genome,
            output,
        } => {
            let cfg = load(&config)?;
            let text = std::fs::read_to_string(&genome)
                .with_context(|| format!("reading {}", genome.display()))?;
            let genomes = parse_genomes(&text)?;
            let records = runner::evaluate_genomes(&cfg, &genomes)?;
            let mut buf = Vec::new();
            runner::write_evaluations_to(&mut buf, cfg.dynamics.slice_count, &records)?;
            std::io::stdout().write_all(&buf)?;
            if let Some(path) = output {
                std::fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Plot { fronts, output } => {
            let inputs: Vec<&Path> = fronts.iter().map(PathBuf::as_path).collect();
            rydopt::plot::plot_fronts(&inputs, &output)?;
        }
        Command::NoiseDump {
            config,
            output,
            realizations,
            samples,
            duration,
        } => {
            let cfg = load(&config)?;
            if realizations == 0 {
                bail!("--realizations must be at least 1");
            }
            let file = std::fs::File::create(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            runner::noise_dump(
                &cfg,
                realizations,
                samples,
                duration.unwrap_or(cfg.duration.max),
                std::io::BufWriter::new(file),
            )?;
        }
    }
    Ok(())
}
