use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use driftrack::bench::{
    ablation_to_csv, entropy_trace_csv, report_to_csv, run_ablation, run_experiment,
    ExperimentConfig,
};
use driftrack::simulator::{gen_stream, suite_entry, write_stream_jsonl, StreamConfig};
use driftrack::tracker::ReplacementKind;
use driftrack::Error;

#[derive(Parser)]
#[command(
    name = "driftrack",
    about = "Benchmark change-detection-gated online tracking on synthetic drift streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a suite entry's frame stream as JSON lines.
    Simulate {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment from a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the full policy x replacement ablation on a suite entry.
    Ablate {
        #[arg(long, default_value = "recurrent5")]
        suite: String,
        /// Optional base config; suite and seeds flags still apply on top.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Trace the auxiliary buffer's entropy over one experiment.
    EntropyTrace {
        #[arg(long, default_value = "recurrent5")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, value_enum, default_value_t = ReplacementArg::ScoreDiscretized)]
        replacement: ReplacementArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ReplacementArg {
    Off,
    Random,
    Density,
    ScoreDiscretized,
}

impl From<ReplacementArg> for ReplacementKind {
    fn from(value: ReplacementArg) -> Self {
        match value {
            ReplacementArg::Off => ReplacementKind::Off,
            ReplacementArg::Random => ReplacementKind::Random,
            ReplacementArg::Density => ReplacementKind::Density,
            ReplacementArg::ScoreDiscretized => ReplacementKind::ScoreDiscretized,
        }
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn write_output(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io {
        path: "<json>".into(),
        reason: e.to_string(),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { suite, seed, out } => {
            let entry = suite_entry(&suite)?;
            let stream = StreamConfig { seed, ..entry.stream };
            let (frames, _) = gen_stream(&entry.schedule, &stream)?;
            let mut buf = Vec::new();
            write_stream_jsonl(&frames, &mut buf)?;
            let text = String::from_utf8(buf).expect("jsonl is always utf-8");
            write_output(&out, &text)?;
            eprintln!("wrote {} frames to {}", frames.len(), out.display());
        }
        Command::Run { config, out, format } => {
            let cfg = read_config(&config)?;
            let report = run_experiment(&cfg)?;
            let text = match format {
                Format::Json => to_json(&report)?,
                Format::Csv => report_to_csv(&report),
            };
            match out {
                Some(path) => {
                    write_output(&path, &text)?;
                    eprintln!(
                        "suite {} policy {}: accuracy {:.4} -> {}",
                        report.suite,
                        report.update_policy,
                        report.aggregate.accuracy.mean,
                        path.display()
                    );
                }
                None => println!("{text}"),
            }
        }
        Command::Ablate { suite, config, seeds, out, format } => {
            let mut cfg = match config {
                Some(path) => read_config(&path)?,
                None => ExperimentConfig::default(),
            };
            cfg.suite = suite;
            cfg = cfg.with_seed_count(seeds);
            let table = run_ablation(&cfg)?;
            let text = match format {
                Format::Csv => ablation_to_csv(&table),
                Format::Json => to_json(&table)?,
            };
            write_output(&out, &text)?;
            eprintln!(
                "ablation on {}: {} cells -> {}",
                table.suite,
                table.cells.len(),
                out.display()
            );
        }
        Command::EntropyTrace { suite, seeds, replacement, out } => {
            let mut cfg = ExperimentConfig {
                suite,
                ..ExperimentConfig::default()
            }
            .with_seed_count(seeds);
            cfg.tracker.replacement = replacement.into();
            let report = run_experiment(&cfg)?;
            write_output(&out, &entropy_trace_csv(&report))?;
            eprintln!("entropy trace -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
