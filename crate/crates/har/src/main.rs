//! Command-line entry point: dataset synthesis, LOSO evaluation, report
//! summarization and dataset linting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use har::config::{self, RunConfig};
use har::fusion::{self, EvaluationReport};
use har::ingest;
use har::metrics;
use har::model::{self, LabeledStream};
use har::synth;
use har::HarError;

#[derive(Parser)]
#[command(name = "har", about = "Ensemble activity recognition on accelerometer data", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset CSV
    Synth {
        /// configuration file (section.key = value)
        #[arg(long)]
        config: Option<PathBuf>,
        /// override the global seed
        #[arg(long)]
        seed: Option<u64>,
        /// output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full LOSO evaluation and write reports
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// override the worker-pool size
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// override the output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the reports in a results directory
    Report {
        /// directory containing the report CSV files
        dir: PathBuf,
    },
    /// Lint a dataset CSV: timestamps, norm consistency, label range
    Validate {
        dataset: PathBuf,
    },
}

/// 2 for bad input or usage, 1 for internal failures.
fn exit_code(err: &HarError) -> u8 {
    match err {
        HarError::Training(_) | HarError::Fold { .. } => 1,
        _ => 2,
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, HarError> {
    match path {
        Some(p) => config::load_config(p),
        None => Ok(RunConfig::standard_benchmark()),
    }
}

fn cmd_synth(config: RunConfig, out: &Path) -> Result<(), HarError> {
    config.synth.validate()?;
    let dataset = synth::generate_dataset(&config.synth)?;
    ingest::write_dataset(&dataset, out)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for stream in &dataset {
        for sample in &stream.samples {
            *counts.entry(sample.label.name()).or_default() += 1;
            total += 1;
        }
    }
    println!("wrote {} samples to {}", total, out.display());
    println!("samples per class:");
    for (name, count) in counts {
        println!("  {name}: {count}");
    }
    Ok(())
}

fn obtain_dataset(config: &RunConfig) -> Result<Vec<LabeledStream>, HarError> {
    match &config.dataset_path {
        Some(path) => ingest::parse_dataset(path),
        None => synth::generate_dataset(&config.synth),
    }
}

const PIPELINES: [&str; 4] = ["pipeline1", "pipeline2", "pipeline3", "ensemble"];

fn write_outputs(
    config: &RunConfig,
    report: &EvaluationReport,
    out_dir: &Path,
) -> Result<(), HarError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| HarError::io(out_dir.display().to_string(), e))?;
    let scores = [
        &report.pipeline1,
        &report.pipeline2,
        &report.pipeline3,
        &report.ensemble,
    ];
    for (name, score) in PIPELINES.iter().zip(scores) {
        metrics::write_report_csv(&score.report, &out_dir.join(format!("report_{name}.csv")))?;
        metrics::write_confusion_csv(
            &score.confusion,
            &out_dir.join(format!("confusion_{name}.csv")),
        )?;
    }
    config::write_manifest(config, report, &out_dir.join("manifest.txt"))?;
    Ok(())
}

fn cmd_run(config: RunConfig) -> Result<(), HarError> {
    config.validate()?;
    let dataset = obtain_dataset(&config)?;
    let report = fusion::run_loso(&dataset, &config.ensemble, config.n_workers)?;
    write_outputs(&config, &report, &config.out_dir)?;

    let sequential: f64 = report.folds.iter().map(|f| f.timings.total_s).sum();
    println!("LOSO evaluation: {} folds, {} workers", report.folds.len(), report.n_workers);
    println!("wall-clock {:.1}s (sequential-equivalent {sequential:.1}s)", report.total_wall_s);
    let scores = [
        &report.pipeline1,
        &report.pipeline2,
        &report.pipeline3,
        &report.ensemble,
    ];
    for (name, score) in PIPELINES.iter().zip(scores) {
        println!(
            "{name}: weighted F1 {:.4}, accuracy {:.4}",
            score.report.weighted_avg.f1, score.report.accuracy
        );
    }
    for fold in &report.folds {
        for warning in &fold.warnings {
            eprintln!("warning: {warning}");
        }
    }
    println!("reports written to {}", config.out_dir.display());
    Ok(())
}

/// The `weighted avg` row of one report CSV: (precision, recall, f1).
fn read_weighted_row(path: &Path) -> Result<(f64, f64, f64), HarError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarError::io(path.display().to_string(), e))?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("weighted avg,") {
            let fields: Vec<&str> = rest.split(',').collect();
            if fields.len() >= 3 {
                let parse = |s: &str| {
                    s.parse::<f64>().map_err(|_| {
                        HarError::InvalidInput(format!("bad value {s:?} in {}", path.display()))
                    })
                };
                return Ok((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            }
        }
    }
    Err(HarError::InvalidInput(format!(
        "no weighted avg row in {}",
        path.display()
    )))
}

fn cmd_report(dir: &Path) -> Result<(), HarError> {
    let missing: Vec<&str> = PIPELINES
        .iter()
        .copied()
        .filter(|name| !dir.join(format!("report_{name}.csv")).exists())
        .collect();
    if !missing.is_empty() {
        return Err(HarError::InvalidInput(format!(
            "missing: {}",
            missing.join(", ")
        )));
    }
    println!("{:<10} {:>9} {:>9} {:>9}", "pipeline", "precision", "recall", "f1");
    let mut rows = Vec::new();
    for name in PIPELINES {
        let (p, r, f1) = read_weighted_row(&dir.join(format!("report_{name}.csv")))?;
        println!("{name:<10} {p:>9.4} {r:>9.4} {f1:>9.4}");
        rows.push(f1);
    }
    let best_individual = rows[..3].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let delta = rows[3] - best_individual;
    println!("ensemble vs best individual: {delta:+.4}");
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), HarError> {
    let streams = ingest::parse_dataset(path)?;
    let mut total_violations = 0usize;
    for stream in &streams {
        let validation = model::validate_stream(stream);
        for v in &validation.violations {
            println!(
                "subject {} trial {}: {v}",
                stream.subject_id, stream.trial_id
            );
            total_violations += 1;
        }
    }
    if total_violations > 0 {
        return Err(HarError::InvalidInput(format!(
            "{total_violations} violations in {}",
            path.display()
        )));
    }
    println!(
        "{}: {} streams, all invariants hold",
        path.display(),
        streams.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config, seed, out } => load_config(&config).and_then(|mut c| {
            if let Some(s) = seed {
                c.synth.seed = s;
                c.ensemble.seed = s;
            }
            cmd_synth(c, &out)
        }),
        Command::Run {
            config,
            workers,
            seed,
            out,
        } => load_config(&config).and_then(|mut c| {
            if let Some(w) = workers {
                c.n_workers = w;
            }
            if let Some(s) = seed {
                c.synth.seed = s;
                c.ensemble.seed = s;
            }
            if let Some(o) = out {
                c.out_dir = o;
            }
            cmd_run(c)
        }),
        Command::Report { dir } => cmd_report(&dir),
        Command::Validate { dataset } => cmd_validate(&dataset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
