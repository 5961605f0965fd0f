//! Run configuration: line-oriented `section.key = value` text files, the
//! standard benchmark preset, and the reproducibility manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cnn::TrainConfig;
use crate::fusion::{EnsembleConfig, EvaluationReport};
use crate::model::ActivityLabel;
use crate::svm::KernelSpec;
use crate::synth::SynthConfig;
use crate::{HarError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// CSV dataset to evaluate; None means synthesize one from `synth`.
    pub dataset_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub n_workers: usize,
    pub synth: SynthConfig,
    pub ensemble: EnsembleConfig,
}

impl RunConfig {
    /// The standard synthetic benchmark: 6 subjects, 3 trials, six
    /// activities, seed 42. Durations and epoch count are sized so a full
    /// LOSO run stays in the minutes range on a small machine.
    pub fn standard_benchmark() -> Self {
        let ids: [u8; 6] = [3, 4, 1, 5, 10, 8]; // walk, run, up-stairs, sit, lie, fall-front
        let activities: Vec<ActivityLabel> =
            ids.iter().map(|&id| ActivityLabel::new(id).unwrap()).collect();
        let seconds_per_activity: BTreeMap<u8, f64> = ids
            .iter()
            .map(|&id| (id, if id == 8 { 1.5 } else { 10.0 }))
            .collect();
        RunConfig {
            dataset_path: None,
            out_dir: PathBuf::from("results"),
            n_workers: 4,
            synth: SynthConfig {
                n_subjects: 6,
                n_trials: 3,
                activities,
                seconds_per_activity,
                sample_rate_hz: 64,
                seed: 42,
                noise_std: 0.05,
                subject_variability: 0.5,
            },
            ensemble: EnsembleConfig {
                cnn: TrainConfig {
                    epochs: 12,
                    ..TrainConfig::default()
                },
                ..EnsembleConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        self.synth.validate()?;
        if self.n_workers == 0 {
            return Err(HarError::Config("run.workers must be >= 1".into()));
        }
        Ok(())
    }
}

fn bool_value(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(HarError::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarError::Config(format!("{key}: bad value {value:?}")))
}

/// Parse configuration text. Unknown keys are errors; missing keys keep the
/// standard-benchmark defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::standard_benchmark();
    let mut seen_activities = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarError::Config(format!("config line {}: expected key = value", idx + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "run.dataset" => {
                config.dataset_path = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "run.out" => config.out_dir = PathBuf::from(value),
            "run.workers" => config.n_workers = parse_num(key, value)?,
            "run.seed" => config.ensemble.seed = parse_num(key, value)?,
            "window.samples" => config.ensemble.window.window_samples = parse_num(key, value)?,
            "window.overlap" => config.ensemble.window.overlap_fraction = parse_num(key, value)?,
            "relieff.n_samples" => {
                config.ensemble.relieff.n_samples = if value == "all" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "relieff.k_neighbors" => {
                config.ensemble.relieff.k_neighbors = parse_num(key, value)?
            }
            "relieff.n_keep" => config.ensemble.n_keep = parse_num(key, value)?,
            "svm.kernel" => {
                config.ensemble.svm.kernel = match value {
                    "linear" => KernelSpec::Linear,
                    "rbf" => KernelSpec::Rbf,
                    _ => {
                        return Err(HarError::Config(format!(
                            "svm.kernel: expected linear or rbf, got {value:?}"
                        )))
                    }
                }
            }
            "svm.c" => config.ensemble.svm.c = parse_num(key, value)?,
            "svm.gamma" => {
                config.ensemble.svm.gamma = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "svm.tol" => config.ensemble.svm.tol = parse_num(key, value)?,
            "svm.max_passes" => config.ensemble.svm.max_passes = parse_num(key, value)?,
            "svm.class_weighting" => {
                config.ensemble.svm.class_weighting = bool_value(key, value)?
            }
            "knn.k" => config.ensemble.knn.k = parse_num(key, value)?,
            "cnn.learning_rate" => config.ensemble.cnn.learning_rate = parse_num(key, value)?,
            "cnn.momentum" => config.ensemble.cnn.momentum = parse_num(key, value)?,
            "cnn.epochs" => config.ensemble.cnn.epochs = parse_num(key, value)?,
            "cnn.batch_size" => config.ensemble.cnn.batch_size = parse_num(key, value)?,
            "cnn.class_weighting" => {
                config.ensemble.cnn.class_weighting = bool_value(key, value)?
            }
            "synth.subjects" => config.synth.n_subjects = parse_num(key, value)?,
            "synth.trials" => config.synth.n_trials = parse_num(key, value)?,
            "synth.sample_rate" => config.synth.sample_rate_hz = parse_num(key, value)?,
            "synth.seed" => config.synth.seed = parse_num(key, value)?,
            "synth.noise_std" => config.synth.noise_std = parse_num(key, value)?,
            "synth.variability" => config.synth.subject_variability = parse_num(key, value)?,
            "synth.activities" => {
                let mut activities = Vec::new();
                for name in value.split(',') {
                    activities.push(ActivityLabel::from_name(name.trim())?);
                }
                config.synth.activities = activities;
                if !seen_activities {
                    // replace the preset duration table; explicit
                    // synth.seconds.* lines refill it
                    config.synth.seconds_per_activity.clear();
                    seen_activities = true;
                }
            }
            _ if key.starts_with("synth.seconds.") => {
                let name = &key["synth.seconds.".len()..];
                let activity = ActivityLabel::from_name(name)?;
                config
                    .synth
                    .seconds_per_activity
                    .insert(activity.id(), parse_num(key, value)?);
            }
            _ => {
                return Err(HarError::Config(format!(
                    "config line {}: unknown key {key:?}",
                    idx + 1
                )))
            }
        }
    }
    // activities without explicit durations fall back to the preset values
    if seen_activities {
        for a in config.synth.activities.clone() {
            config
                .synth
                .seconds_per_activity
                .entry(a.id())
                .or_insert(if a.id() >= 6 && a.id() <= 9 { 1.5 } else { 10.0 });
        }
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| HarError::io(path.display().to_string(), e))?;
    parse_config(&text)
}

/// Serialize every setting; `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(config: &RunConfig) -> String {
    let mut out = String::new();
    let e = &config.ensemble;
    let _ = writeln!(
        out,
        "run.dataset = {}",
        config
            .dataset_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    );
    let _ = writeln!(out, "run.out = {}", config.out_dir.display());
    let _ = writeln!(out, "run.workers = {}", config.n_workers);
    let _ = writeln!(out, "run.seed = {}", e.seed);
    let _ = writeln!(out, "window.samples = {}", e.window.window_samples);
    let _ = writeln!(out, "window.overlap = {}", e.window.overlap_fraction);
    let _ = writeln!(
        out,
        "relieff.n_samples = {}",
        e.relieff
            .n_samples
            .map(|n| n.to_string())
            .unwrap_or_else(|| "all".into())
    );
    let _ = writeln!(out, "relieff.k_neighbors = {}", e.relieff.k_neighbors);
    let _ = writeln!(out, "relieff.n_keep = {}", e.n_keep);
    let _ = writeln!(
        out,
        "svm.kernel = {}",
        match e.svm.kernel {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf => "rbf",
        }
    );
    let _ = writeln!(out, "svm.c = {}", e.svm.c);
    let _ = writeln!(
        out,
        "svm.gamma = {}",
        e.svm
            .gamma
            .map(|g| g.to_string())
            .unwrap_or_else(|| "auto".into())
    );
    let _ = writeln!(out, "svm.tol = {}", e.svm.tol);
    let _ = writeln!(out, "svm.max_passes = {}", e.svm.max_passes);
    let _ = writeln!(out, "svm.class_weighting = {}", e.svm.class_weighting);
    let _ = writeln!(out, "knn.k = {}", e.knn.k);
    let _ = writeln!(out, "cnn.learning_rate = {}", e.cnn.learning_rate);
    let _ = writeln!(out, "cnn.momentum = {}", e.cnn.momentum);
    let _ = writeln!(out, "cnn.epochs = {}", e.cnn.epochs);
    let _ = writeln!(out, "cnn.batch_size = {}", e.cnn.batch_size);
    let _ = writeln!(out, "cnn.class_weighting = {}", e.cnn.class_weighting);
    let _ = writeln!(out, "synth.subjects = {}", config.synth.n_subjects);
    let _ = writeln!(out, "synth.trials = {}", config.synth.n_trials);
    let _ = writeln!(out, "synth.sample_rate = {}", config.synth.sample_rate_hz);
    let _ = writeln!(out, "synth.seed = {}", config.synth.seed);
    let _ = writeln!(out, "synth.noise_std = {}", config.synth.noise_std);
    let _ = writeln!(
        out,
        "synth.variability = {}",
        config.synth.subject_variability
    );
    let names: Vec<&str> = config.synth.activities.iter().map(|a| a.name()).collect();
    let _ = writeln!(out, "synth.activities = {}", names.join(","));
    for (&id, &secs) in &config.synth.seconds_per_activity {
        if let Ok(a) = ActivityLabel::new(id) {
            let _ = writeln!(out, "synth.seconds.{} = {}", a.name(), secs);
        }
    }
    out
}

/// Reproducibility manifest: full configuration plus the timing summary of
/// the run that produced the reports next to it.
pub fn write_manifest(
    config: &RunConfig,
    report: &EvaluationReport,
    path: &Path,
) -> Result<()> {
    let mut out = serialize_config(config);
    let _ = writeln!(out, "timing.workers = {}", report.n_workers);
    let _ = writeln!(out, "timing.total_wall_s = {:.3}", report.total_wall_s);
    let sequential: f64 = report.folds.iter().map(|f| f.timings.total_s).sum();
    let _ = writeln!(out, "timing.sequential_equivalent_s = {sequential:.3}");
    for fold in &report.folds {
        let _ = writeln!(
            out,
            "timing.fold_{}_s = {:.3}",
            fold.test_subject, fold.timings.total_s
        );
    }
    for fold in &report.folds {
        for warning in &fold.warnings {
            let _ = writeln!(out, "# warning: {warning}");
        }
    }
    fs::write(path, out).map_err(|e| HarError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_preset_is_valid() {
        let config = RunConfig::standard_benchmark();
        config.validate().unwrap();
        assert_eq!(config.synth.n_subjects, 6);
        assert_eq!(config.synth.n_trials, 3);
        assert_eq!(config.synth.activities.len(), 6);
        assert_eq!(config.ensemble.seed, 42);
    }

    #[test]
    fn round_trip_of_benchmark_preset() {
        let config = RunConfig::standard_benchmark();
        let parsed = parse_config(&serialize_config(&config)).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn round_trip_of_modified_config() {
        let mut config = RunConfig::standard_benchmark();
        config.dataset_path = Some(PathBuf::from("data/run.csv"));
        config.n_workers = 2;
        config.ensemble.seed = 7;
        config.ensemble.svm.kernel = KernelSpec::Rbf;
        config.ensemble.svm.gamma = Some(0.25);
        config.ensemble.relieff.n_samples = Some(30);
        config.ensemble.cnn.epochs = 3;
        config.synth.activities = vec![
            ActivityLabel::from_name("walk").unwrap(),
            ActivityLabel::from_name("fall-back").unwrap(),
        ];
        config.synth.seconds_per_activity = [(3u8, 8.0), (9u8, 2.0)].into_iter().collect();
        let parsed = parse_config(&serialize_config(&config)).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let parsed = parse_config("run.seed = 9\ncnn.epochs = 2\n\n# comment\n").unwrap();
        assert_eq!(parsed.ensemble.seed, 9);
        assert_eq!(parsed.ensemble.cnn.epochs, 2);
        assert_eq!(parsed.n_workers, 4);
        assert_eq!(parsed.synth.n_subjects, 6);
    }

    #[test]
    fn activity_list_resets_duration_table() {
        let parsed = parse_config("synth.activities = walk,run\n").unwrap();
        assert_eq!(parsed.synth.activities.len(), 2);
        assert_eq!(
            parsed.synth.seconds_per_activity.keys().copied().collect::<Vec<u8>>(),
            vec![3, 4]
        );
        parsed.validate().unwrap();
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(parse_config("nonsense").is_err());
        assert!(parse_config("unknown.key = 1").is_err());
        assert!(parse_config("svm.kernel = cubic").is_err());
        assert!(parse_config("cnn.epochs = many").is_err());
        assert!(parse_config("synth.activities = walk,flying").is_err());
        assert!(parse_config("svm.class_weighting = yes").is_err());
    }
}
