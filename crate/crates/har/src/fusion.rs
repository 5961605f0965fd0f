//! Majority-vote fusion of the three pipelines, class-weight computation and
//! the leave-one-subject-out cross-validation harness.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::cnn::{self, CnnArchitecture, CnnModel, TrainConfig};
use crate::features::{self, FeatureMatrix, ZScoreStats};
use crate::ingest;
use crate::lda_knn::{self, KnnConfig, LdaAxisModel};
use crate::metrics::{self, ClassificationReport, ConfusionMatrix};
use crate::model::{ActivityLabel, LabeledStream, SubjectSplit};
use crate::pool;
use crate::relieff::{self, FeatureRanking, ReliefFConfig};
use crate::seed::mix;
use crate::segment::{self, SegmentTensor, WindowSpec, CHANNELS};
use crate::svm::{self, OneVsAllSvm, SvmConfig};
use crate::{HarError, Result};

/// Everything the three pipelines need, minus dataset plumbing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub window: WindowSpec,
    pub relieff: ReliefFConfig,
    /// features kept after ranking
    pub n_keep: usize,
    pub svm: SvmConfig,
    pub knn: KnnConfig,
    pub cnn: TrainConfig,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            window: WindowSpec::default(),
            relieff: ReliefFConfig::default(),
            n_keep: 40,
            svm: SvmConfig::default(),
            knn: KnnConfig::default(),
            cnn: TrainConfig::default(),
            seed: 42,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.svm.validate()?;
        self.cnn.validate()?;
        if self.n_keep == 0 {
            return Err(HarError::Config("n_keep must be >= 1".into()));
        }
        if self.knn.k == 0 {
            return Err(HarError::Config("knn.k must be >= 1".into()));
        }
        Ok(())
    }
}

/// If two or more of the three votes agree, that label wins; when all three
/// differ the third (CNN) pipeline decides.
pub fn majority_vote(l1: ActivityLabel, l2: ActivityLabel, l3: ActivityLabel) -> ActivityLabel {
    if l1 == l2 || l1 == l3 {
        l1
    } else if l2 == l3 {
        l2
    } else {
        l3
    }
}

/// Balanced inverse-frequency weights: w_c = N / (l_present * N_c), so
/// w_c * N_c is constant across classes.
pub fn compute_class_weights(labels: &[ActivityLabel]) -> Result<BTreeMap<u8, f64>> {
    if labels.is_empty() {
        return Err(HarError::InvalidInput(
            "class weights need >= 1 label".into(),
        ));
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.id()).or_default() += 1;
    }
    let n = labels.len() as f64;
    let l_present = counts.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(id, c)| (id, n / (l_present * c as f64)))
        .collect())
}

/// All train-fitted state of one fold, exposed so leakage checks can compare
/// parameters directly.
pub struct FoldModels {
    pub classes: Vec<ActivityLabel>,
    pub class_weights: BTreeMap<u8, f64>,
    pub zscore: ZScoreStats,
    pub ranking: FeatureRanking,
    pub selected_columns: Vec<usize>,
    pub svm: OneVsAllSvm,
    pub lda: Vec<LdaAxisModel>,
    pub knn_train: FeatureMatrix,
    pub knn_labels: Vec<ActivityLabel>,
    pub cnn: CnnModel,
    pub warnings: Vec<String>,
    pub pipeline1_fit_s: f64,
    pub pipeline2_fit_s: f64,
    pub pipeline3_fit_s: f64,
}

/// Segment one subject's side of a fold: transitional samples dropped, each
/// stream windowed independently so no window straddles streams.
pub fn segment_streams(streams: &[&LabeledStream], window: &WindowSpec) -> Result<SegmentTensor> {
    let mut parts = Vec::with_capacity(streams.len());
    for stream in streams {
        let clean = ingest::drop_transitional(stream);
        parts.push(segment::segment_stream(&clean, window)?);
    }
    Ok(SegmentTensor::concat(&parts))
}

/// Fit all three pipelines on a training tensor. All randomness derives from
/// `fold_seed`, so results are independent of scheduling.
pub fn fit_fold(
    train: &SegmentTensor,
    config: &EnsembleConfig,
    fold_seed: u64,
) -> Result<FoldModels> {
    if train.n_segments == 0 {
        return Err(HarError::Training("fold has no training segments".into()));
    }
    let mut classes: Vec<ActivityLabel> = train.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let class_weights = compute_class_weights(&train.labels)?;

    // pipeline 1: features -> z-score -> ReliefF -> one-vs-all SVM
    let p1_start = Instant::now();
    let raw = features::extract_features(train)?;
    let zscore = features::zscore_fit(&raw)?;
    let normalized = features::zscore_apply(&zscore, &raw)?;
    let relieff_config = ReliefFConfig {
        seed: mix(fold_seed, 1),
        ..config.relieff.clone()
    };
    let ranking = relieff::relieff_rank(&normalized, &train.labels, &relieff_config)?;
    let selected_columns = relieff::select_top(&ranking, config.n_keep.min(normalized.n_cols))?;
    let train_selected = normalized.select_columns(&selected_columns);
    let svm_config = SvmConfig {
        seed: mix(fold_seed, 2),
        ..config.svm.clone()
    };
    let svm = svm::train_one_vs_all(
        &train_selected,
        &train.labels,
        Some(&class_weights),
        &svm_config,
    )?;
    let pipeline1_fit_s = p1_start.elapsed().as_secs_f64();

    // pipeline 2: per-axis LDA -> concat -> KNN reference set
    let p2_start = Instant::now();
    let lda = lda_knn::fit_lda_all_axes(train)?;
    let knn_train = lda_knn::transform_concat(&lda, train)?;
    let pipeline2_fit_s = p2_start.elapsed().as_secs_f64();

    // pipeline 3: per-axis CNN
    let p3_start = Instant::now();
    let arch = CnnArchitecture::standard(train.window_len, CHANNELS, classes.len());
    let cnn_config = TrainConfig {
        seed: mix(fold_seed, 3),
        ..config.cnn.clone()
    };
    let cnn = cnn::train(train, arch, &cnn_config, Some(&class_weights))?;
    let pipeline3_fit_s = p3_start.elapsed().as_secs_f64();

    Ok(FoldModels {
        classes,
        class_weights,
        zscore,
        ranking,
        selected_columns,
        svm,
        lda,
        knn_train,
        knn_labels: train.labels.clone(),
        cnn,
        warnings: Vec::new(),
        pipeline1_fit_s,
        pipeline2_fit_s,
        pipeline3_fit_s,
    })
}

pub struct FoldPredictions {
    pub pipeline1: Vec<ActivityLabel>,
    pub pipeline2: Vec<ActivityLabel>,
    pub pipeline3: Vec<ActivityLabel>,
    pub fused: Vec<ActivityLabel>,
}

pub fn predict_fold(
    models: &FoldModels,
    test: &SegmentTensor,
    config: &EnsembleConfig,
) -> Result<FoldPredictions> {
    if test.n_segments == 0 {
        return Ok(FoldPredictions {
            pipeline1: Vec::new(),
            pipeline2: Vec::new(),
            pipeline3: Vec::new(),
            fused: Vec::new(),
        });
    }
    let raw = features::extract_features(test)?;
    let normalized = features::zscore_apply(&models.zscore, &raw)?;
    let selected = normalized.select_columns(&models.selected_columns);
    let pipeline1 = models.svm.predict(&selected)?;

    let projected = lda_knn::transform_concat(&models.lda, test)?;
    let knn_config = KnnConfig {
        k: config.knn.k.min(models.knn_train.n_rows),
    };
    let pipeline2 = lda_knn::knn_predict(
        &models.knn_train,
        &models.knn_labels,
        &projected,
        &knn_config,
    )?;

    let pipeline3 = cnn::predict(&models.cnn, test)?;

    let fused = pipeline1
        .iter()
        .zip(&pipeline2)
        .zip(&pipeline3)
        .map(|((&a, &b), &c)| majority_vote(a, b, c))
        .collect();
    Ok(FoldPredictions {
        pipeline1,
        pipeline2,
        pipeline3,
        fused,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldTimings {
    pub segmentation_s: f64,
    pub pipeline1_s: f64,
    pub pipeline2_s: f64,
    pub pipeline3_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub test_subject: u32,
    pub truth: Vec<ActivityLabel>,
    pub pipeline1: Vec<ActivityLabel>,
    pub pipeline2: Vec<ActivityLabel>,
    pub pipeline3: Vec<ActivityLabel>,
    pub fused: Vec<ActivityLabel>,
    pub warnings: Vec<String>,
    pub timings: FoldTimings,
}

/// One LOSO fold: segment both sides, fit on train only, predict and fuse on
/// the held-out subject.
pub fn run_fold(
    dataset: &[LabeledStream],
    split: &SubjectSplit,
    config: &EnsembleConfig,
) -> Result<FoldResult> {
    config.validate()?;
    let fold_start = Instant::now();
    let train_streams: Vec<&LabeledStream> = dataset
        .iter()
        .filter(|s| s.subject_id != split.test_subject)
        .collect();
    let test_streams: Vec<&LabeledStream> = dataset
        .iter()
        .filter(|s| s.subject_id == split.test_subject)
        .collect();

    let seg_start = Instant::now();
    let train = segment_streams(&train_streams, &config.window)?;
    let test = segment_streams(&test_streams, &config.window)?;
    let segmentation_s = seg_start.elapsed().as_secs_f64();

    let fold_seed = mix(config.seed, split.test_subject as u64);
    let models = fit_fold(&train, config, fold_seed)?;

    let mut warnings = models.warnings.clone();
    let mut test_classes: Vec<ActivityLabel> = test.labels.clone();
    test_classes.sort_unstable();
    test_classes.dedup();
    for c in &test_classes {
        if !models.classes.contains(c) {
            warnings.push(format!(
                "subject {}: test activity {} absent from training; it can only score false negatives",
                split.test_subject,
                c.name()
            ));
        }
    }

    let predictions = predict_fold(&models, &test, config)?;
    Ok(FoldResult {
        test_subject: split.test_subject,
        truth: test.labels,
        pipeline1: predictions.pipeline1,
        pipeline2: predictions.pipeline2,
        pipeline3: predictions.pipeline3,
        fused: predictions.fused,
        warnings,
        timings: FoldTimings {
            segmentation_s,
            pipeline1_s: models.pipeline1_fit_s,
            pipeline2_s: models.pipeline2_fit_s,
            pipeline3_s: models.pipeline3_fit_s,
            total_s: fold_start.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineScore {
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub classes: Vec<ActivityLabel>,
    pub folds: Vec<FoldResult>,
    pub pipeline1: PipelineScore,
    pub pipeline2: PipelineScore,
    pub pipeline3: PipelineScore,
    pub ensemble: PipelineScore,
    pub n_workers: usize,
    pub total_wall_s: f64,
}

/// Run every LOSO fold on a worker pool, then pool all predictions in
/// subject order and score once per pipeline.
pub fn run_loso(
    dataset: &[LabeledStream],
    config: &EnsembleConfig,
    n_workers: usize,
) -> Result<EvaluationReport> {
    config.validate()?;
    if n_workers == 0 {
        return Err(HarError::Config("n_workers must be >= 1".into()));
    }
    let start = Instant::now();
    let splits = crate::model::split_by_subject(dataset)?;
    let tasks: Vec<_> = splits
        .iter()
        .map(|split| move || run_fold(dataset, split, config))
        .collect();
    let outcomes = pool::run_tasks(n_workers, tasks);

    let mut folds = Vec::with_capacity(outcomes.len());
    for (split, outcome) in splits.iter().zip(outcomes) {
        folds.push(outcome.map_err(|e| HarError::Fold {
            subject: split.test_subject,
            source: Box::new(e),
        })?);
    }
    // splits are subject-ordered, so folds already are; keep the invariant
    // explicit against future scheduling changes
    folds.sort_by_key(|f| f.test_subject);

    let mut classes: Vec<ActivityLabel> = dataset
        .iter()
        .flat_map(|s| s.samples.iter().map(|x| x.label))
        .filter(|l| !l.is_transitional())
        .collect();
    classes.sort_unstable();
    classes.dedup();

    let pooled = |f: &dyn Fn(&FoldResult) -> &Vec<ActivityLabel>| -> Vec<ActivityLabel> {
        folds.iter().flat_map(|fold| f(fold).iter().copied()).collect()
    };
    let truth = pooled(&|f| &f.truth);
    let score = |predictions: Vec<ActivityLabel>| -> Result<PipelineScore> {
        let confusion = metrics::confusion(&truth, &predictions, &classes)?;
        let report = metrics::aggregate(&confusion)?;
        Ok(PipelineScore { confusion, report })
    };
    let pipeline1 = score(pooled(&|f| &f.pipeline1))?;
    let pipeline2 = score(pooled(&|f| &f.pipeline2))?;
    let pipeline3 = score(pooled(&|f| &f.pipeline3))?;
    let ensemble = score(pooled(&|f| &f.fused))?;

    Ok(EvaluationReport {
        classes,
        folds,
        pipeline1,
        pipeline2,
        pipeline3,
        ensemble,
        n_workers,
        total_wall_s: start.elapsed().as_secs_f64(),
    })
}
