//! Confusion matrix, per-class precision/recall/F1 and the macro, micro and
//! weighted aggregates, plus the CSV report writers.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::model::ActivityLabel;
use crate::{HarError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<ActivityLabel>,
    /// row = actual class, column = predicted class, row-major
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.classes.len() + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.count(i, i)).sum()
    }

    /// Row sum: number of segments whose true label is class i.
    pub fn support(&self, i: usize) -> u64 {
        (0..self.classes.len()).map(|j| self.count(i, j)).sum()
    }

    /// Column sum: number of segments predicted as class i.
    pub fn predicted_total(&self, i: usize) -> u64 {
        (0..self.classes.len()).map(|j| self.count(j, i)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }
}

/// Build an l x l confusion matrix over a fixed class axis. Classes absent
/// from both label lists keep zero rows and columns.
pub fn confusion(
    actual: &[ActivityLabel],
    predicted: &[ActivityLabel],
    classes: &[ActivityLabel],
) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(HarError::InvalidInput(format!(
            "confusion: {} actual vs {} predicted labels",
            actual.len(),
            predicted.len()
        )));
    }
    let index_of = |label: &ActivityLabel| -> Result<usize> {
        classes.iter().position(|c| c == label).ok_or_else(|| {
            HarError::InvalidInput(format!("confusion: label {} not in class axis", label.name()))
        })
    };
    let l = classes.len();
    let mut counts = vec![0u64; l * l];
    for (a, p) in actual.iter().zip(predicted) {
        counts[index_of(a)? * l + index_of(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); each is 0 when its
/// denominator is 0.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes.len())
        .map(|i| {
            let tp = cm.count(i, i) as f64;
            let predicted = cm.predicted_total(i) as f64;
            let support = cm.support(i);
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if support > 0 { tp / support as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub classes: Vec<ActivityLabel>,
    pub per_class: Vec<ClassMetrics>,
    /// unweighted means over classes present; f1 = mean of per-class F1
    pub macro_avg: Aggregate,
    /// harmonic mean of macro precision and macro recall, the alternative
    /// macro-F1 reading; shown as a footnote, not in the table body
    pub macro_f1_harmonic: f64,
    /// pooled TP/FP/FN; equals accuracy in single-label multiclass scoring
    pub micro_avg: Aggregate,
    /// support-weighted means
    pub weighted_avg: Aggregate,
    pub total_support: u64,
    pub accuracy: f64,
}

/// Aggregate a confusion matrix. Classes absent from both truth and
/// prediction are excluded from the macro means.
pub fn aggregate(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(HarError::InvalidInput("aggregate: zero scored segments".into()));
    }
    let per_class = per_class_metrics(cm);
    let present: Vec<usize> = (0..cm.classes.len())
        .filter(|&i| cm.support(i) > 0 || cm.predicted_total(i) > 0)
        .collect();
    let k = present.len() as f64;
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| {
        present.iter().map(|&i| f(&per_class[i])).sum::<f64>() / k
    };
    let macro_avg = Aggregate {
        precision: mean(&|m| m.precision),
        recall: mean(&|m| m.recall),
        f1: mean(&|m| m.f1),
    };
    let macro_f1_harmonic = if macro_avg.precision + macro_avg.recall > 0.0 {
        2.0 * macro_avg.precision * macro_avg.recall / (macro_avg.precision + macro_avg.recall)
    } else {
        0.0
    };
    // single-label multiclass: pooled FP total = pooled FN total = total - trace
    let accuracy = cm.accuracy();
    let micro_avg = Aggregate {
        precision: accuracy,
        recall: accuracy,
        f1: accuracy,
    };
    let weighted = |f: &dyn Fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| m.support as f64 * f(m))
            .sum::<f64>()
            / total as f64
    };
    let weighted_avg = Aggregate {
        precision: weighted(&|m| m.precision),
        recall: weighted(&|m| m.recall),
        f1: weighted(&|m| m.f1),
    };
    debug_assert!((micro_avg.precision - micro_avg.recall).abs() < 1e-15);
    Ok(ClassificationReport {
        classes: cm.classes.clone(),
        per_class,
        macro_avg,
        macro_f1_harmonic,
        micro_avg,
        weighted_avg,
        total_support: total,
        accuracy,
    })
}

/// Table-shaped report CSV: per-class rows, then macro and weighted average
/// rows; 4-decimal values. The harmonic macro-F1 variant goes in a trailing
/// comment so the table body stays uniform.
pub fn write_report_csv(report: &ClassificationReport, path: &Path) -> Result<()> {
    let mut out = String::from("class,precision,recall,f1-score,support\n");
    for (c, m) in report.classes.iter().zip(&report.per_class) {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            c.name(),
            m.precision,
            m.recall,
            m.f1,
            m.support
        ));
    }
    out.push_str(&format!(
        "macro avg,{:.4},{:.4},{:.4},{}\n",
        report.macro_avg.precision, report.macro_avg.recall, report.macro_avg.f1, report.total_support
    ));
    out.push_str(&format!(
        "weighted avg,{:.4},{:.4},{:.4},{}\n",
        report.weighted_avg.precision,
        report.weighted_avg.recall,
        report.weighted_avg.f1,
        report.total_support
    ));
    out.push_str(&format!(
        "# macro f1 (harmonic of macro precision and recall) = {:.4}\n",
        report.macro_f1_harmonic
    ));
    out.push_str(&format!("# accuracy = {:.4}\n", report.accuracy));
    write_text(path, &out)
}

/// Confusion matrix CSV with class-name header row and column; rows are
/// actual classes, columns predicted.
pub fn write_confusion_csv(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("actual\\predicted");
    for c in &cm.classes {
        out.push(',');
        out.push_str(c.name());
    }
    out.push('\n');
    for (i, c) in cm.classes.iter().enumerate() {
        out.push_str(c.name());
        for j in 0..cm.classes.len() {
            out.push_str(&format!(",{}", cm.count(i, j)));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| HarError::io(path.display().to_string(), e))
}
