//! Shared domain types: activity labels, samples, labeled streams and
//! subject-wise LOSO splitting.

use crate::{HarError, Result};

/// Transitional movements between activities; removed before training.
pub const TRANSITIONAL_ID: u8 = 11;

/// Canonical label vocabulary, ids 1..=10 plus the reserved transitional id.
pub const ACTIVITY_NAMES: [(u8, &str); 11] = [
    (1, "up-stairs"),
    (2, "down-stairs"),
    (3, "walk"),
    (4, "run"),
    (5, "sit"),
    (6, "fall-right"),
    (7, "fall-left"),
    (8, "fall-front"),
    (9, "fall-back"),
    (10, "lie"),
    (TRANSITIONAL_ID, "transitional"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityLabel(u8);

impl ActivityLabel {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=11).contains(&id) {
            Ok(ActivityLabel(id))
        } else {
            Err(HarError::InvalidInput(format!(
                "activity id {id} out of range 1..=11"
            )))
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ACTIVITY_NAMES
            .iter()
            .find(|(_, n)| *n == name)
            .map(|(id, _)| ActivityLabel(*id))
            .ok_or_else(|| HarError::UnknownActivity {
                name: name.to_string(),
                valid: ACTIVITY_NAMES
                    .iter()
                    .map(|(_, n)| *n)
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        ACTIVITY_NAMES
            .iter()
            .find(|(id, _)| *id == self.0)
            .map(|(_, n)| *n)
            .expect("id validated at construction")
    }

    pub fn is_transitional(self) -> bool {
        self.0 == TRANSITIONAL_ID
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub timestamp_ms: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    /// Euclidean norm of (ax, ay, az); recomputed at ingestion.
    pub an: f64,
    pub label: ActivityLabel,
}

/// One participant-trial multivariate time series.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub subject_id: u32,
    pub trial_id: u32,
    pub sample_rate_hz: u32,
    pub samples: Vec<Sample>,
}

impl LabeledStream {
    /// Nominal sample period in milliseconds.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectSplit {
    pub train_subjects: Vec<u32>,
    pub test_subject: u32,
}

/// One LOSO split per distinct subject, ordered by subject id.
pub fn split_by_subject(dataset: &[LabeledStream]) -> Result<Vec<SubjectSplit>> {
    let mut subjects: Vec<u32> = dataset.iter().map(|s| s.subject_id).collect();
    subjects.sort_unstable();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(HarError::TooFewSubjects);
    }
    Ok(subjects
        .iter()
        .map(|&test| SubjectSplit {
            train_subjects: subjects.iter().copied().filter(|&s| s != test).collect(),
            test_subject: test,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamValidation {
    pub violations: Vec<String>,
}

impl StreamValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Diagnostic check of the stream invariants; never fails, reports findings.
pub fn validate_stream(stream: &LabeledStream) -> StreamValidation {
    let mut violations = Vec::new();
    if stream.sample_rate_hz == 0 {
        violations.push("sample_rate_hz must be positive".to_string());
    }
    for (i, pair) in stream.samples.windows(2).enumerate() {
        if pair[1].timestamp_ms <= pair[0].timestamp_ms {
            violations.push(format!(
                "non-monotonic timestamp at sample {}: {} -> {}",
                i + 1,
                pair[0].timestamp_ms,
                pair[1].timestamp_ms
            ));
        }
    }
    for (i, s) in stream.samples.iter().enumerate() {
        let expected = (s.ax * s.ax + s.ay * s.ay + s.az * s.az).sqrt();
        if (s.an - expected).abs() > 1e-9 * expected.max(1.0) {
            violations.push(format!(
                "norm mismatch at sample {i}: an={} expected {expected}",
                s.an
            ));
        }
        if s.label.is_transitional() {
            violations.push(format!("transitional label after filtering at sample {i}"));
        }
    }
    StreamValidation { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(ts: i64, ax: f64, ay: f64, az: f64, label: u8) -> Sample {
        Sample {
            timestamp_ms: ts,
            ax,
            ay,
            az,
            an: (ax * ax + ay * ay + az * az).sqrt(),
            label: ActivityLabel::new(label).unwrap(),
        }
    }

    fn stream(subject: u32, samples: Vec<Sample>) -> LabeledStream {
        LabeledStream {
            subject_id: subject,
            trial_id: 1,
            sample_rate_hz: 64,
            samples,
        }
    }

    #[test]
    fn split_three_subjects() {
        let ds: Vec<_> = [1, 2, 3]
            .iter()
            .map(|&s| stream(s, vec![sample(0, 0.0, 0.0, 1.0, 3)]))
            .collect();
        let splits = split_by_subject(&ds).unwrap();
        assert_eq!(splits.len(), 3);
        assert_eq!(splits[1].test_subject, 2);
        assert_eq!(splits[1].train_subjects, vec![1, 3]);
        // partition: every subject is test exactly once
        let tests: Vec<u32> = splits.iter().map(|s| s.test_subject).collect();
        assert_eq!(tests, vec![1, 2, 3]);
    }

    #[test]
    fn split_44_subjects_gives_44_folds() {
        let ds: Vec<_> = (1..=44)
            .map(|s| stream(s, vec![sample(0, 0.0, 0.0, 1.0, 3)]))
            .collect();
        assert_eq!(split_by_subject(&ds).unwrap().len(), 44);
    }

    #[test]
    fn split_single_subject_errors() {
        let ds = vec![stream(7, vec![sample(0, 0.0, 0.0, 1.0, 3)])];
        assert!(matches!(
            split_by_subject(&ds),
            Err(HarError::TooFewSubjects)
        ));
    }

    #[test]
    fn split_noncontiguous_subject_ids() {
        let ds: Vec<_> = [3, 9, 40]
            .iter()
            .map(|&s| stream(s, vec![sample(0, 0.0, 0.0, 1.0, 3)]))
            .collect();
        let splits = split_by_subject(&ds).unwrap();
        let tests: Vec<u32> = splits.iter().map(|s| s.test_subject).collect();
        assert_eq!(tests, vec![3, 9, 40]);
    }

    #[test]
    fn validate_well_formed() {
        let s = stream(1, vec![sample(0, 1.0, 2.0, 2.0, 3), sample(16, 0.0, 0.0, 0.0, 3)]);
        assert!(validate_stream(&s).is_ok());
    }

    #[test]
    fn validate_norm_mismatch() {
        let mut s = stream(1, vec![sample(0, 1.0, 0.0, 0.0, 3)]);
        s.samples[0].an = 0.0;
        let v = validate_stream(&s);
        assert!(v.violations.iter().any(|m| m.contains("norm mismatch")));
    }

    #[test]
    fn validate_transitional_label() {
        let s = stream(1, vec![sample(0, 0.0, 0.0, 0.0, 11)]);
        let v = validate_stream(&s);
        assert!(v
            .violations
            .iter()
            .any(|m| m.contains("transitional label")));
    }

    #[test]
    fn validate_non_monotonic() {
        let s = stream(1, vec![sample(10, 0.0, 0.0, 0.0, 3), sample(10, 0.0, 0.0, 0.0, 3)]);
        assert!(!validate_stream(&s).is_ok());
    }

    #[test]
    fn unknown_activity_name() {
        assert!(matches!(
            ActivityLabel::from_name("jumping"),
            Err(HarError::UnknownActivity { .. })
        ));
    }
}
