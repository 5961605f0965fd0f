//! Pipeline-1 feature engineering: per-channel time/frequency metrics,
//! pairwise cross-correlations and train-fitted z-score normalization.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::fft::fft_real;
use crate::segment::{SegmentTensor, CHANNELS};
use crate::{HarError, Result};

pub const CHANNEL_NAMES: [&str; CHANNELS] = ["ax", "ay", "az", "an"];
const METRIC_NAMES: [&str; 12] = [
    "mean",
    "variance",
    "std",
    "max",
    "min",
    "rms",
    "excess_kurtosis",
    "skewness",
    "l2_norm",
    "l1_norm",
    "fft_energy",
    "fft_max_magnitude",
];
const CORRELATION_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// 12 metrics x 4 channels + 6 pairwise correlations.
pub const FEATURE_COUNT: usize = 54;

/// Row-major K x d matrix with a frozen column-order contract.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize, column_names: Vec<String>) -> Self {
        assert_eq!(column_names.len(), n_cols);
        FeatureMatrix {
            values: Vec::new(),
            n_rows: 0,
            n_cols,
            column_names,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols);
        self.values.extend_from_slice(row);
        self.n_rows += 1;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        let names = columns
            .iter()
            .map(|&c| self.column_names[c].clone())
            .collect();
        let mut out = FeatureMatrix::new(columns.len(), names);
        for i in 0..self.n_rows {
            let row = self.row(i);
            let selected: Vec<f64> = columns.iter().map(|&c| row[c]).collect();
            out.push_row(&selected);
        }
        out
    }

    /// Debugging CSV dump with the column names as header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.column_names.join(","));
        out.push('\n');
        for i in 0..self.n_rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| HarError::io(path.display().to_string(), e))
    }
}

/// The frozen 54-column name contract.
pub fn default_column_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for ch in CHANNEL_NAMES {
        for metric in METRIC_NAMES {
            names.push(format!("{ch}_{metric}"));
        }
    }
    for (a, b) in CORRELATION_PAIRS {
        names.push(format!("corr_{}_{}", CHANNEL_NAMES[a], CHANNEL_NAMES[b]));
    }
    names
}

/// Time-domain metrics of one window, population moments throughout:
/// mean, variance, std, max, min, rms, excess kurtosis, skewness, l2, l1.
pub fn time_features(window: &[f64]) -> Result<[f64; 10]> {
    let t = window.len();
    if t < 2 {
        return Err(HarError::InvalidInput(format!(
            "time_features needs >= 2 samples, got {t}"
        )));
    }
    let n = t as f64;
    let mean = window.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in window {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / (std * std * std), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    let sum_sq: f64 = window.iter().map(|x| x * x).sum();
    let rms = (sum_sq / n).sqrt();
    let l2 = sum_sq.sqrt();
    let l1 = window.iter().map(|x| x.abs()).sum();
    Ok([mean, m2, std, max, min, rms, kurtosis, skewness, l2, l1])
}

/// FFT energy (DC excluded, normalized by 1/T) and one-sided maximum
/// magnitude (bins 1..=T/2). Requires a power-of-two window.
pub fn fft_features(window: &[f64]) -> Result<(f64, f64)> {
    let spectrum = fft_real(window)?;
    let t = window.len();
    let energy = spectrum[1..].iter().map(|c| c.norm_sqr()).sum::<f64>() / t as f64;
    let max_magnitude = spectrum[1..=t / 2]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    Ok((energy, max_magnitude))
}

/// Lag-0 Pearson correlation; 0 by convention if either input is constant.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(HarError::InvalidInput(format!(
            "cross_correlation length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(HarError::InvalidInput(
            "cross_correlation needs >= 2 samples".into(),
        ));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// Extract the full 54-column matrix from a segment tensor.
pub fn extract_features(tensor: &SegmentTensor) -> Result<FeatureMatrix> {
    let mut matrix = FeatureMatrix::new(FEATURE_COUNT, default_column_names());
    let mut row = Vec::with_capacity(FEATURE_COUNT);
    for seg in 0..tensor.n_segments {
        row.clear();
        let channels: Vec<Vec<f64>> = (0..CHANNELS).map(|c| tensor.channel(seg, c)).collect();
        for channel in &channels {
            row.extend_from_slice(&time_features(channel)?);
            let (energy, max_mag) = fft_features(channel)?;
            row.push(energy);
            row.push(max_mag);
        }
        for (a, b) in CORRELATION_PAIRS {
            row.push(cross_correlation(&channels[a], &channels[b])?);
        }
        matrix.push_row(&row);
    }
    Ok(matrix)
}

/// Per-column standardization statistics, fitted on training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn zscore_fit(train: &FeatureMatrix) -> Result<ZScoreStats> {
    if train.n_rows < 2 {
        return Err(HarError::InvalidInput(
            "z-score fit needs >= 2 rows".into(),
        ));
    }
    let n = train.n_rows as f64;
    let d = train.n_cols;
    let mut means = vec![0.0; d];
    for i in 0..train.n_rows {
        for (m, &v) in means.iter_mut().zip(train.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; d];
    for i in 0..train.n_rows {
        for ((v, &x), &m) in vars.iter_mut().zip(train.row(i)).zip(&means) {
            *v += (x - m) * (x - m);
        }
    }
    let stds = vars.iter().map(|v| (v / n).sqrt()).collect();
    Ok(ZScoreStats { means, stds })
}

/// Apply train-fitted statistics; near-constant columns (std < 1e-12) map to 0.
pub fn zscore_apply(stats: &ZScoreStats, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if stats.means.len() != matrix.n_cols {
        return Err(HarError::InvalidInput(format!(
            "z-score dimension mismatch: stats {} vs matrix {}",
            stats.means.len(),
            matrix.n_cols
        )));
    }
    let mut out = FeatureMatrix::new(matrix.n_cols, matrix.column_names.clone());
    let mut row = vec![0.0; matrix.n_cols];
    for i in 0..matrix.n_rows {
        for (j, &x) in matrix.row(i).iter().enumerate() {
            row[j] = if stats.stds[j] < 1e-12 {
                0.0
            } else {
                (x - stats.means[j]) / stats.stds[j]
            };
        }
        out.push_row(&row);
    }
    Ok(out)
}
