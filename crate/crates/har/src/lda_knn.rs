//! Pipeline 2: per-axis LDA projection of raw windows, axis-based feature
//! fusion by concatenation and KNN classification.

use nalgebra::{DMatrix, DVector};

use crate::features::FeatureMatrix;
use crate::model::ActivityLabel;
use crate::segment::{SegmentTensor, CHANNELS};
use crate::{HarError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LdaAxisModel {
    /// Projection basis, p columns of length T, S_w-orthonormal.
    pub basis: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub global_mean: Vec<f64>,
    pub lambda: f64,
}

impl LdaAxisModel {
    pub fn dims(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, window: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|direction| {
                direction
                    .iter()
                    .zip(window)
                    .zip(&self.global_mean)
                    .map(|((w, &x), &m)| w * (x - m))
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

/// Fit the per-axis LDA on K windows of one channel.
///
/// Solves the scatter eigenproblem of (S_w + lambda I)^-1 S_b through a
/// Cholesky whitening of the ridged within-class scatter, keeping the top
/// p = min(l-1, T) directions by eigenvalue.
pub fn fit_lda_axis(windows: &[&[f64]], labels: &[ActivityLabel]) -> Result<LdaAxisModel> {
    let k = windows.len();
    if k != labels.len() {
        return Err(HarError::InvalidInput(format!(
            "lda: {k} windows vs {} labels",
            labels.len()
        )));
    }
    let mut classes: Vec<ActivityLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(HarError::Training("LDA needs >= 2 classes".into()));
    }
    if k <= classes.len() {
        return Err(HarError::Training(format!(
            "LDA needs more windows ({k}) than classes ({})",
            classes.len()
        )));
    }
    let t = windows[0].len();
    if windows.iter().any(|w| w.len() != t) {
        return Err(HarError::InvalidInput("lda: ragged window lengths".into()));
    }
    if windows.iter().flat_map(|w| w.iter()).any(|v| !v.is_finite()) {
        return Err(HarError::InvalidInput("lda: non-finite input".into()));
    }

    let global_mean: Vec<f64> = (0..t)
        .map(|j| windows.iter().map(|w| w[j]).sum::<f64>() / k as f64)
        .collect();

    let mut s_w = DMatrix::<f64>::zeros(t, t);
    let mut s_b = DMatrix::<f64>::zeros(t, t);
    for &class in &classes {
        let members: Vec<&&[f64]> = windows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == class)
            .map(|(w, _)| w)
            .collect();
        let n_c = members.len() as f64;
        let mean_c: Vec<f64> = (0..t)
            .map(|j| members.iter().map(|w| w[j]).sum::<f64>() / n_c)
            .collect();
        for w in &members {
            let d = DVector::from_iterator(t, w.iter().zip(&mean_c).map(|(&x, &m)| x - m));
            s_w.syger(1.0, &d, &d, 1.0);
        }
        let d = DVector::from_iterator(
            t,
            mean_c.iter().zip(&global_mean).map(|(&m, &g)| m - g),
        );
        s_b.syger(n_c, &d, &d, 1.0);
    }
    // syger fills the lower triangle only
    s_w.fill_upper_triangle_with_lower_triangle();
    s_b.fill_upper_triangle_with_lower_triangle();

    let lambda = 1e-6 * s_w.trace() / t as f64;
    let mut s_w_ridged = s_w;
    for i in 0..t {
        s_w_ridged[(i, i)] += lambda.max(1e-300);
    }
    let chol = s_w_ridged
        .clone()
        .cholesky()
        .ok_or_else(|| HarError::Training("LDA scatter not positive definite".into()))?;
    let l_factor = chol.l();
    // M = L^-1 S_b L^-T is symmetric with the same eigenvalues
    let x = l_factor
        .solve_lower_triangular(&s_b)
        .ok_or_else(|| HarError::Training("LDA triangular solve failed".into()))?;
    let m = l_factor
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| HarError::Training("LDA triangular solve failed".into()))?;
    let m = (&m + m.transpose()) * 0.5;
    let eigen = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].partial_cmp(&eigen.eigenvalues[a]).unwrap());
    let p = (classes.len() - 1).min(t);

    let l_t = l_factor.transpose();
    let mut basis = Vec::with_capacity(p);
    let mut eigenvalues = Vec::with_capacity(p);
    for &idx in order.iter().take(p) {
        let v = eigen.eigenvectors.column(idx).into_owned();
        let u = l_t
            .solve_upper_triangular(&v)
            .ok_or_else(|| HarError::Training("LDA back-substitution failed".into()))?;
        let mut direction: Vec<f64> = u.iter().copied().collect();
        // fix the sign so the dominant component is positive
        if let Some(peak) = direction
            .iter()
            .copied()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        {
            if peak < 0.0 {
                for d in &mut direction {
                    *d = -*d;
                }
            }
        }
        basis.push(direction);
        eigenvalues.push(eigen.eigenvalues[idx]);
    }
    Ok(LdaAxisModel {
        basis,
        eigenvalues,
        global_mean,
        lambda,
    })
}

/// Fit one LDA model per channel of the tensor.
pub fn fit_lda_all_axes(tensor: &SegmentTensor) -> Result<Vec<LdaAxisModel>> {
    (0..CHANNELS)
        .map(|c| {
            let channels: Vec<Vec<f64>> =
                (0..tensor.n_segments).map(|s| tensor.channel(s, c)).collect();
            let views: Vec<&[f64]> = channels.iter().map(|v| v.as_slice()).collect();
            fit_lda_axis(&views, &tensor.labels)
        })
        .collect()
}

/// Project every segment channel-wise and concatenate in channel order.
pub fn transform_concat(models: &[LdaAxisModel], tensor: &SegmentTensor) -> Result<FeatureMatrix> {
    if models.len() != CHANNELS {
        return Err(HarError::InvalidInput(format!(
            "expected {CHANNELS} axis models, got {}",
            models.len()
        )));
    }
    let names: Vec<String> = models
        .iter()
        .enumerate()
        .flat_map(|(c, m)| {
            (0..m.dims()).map(move |j| format!("lda_{}_{j}", crate::features::CHANNEL_NAMES[c]))
        })
        .collect();
    let d = names.len();
    let mut out = FeatureMatrix::new(d, names);
    let mut row = Vec::with_capacity(d);
    for seg in 0..tensor.n_segments {
        row.clear();
        for (c, model) in models.iter().enumerate() {
            if tensor.window_len != model.global_mean.len() {
                return Err(HarError::InvalidInput(
                    "lda transform: window length mismatch".into(),
                ));
            }
            row.extend(model.project(&tensor.channel(seg, c)));
        }
        out.push_row(&row);
    }
    Ok(out)
}

/// Plurality vote among the k nearest training rows by Euclidean distance.
///
/// Vote ties break by smaller summed neighbor distance, then lower class id;
/// equidistant neighbors break by lower training-row index.
pub fn knn_predict(
    train: &FeatureMatrix,
    train_labels: &[ActivityLabel],
    queries: &FeatureMatrix,
    config: &KnnConfig,
) -> Result<Vec<ActivityLabel>> {
    if train.n_rows == 0 {
        return Err(HarError::InvalidInput("knn: empty training set".into()));
    }
    if config.k == 0 || config.k > train.n_rows {
        return Err(HarError::Config(format!(
            "knn.k {} out of range 1..={}",
            config.k, train.n_rows
        )));
    }
    if train.n_cols != queries.n_cols {
        return Err(HarError::InvalidInput(format!(
            "knn: train dim {} vs query dim {}",
            train.n_cols, queries.n_cols
        )));
    }
    let mut out = Vec::with_capacity(queries.n_rows);
    for q in 0..queries.n_rows {
        let query = queries.row(q);
        let mut by_dist: Vec<(f64, usize)> = (0..train.n_rows)
            .map(|i| {
                let d2: f64 = train
                    .row(i)
                    .iter()
                    .zip(query)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                (d2.sqrt(), i)
            })
            .collect();
        by_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let neighbors = &by_dist[..config.k];
        // (votes, summed distance) per class among the k neighbors
        let mut tally: Vec<(ActivityLabel, usize, f64)> = Vec::new();
        for &(dist, idx) in neighbors {
            let label = train_labels[idx];
            match tally.iter_mut().find(|(l, _, _)| *l == label) {
                Some(entry) => {
                    entry.1 += 1;
                    entry.2 += dist;
                }
                None => tally.push((label, 1, dist)),
            }
        }
        tally.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.0.cmp(&b.0))
        });
        out.push(tally[0].0);
    }
    Ok(out)
}
