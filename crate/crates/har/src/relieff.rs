//! ReliefF feature ranking (Kononenko's multi-class variant with
//! prior-probability miss weighting) and top-k selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::model::ActivityLabel;
use crate::{HarError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReliefFConfig {
    /// Number of sampled instances; None means every training row, in order.
    pub n_samples: Option<usize>,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for ReliefFConfig {
    fn default() -> Self {
        // k = 1 mirrors the two-nearest-neighbor (Relief-style) description;
        // standard ReliefF values such as 10 are configuration away.
        ReliefFConfig {
            n_samples: None,
            k_neighbors: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub weights: Vec<f64>,
    /// Column indices sorted by descending weight, ties by ascending index.
    pub order: Vec<usize>,
    pub warnings: Vec<String>,
}

fn euclidean_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest rows of `candidates` to row `target`, ties to the lowest index.
fn nearest(
    features: &FeatureMatrix,
    target: usize,
    candidates: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut by_dist: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&i| (euclidean_sq(features.row(target), features.row(i)), i))
        .collect();
    by_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    by_dist.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn relieff_rank(
    features: &FeatureMatrix,
    labels: &[ActivityLabel],
    config: &ReliefFConfig,
) -> Result<FeatureRanking> {
    if config.k_neighbors == 0 {
        return Err(HarError::Config("relieff.k_neighbors must be >= 1".into()));
    }
    if features.n_rows != labels.len() {
        return Err(HarError::InvalidInput(format!(
            "relieff: {} rows vs {} labels",
            features.n_rows,
            labels.len()
        )));
    }
    let n_rows = features.n_rows;
    let d = features.n_cols;

    let mut classes: Vec<ActivityLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(HarError::InvalidInput(
            "relieff requires at least two classes".into(),
        ));
    }
    let rows_of = |c: ActivityLabel| -> Vec<usize> {
        (0..n_rows).filter(|&i| labels[i] == c).collect()
    };
    let class_rows: Vec<(ActivityLabel, Vec<usize>)> =
        classes.iter().map(|&c| (c, rows_of(c))).collect();
    let prior = |c: ActivityLabel| -> f64 {
        class_rows
            .iter()
            .find(|(cl, _)| *cl == c)
            .map(|(_, rows)| rows.len() as f64 / n_rows as f64)
            .unwrap()
    };

    // per-feature value range over the training data; range 0 -> diff 0
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for i in 0..n_rows {
        for (f, &v) in features.row(i).iter().enumerate() {
            min[f] = min[f].min(v);
            max[f] = max[f].max(v);
        }
    }
    let range: Vec<f64> = max.iter().zip(&min).map(|(hi, lo)| hi - lo).collect();
    let diff = |f: usize, a: usize, b: usize| -> f64 {
        if range[f] <= 0.0 {
            0.0
        } else {
            (features.row(a)[f] - features.row(b)[f]).abs() / range[f]
        }
    };

    let sampled: Vec<usize> = match config.n_samples {
        None => (0..n_rows).collect(),
        Some(m) => {
            if m > n_rows {
                return Err(HarError::Config(format!(
                    "relieff.n_samples {m} exceeds {n_rows} training rows"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut idx: Vec<usize> = (0..n_rows).collect();
            idx.shuffle(&mut rng);
            idx.truncate(m);
            idx
        }
    };
    let n = sampled.len() as f64;

    let mut weights = vec![0.0; d];
    let mut warnings = Vec::new();
    for &r in &sampled {
        let own_class = labels[r];
        let own_rows: Vec<usize> = class_rows
            .iter()
            .find(|(c, _)| *c == own_class)
            .unwrap()
            .1
            .iter()
            .copied()
            .filter(|&i| i != r)
            .collect();
        let k_hits = config.k_neighbors.min(own_rows.len());
        if k_hits < config.k_neighbors {
            warnings.push(format!(
                "class {} has only {} other members; k reduced to {k_hits} for row {r}",
                own_class.name(),
                own_rows.len()
            ));
        }
        if k_hits > 0 {
            let hits = nearest(features, r, &own_rows, k_hits);
            for f in 0..d {
                let sum: f64 = hits.iter().map(|&h| diff(f, r, h)).sum();
                weights[f] -= sum / (n * k_hits as f64);
            }
        }
        let miss_scale = 1.0 - prior(own_class);
        for (c, rows) in &class_rows {
            if *c == own_class {
                continue;
            }
            let k_miss = config.k_neighbors.min(rows.len());
            if k_miss == 0 {
                continue;
            }
            let misses = nearest(features, r, rows, k_miss);
            let factor = prior(*c) / miss_scale;
            for f in 0..d {
                let sum: f64 = misses.iter().map(|&m| diff(f, r, m)).sum();
                weights[f] += factor * sum / (n * k_miss as f64);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    Ok(FeatureRanking {
        weights,
        order,
        warnings,
    })
}

/// First `n_keep` ranked columns, re-sorted ascending for stable slicing.
pub fn select_top(ranking: &FeatureRanking, n_keep: usize) -> Result<Vec<usize>> {
    if n_keep == 0 || n_keep > ranking.order.len() {
        return Err(HarError::Config(format!(
            "n_keep {n_keep} out of range 1..={}",
            ranking.order.len()
        )));
    }
    let mut selected: Vec<usize> = ranking.order[..n_keep].to_vec();
    selected.sort_unstable();
    Ok(selected)
}
