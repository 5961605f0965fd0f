//! One-vs-all soft-margin SVM trained by simplified (Platt-style) SMO,
//! with per-sample box constraints carrying the class weights.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::model::ActivityLabel;
use crate::seed::mix;
use crate::{HarError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpec {
    Linear,
    /// gamma = None resolves to 1/d at training time.
    Rbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub kernel: KernelSpec,
    pub c: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
    pub class_weighting: bool,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: KernelSpec::Linear,
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10,
            class_weighting: true,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c <= 0.0 {
            return Err(HarError::Config("svm.c must be positive".into()));
        }
        if self.tol <= 0.0 {
            return Err(HarError::Config("svm.tol must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if g <= 0.0 {
                return Err(HarError::Config("svm.gamma must be positive".into()));
            }
        }
        Ok(())
    }

    fn resolve_kernel(&self, dim: usize) -> Kernel {
        match self.kernel {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / dim.max(1) as f64),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct BinarySvmModel {
    pub kernel: Kernel,
    /// Support vectors with their dual coefficient alpha_i * y_i.
    pub support_vectors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
    /// Full training alphas and their box bounds, kept for feasibility checks.
    pub alphas: Vec<f64>,
    pub box_bounds: Vec<f64>,
}

impl BinarySvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Train one binary soft-margin SVM by simplified SMO. `labels` are +-1 and
/// `box_bounds[i]` is the per-sample upper bound C_i.
pub fn train_binary(
    rows: &[&[f64]],
    labels: &[f64],
    box_bounds: &[f64],
    kernel: Kernel,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<BinarySvmModel> {
    let n = rows.len();
    if !labels.iter().any(|&y| y > 0.0) || !labels.iter().any(|&y| y < 0.0) {
        return Err(HarError::Training(
            "binary SVM needs both classes present".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // dense kernel cache; desk-scale n keeps this affordable
    let k_matrix: Vec<f64> = {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(rows[i], rows[j]);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    };
    let k = |i: usize, j: usize| k_matrix[i * n + j];

    let mut alphas = vec![0.0f64; n];
    let mut b = 0.0f64;
    let f = |alphas: &[f64], b: f64, i: usize| -> f64 {
        let mut acc = b;
        for (j, &a) in alphas.iter().enumerate() {
            if a != 0.0 {
                acc += a * labels[j] * k(j, i);
            }
        }
        acc
    };

    let mut passes = 0usize;
    while passes < max_passes {
        let mut num_changed = 0usize;
        for i in 0..n {
            let e_i = f(&alphas, b, i) - labels[i];
            let r_i = labels[i] * e_i;
            if !((r_i < -tol && alphas[i] < box_bounds[i]) || (r_i > tol && alphas[i] > 0.0)) {
                continue;
            }
            let j = {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                j
            };
            let e_j = f(&alphas, b, j) - labels[j];
            let (a_i_old, a_j_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if labels[i] != labels[j] {
                (
                    (a_j_old - a_i_old).max(0.0),
                    (box_bounds[i] - a_i_old + a_j_old).min(box_bounds[j]),
                )
            } else {
                (
                    (a_i_old + a_j_old - box_bounds[i]).max(0.0),
                    (a_i_old + a_j_old).min(box_bounds[j]),
                )
            };
            if lo >= hi {
                continue;
            }
            let eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
            if eta >= 0.0 {
                continue;
            }
            let mut a_j = a_j_old - labels[j] * (e_i - e_j) / eta;
            a_j = a_j.clamp(lo, hi);
            if (a_j - a_j_old).abs() < 1e-8 {
                continue;
            }
            let a_i = a_i_old + labels[i] * labels[j] * (a_j_old - a_j);
            alphas[i] = a_i;
            alphas[j] = a_j;
            let b1 = b - e_i
                - labels[i] * (a_i - a_i_old) * k(i, i)
                - labels[j] * (a_j - a_j_old) * k(i, j);
            let b2 = b - e_j
                - labels[i] * (a_i - a_i_old) * k(i, j)
                - labels[j] * (a_j - a_j_old) * k(j, j);
            b = if 0.0 < a_i && a_i < box_bounds[i] {
                b1
            } else if 0.0 < a_j && a_j < box_bounds[j] {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            num_changed += 1;
        }
        if num_changed == 0 {
            passes += 1;
        } else {
            passes = 0;
        }
    }

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(rows[i].to_vec());
            coefficients.push(a * labels[i]);
        }
    }
    Ok(BinarySvmModel {
        kernel,
        support_vectors,
        coefficients,
        bias: b,
        alphas,
        box_bounds: box_bounds.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct OneVsAllSvm {
    pub classes: Vec<ActivityLabel>,
    pub models: Vec<BinarySvmModel>,
}

/// Train one binary model per class (positive = that class). Class weights,
/// when given, enter as per-sample box constraints C_i = c * w_{class(i)}.
pub fn train_one_vs_all(
    features: &FeatureMatrix,
    labels: &[ActivityLabel],
    class_weights: Option<&BTreeMap<u8, f64>>,
    config: &SvmConfig,
) -> Result<OneVsAllSvm> {
    config.validate()?;
    if features.n_rows != labels.len() {
        return Err(HarError::InvalidInput(format!(
            "svm: {} rows vs {} labels",
            features.n_rows,
            labels.len()
        )));
    }
    let mut classes: Vec<ActivityLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(HarError::Training("one-vs-all SVM needs >= 2 classes".into()));
    }
    let kernel = config.resolve_kernel(features.n_cols);
    let rows: Vec<&[f64]> = (0..features.n_rows).map(|i| features.row(i)).collect();
    let box_bounds: Vec<f64> = labels
        .iter()
        .map(|l| {
            let w = match class_weights {
                Some(weights) if config.class_weighting => {
                    *weights.get(&l.id()).unwrap_or(&1.0)
                }
                _ => 1.0,
            };
            config.c * w
        })
        .collect();
    let mut models = Vec::with_capacity(classes.len());
    for &class in &classes {
        let binary_labels: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        models.push(train_binary(
            &rows,
            &binary_labels,
            &box_bounds,
            kernel,
            config.tol,
            config.max_passes,
            mix(config.seed, class.id() as u64),
        )?);
    }
    Ok(OneVsAllSvm { classes, models })
}

impl OneVsAllSvm {
    /// Argmax of decision values; ties go to the lowest class id.
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<ActivityLabel>> {
        let dim = self.models[0].support_vectors.first().map(|v| v.len());
        if let Some(d) = dim {
            if d != features.n_cols {
                return Err(HarError::InvalidInput(format!(
                    "svm predict: model dim {d} vs features {}",
                    features.n_cols
                )));
            }
        }
        let mut out = Vec::with_capacity(features.n_rows);
        for i in 0..features.n_rows {
            let x = features.row(i);
            let mut best = self.classes[0];
            let mut best_value = f64::NEG_INFINITY;
            for (class, model) in self.classes.iter().zip(&self.models) {
                let value = model.decision(x);
                if value > best_value {
                    best_value = value;
                    best = *class;
                }
            }
            out.push(best);
        }
        Ok(out)
    }
}
