//! Ensemble human activity recognition from waist-worn tri-axial
//! accelerometer time series.
//!
//! Three classification pipelines (engineered features + SVM, per-axis LDA +
//! KNN, per-axis 1D CNN) are trained independently on overlapping sliding
//! windows and fused by majority vote. Evaluation is leave-one-subject-out
//! cross-validation with parallel fold execution.

pub mod cnn;
pub mod config;
pub mod fft;
pub mod features;
pub mod fusion;
pub mod ingest;
pub mod lda_knn;
pub mod metrics;
pub mod model;
pub mod pool;
pub mod relieff;
pub mod seed;
pub mod segment;
pub mod svm;
pub mod synth;

mod error;

pub use error::HarError;

pub type Result<T> = std::result::Result<T, HarError>;
