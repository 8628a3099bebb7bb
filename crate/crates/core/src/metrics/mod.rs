//! Ensemble evaluation: exact ROC-AUC, Pearson correlation, weighted-sum
//! fusion and a diversity report.

mod auc;
mod correlation;
mod fusion;
mod prediction;
mod report;
pub mod synthetic;

pub use auc::{auc_from_labels, roc_auc};
pub use correlation::{corr_matrix, pearson_corr, pearson_sets, CorrelationMatrix};
pub use fusion::{heuristic_weights, weighted_ensemble, DEFAULT_LAMBDA};
pub use prediction::{LabelSet, PredictionSet};
pub use report::{
    diversity_report, matrix_csv, matrix_text, score_histogram, DiversityReport, HISTOGRAM_BINS,
};
