//! Scoring prediction sources against expert labels.

pub mod metrics;
pub mod report;

pub use metrics::{
    compute_metrics, confusion, truth_labels, ConfusionMatrix, MetricsReport, ScoredPrediction,
};
pub use report::{emit_report, load_report, ReportDocument, ReportFiles};
