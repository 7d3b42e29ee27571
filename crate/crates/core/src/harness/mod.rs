//! Stratified cross-validation, metrics and run reports.

mod cv;
mod folds;
mod metrics;
mod profile;
mod report;
mod roc;

pub use cv::{
    run_cv, run_cv_detailed, run_fold, run_planned_fold, CvConfig, CvRun, Dataset, FoldData, FoldOutcome,
    FoldReport, FoldTimings, Prediction, WeightCount,
};
pub use folds::{stratified_folds, FoldPlan};
pub use metrics::{metrics, ConfusionMatrix, MetricSet};
pub use profile::{measure, memory_method, Measurement, MemoryMethod, TrackingAllocator};
pub use report::{
    compare_reports, render_comparison, write_comparison_csv, DatasetInfo, DeltaRow, MeanStd, MetricSummary,
    Pooled, RunReport,
};
pub use roc::{roc_auc, RocCurve, RocPoint};
