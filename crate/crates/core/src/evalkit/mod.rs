//! Metrics and the cross-time, per-pattern and sparsity experiments.

mod experiments;
mod metrics;
mod report;

pub use experiments::{
    breakdown_of, evaluate_split, fit_detector, median, pattern_breakdown, run_cross_time, run_pattern_breakdown,
    run_sparsity_sweep, EvaluatedRun, ExperimentConfig, FittedDetector, ModelKind, PatternBreakdown, PatternEntry,
    SparsitySweepResult, SweepPoint, ALPHA_GRID, FALLBACK_ALPHA,
};
pub use metrics::{confusion, f1_score, metrics, roc_auc, ConfusionCounts, MetricReport};
pub use report::{
    cross_time_rows, pattern_rows, render_table, report_json, sparsity_rows, write_report_csv, ReportRow,
};
