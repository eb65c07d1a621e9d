//! Compression task, performance matrices and correlation reports.

mod compressor;
mod correlation;
mod performance;

pub use compressor::{fit_compressor, nmse_db, CompressorModel, NMSE_FLOOR_DB};
pub use correlation::{
    correlate, run_benchmark, BenchmarkOutput, BenchmarkSpec, CellFailure, CorrelationReport, CorrelationRow,
    DropMode, ReportMeta, TimingEntry,
};
pub use performance::{
    evaluate_performance_matrix, performance_drop, train_test_split, PerformanceMatrix, TaskSpec, TRAIN_FRACTION,
};
