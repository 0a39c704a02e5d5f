//! End-to-end orchestration: segmentation, scoremap, global planning, local
//! navigation and drivability feedback, plus the baseline comparison.

pub mod compare;
pub mod pipeline;

pub use compare::{compare_baselines, comparison_csv, ComparisonRow, Method};
pub use pipeline::{run_pipeline, ExperimentConfig, IterationReport, PipelineReport};
