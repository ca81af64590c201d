//! Config-driven experiments with JSON/CSV reports.

pub mod circle;
pub mod config;
pub mod continuous;
pub mod graph;
pub mod invariants;
pub mod report;

use std::time::{Duration, Instant};

pub use config::{ExperimentConfig, ExperimentKind};
pub use graph::{parse_cover, read_graph, verify_cover};
pub use report::{emit_report, ExperimentReport, ModelSize, PointRecord, ReportPaths, Threshold};

use crate::error::Result;

/// Runs one experiment; the report is a pure function of the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::GraphMap => graph::run_graph_map(cfg),
        ExperimentKind::GraphColoring => graph::run_graph_coloring(cfg),
        ExperimentKind::Classification => continuous::run_classification(cfg),
        ExperimentKind::Operator => continuous::run_operator(cfg),
        ExperimentKind::CircleTarget => circle::run_circle_target(cfg),
        ExperimentKind::SpdMap => continuous::run_spd_map(cfg),
        ExperimentKind::RdeFlow => continuous::run_rde_flow(cfg),
        ExperimentKind::InvariantSuite => invariants::run_invariant_suite(cfg),
    }
}

/// [`run_experiment`] plus its wall time, which stays out of the report.
pub fn run_timed(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Duration)> {
    let start = Instant::now();
    let report = run_experiment(cfg)?;
    Ok((report, start.elapsed()))
}
