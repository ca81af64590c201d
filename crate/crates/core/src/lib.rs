//! Randomized universal approximators between finite metric spaces.

pub mod approximator;
pub mod carnot;
pub mod error;
pub mod experiment;
pub mod feature;
pub mod measure;
pub mod metric;
pub mod numerics;
pub mod qas;
pub mod oracle;

pub use error::{Error, Result};
pub use measure::DiscreteMeasure;
pub use metric::{FiniteMetricSpace, Metric, Modulus};
pub use approximator::{
    build_euclidean, build_finite_map, build_structured, fit_universal, EuclideanModel, FiniteBudget, FiniteMapModel,
    FitOptions, RandomizedApproximator, ReluNet, StructuredModel,
};
pub use experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport};
pub use qas::{Barycentric, QasSpace};
