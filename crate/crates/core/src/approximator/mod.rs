//! ReLU cores, quantized simplex heads and the structured (partitioned) construction.

pub mod model;
pub mod partition;
pub mod relu;
pub mod structured;

pub use model::{
    argmax_atom, build_euclidean, build_finite_map, k_medoids, one_hot_logits, sweep_finite_map, CornerSimplex,
    EuclideanModel, FiniteBudget, FiniteMapModel, HeadMode, RandomizedApproximator, SweepPoint,
};
pub use partition::{overlapping_arcs, ArcPart, Chart, IndexPart, IntervalPart, Part, PartitionOfUnity, PouWeights};
pub use relu::{fit_universal, relu_forward, Dense, FitMethod, FitOptions, FitReport, ReluNet};
pub use structured::{
    build_structured, IntervalTarget, PartitionedTarget, StructuredBudget, StructuredEval, StructuredModel,
    StructuredOptions,
};
