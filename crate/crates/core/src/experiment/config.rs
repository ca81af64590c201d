use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GraphMap,
    GraphColoring,
    Classification,
    Operator,
    CircleTarget,
    SpdMap,
    RdeFlow,
    InvariantSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GraphMap => "graph_map",
            ExperimentKind::GraphColoring => "graph_coloring",
            ExperimentKind::Classification => "classification",
            ExperimentKind::Operator => "operator",
            ExperimentKind::CircleTarget => "circle_target",
            ExperimentKind::SpdMap => "spd_map",
            ExperimentKind::RdeFlow => "rde_flow",
            ExperimentKind::InvariantSuite => "invariant_suite",
        }
    }
}

/// Flat experiment description. Unset budgets and sizes fall back to per-kind defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Hidden width `c`.
    #[serde(default)]
    pub capacity: Option<usize>,
    /// Number of output atoms `N`.
    #[serde(default)]
    pub n_atoms: Option<usize>,
    /// Atoms per quantized block `Q`.
    #[serde(default)]
    pub q: Option<usize>,
    /// Retained feature dimension `d`.
    #[serde(default)]
    pub feature_dim: Option<usize>,
    /// Pass threshold on the achieved error.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_a: Option<f64>,
    #[serde(default)]
    pub eps_q: Option<f64>,
    #[serde(default)]
    pub eps_e: Option<f64>,
    /// Landmark separation for distance features.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Source size (vertices, grid points or sampled drivers).
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default)]
    pub target_size: Option<usize>,
    #[serde(default)]
    pub n_test: Option<usize>,
    #[serde(default)]
    pub source_graph: Option<PathBuf>,
    #[serde(default)]
    pub target_graph: Option<PathBuf>,
    /// Whitespace-separated target index per source vertex.
    #[serde(default)]
    pub map: Option<PathBuf>,
    /// One cover piece per line, vertex indices separated by whitespace.
    #[serde(default)]
    pub cover: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            seed,
            capacity: None,
            n_atoms: None,
            q: None,
            feature_dim: None,
            eps: None,
            eps_a: None,
            eps_q: None,
            eps_e: None,
            delta: None,
            n_points: None,
            target_size: None,
            n_test: None,
            source_graph: None,
            target_graph: None,
            map: None,
            cover: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate_values()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative input paths are taken relative to the config file.
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.source_graph, &mut cfg.target_graph, &mut cfg.map, &mut cfg.cover]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    fn validate_values(&self) -> Result<()> {
        let eps = [
            ("eps", self.eps),
            ("eps_a", self.eps_a),
            ("eps_q", self.eps_q),
            ("eps_e", self.eps_e),
            ("delta", self.delta),
        ];
        for (name, v) in eps {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        for (name, v) in [("n_points", self.n_points), ("target_size", self.target_size), ("q", self.q)] {
            if v == Some(0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Checks value ranges and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        for p in [&self.source_graph, &self.target_graph, &self.map, &self.cover].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_json() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "graph_map", "seed": 3, "capacity": 16, "eps": 0.5}"#).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::GraphMap);
        assert_eq!(cfg.capacity, Some(16));
        assert!(ExperimentConfig::from_json(r#"{"kind": "graph_map"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "graph_map", "seed": 1, "eps": -1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "graph_map", "seed": 1, "colour": 2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "teleport", "seed": 1}"#).is_err());
    }

    #[test]
    fn missing_input_file() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::GraphMap, 1);
        cfg.source_graph = Some(PathBuf::from("/nonexistent/graph.txt"));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
