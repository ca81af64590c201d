use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One pass/fail condition: `value <= limit` (or `>=` when `at_least`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub at_least: bool,
    pub pass: bool,
}

impl Threshold {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Threshold {
            name: name.to_string(),
            value,
            limit,
            at_least: false,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Threshold {
            name: name.to_string(),
            value,
            limit,
            at_least: true,
            pass: value >= limit,
        }
    }

    /// A boolean check recorded as 1/0 against limit 1.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// Size of one fitted sub-model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSize {
    pub name: String,
    pub capacity: usize,
    pub feature_dim: usize,
    pub n_atoms: usize,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: usize,
    pub error: f64,
    pub certified: bool,
    pub part: Option<usize>,
}

/// Everything about a run except wall time, so equal seeds give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub pass: bool,
    pub sup_error: f64,
    pub certified_mass: Option<f64>,
    pub thresholds: Vec<Threshold>,
    pub models: Vec<ModelSize>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub points: Vec<PointRecord>,
}

impl ExperimentReport {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            kind,
            seed,
            pass: false,
            sup_error: 0.0,
            certified_mass: None,
            thresholds: Vec::new(),
            models: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            points: Vec::new(),
        }
    }

    pub fn check(&mut self, t: Threshold) {
        self.thresholds.push(t);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Sets `sup_error` from the point table and `pass` from the thresholds.
    pub fn finish(mut self) -> Self {
        self.sup_error = self.points.iter().map(|p| p.error).fold(0.0, f64::max);
        self.pass = !self.thresholds.is_empty() && self.thresholds.iter().all(|t| t.pass);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn errors_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "w1_error", "certified", "part"])?;
        for p in &self.points {
            w.write_record([
                p.id.to_string(),
                format!("{:?}", p.error),
                p.certified.to_string(),
                p.part.map_or(String::new(), |k| k.to_string()),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
}

/// Writes `report.json` and `errors.csv` into `dir`, creating it if needed.
pub fn emit_report(r: &ExperimentReport, dir: &Path) -> Result<ReportPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    let csv = dir.join("errors.csv");
    fs::write(&json, r.to_json()?).map_err(|e| Error::io(&json, e))?;
    fs::write(&csv, r.errors_csv()?).map_err(|e| Error::io(&csv, e))?;
    Ok(ReportPaths { json, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new(ExperimentKind::GraphMap, 7);
        r.points.push(PointRecord {
            id: 0,
            error: 0.1 + 0.2,
            certified: true,
            part: Some(2),
        });
        r.points.push(PointRecord {
            id: 1,
            error: 1e-300,
            certified: false,
            part: None,
        });
        r.check(Threshold::at_most("sup_w1", 0.3, 0.5));
        r.metric("fit_error", 1.0 / 3.0);
        r.finish()
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert!(r.pass);
        assert_eq!(r.sup_error, 0.1 + 0.2);
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
    }

    #[test]
    fn empty_table_is_header_only() {
        let r = ExperimentReport::new(ExperimentKind::Operator, 0).finish();
        assert_eq!(r.errors_csv().unwrap(), "id,w1_error,certified,part\n");
        assert!(!r.pass);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&sample(), &dir.path().join("out")).unwrap();
        let csv = fs::read_to_string(paths.csv).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with("0,0.30000000000000004,true,2"));
        assert!(paths.json.exists());
    }
}
