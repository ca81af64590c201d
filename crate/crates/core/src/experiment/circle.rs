//! Degree-one circle map into three target arcs through the structured model.

use std::f64::consts::{PI, TAU};

use super::config::ExperimentConfig;
use super::report::{ExperimentReport, ModelSize, PointRecord, Threshold};
use crate::approximator::{build_structured, overlapping_arcs, PartitionOfUnity, PartitionedTarget, StructuredOptions};
use crate::error::Result;
use crate::qas::{circle_distance, wrap_angle, CirclePartition};

/// `θ ↦ θ + 0.3 sin θ`, a degree-one diffeomorphism of the circle.
pub fn circle_map(theta: f64) -> f64 {
    wrap_angle(theta + 0.3 * theta.sin())
}

/// Source arcs and overlap used by the experiment.
pub const SOURCE_ARCS: usize = 4;
pub const SOURCE_OVERLAP: f64 = 0.3;

pub fn run_circle_target(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n_eval = cfg.n_test.unwrap_or(720);
    let n_train = cfg.n_points.unwrap_or(500);
    let eps = cfg.eps.unwrap_or(0.1);
    let target = CirclePartition::new(cfg.target_size.unwrap_or(3))?;
    let cover = PartitionOfUnity::new(overlapping_arcs(SOURCE_ARCS, SOURCE_OVERLAP)?, None)?;
    let train: Vec<f64> = (0..n_train).map(|k| TAU * (k as f64 + 0.5) / n_train as f64).collect();
    let mut opts = StructuredOptions::new(eps, cfg.capacity.unwrap_or(128), cfg.seed);
    opts.sub_margin = 0.05;
    let model = build_structured(&train, |t: &f64| circle_map(*t), cover, target, &opts)?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    let mut points = Vec::with_capacity(n_eval);
    let (mut certified, mut disagreements, mut abstentions, mut ties) = (0usize, 0usize, 0usize, 0usize);
    let mut contraction_violations = 0usize;
    let mut sup_certified = 0.0_f64;
    for k in 0..n_eval {
        let x = TAU * k as f64 / n_eval as f64;
        let y = circle_map(x);
        let e = model.evaluate(&x)?;
        abstentions += e.abstained() as usize;
        ties += e.tie() as usize;
        let part = model.certified_part(&y).filter(|_| e.good);
        let (error, w1) = match (&e.measure, e.point) {
            (Some(mu), Some(p)) => (circle_distance(p, y), mu.iter().map(|(a, w)| w * circle_distance(*a, y)).sum()),
            _ => (PI, PI),
        };
        if error > w1 + 1e-12 {
            contraction_violations += 1;
        }
        if let Some(m) = part {
            certified += 1;
            if e.fired != [m] {
                disagreements += 1;
            }
            sup_certified = sup_certified.max(w1);
        }
        points.push(PointRecord {
            id: k,
            error: w1,
            certified: part.is_some(),
            part: e.selected,
        });
    }
    report.points = points;
    let mass = certified as f64 / n_eval as f64;
    report.certified_mass = Some(mass);
    report.check(Threshold::at_least("certified_mass", mass, 0.9));
    report.check(Threshold::at_most("sup_w1_certified", sup_certified, 0.1 * PI));
    report.check(Threshold::at_most("classifier_disagreements", disagreements as f64, 0.0));
    report.check(Threshold::at_most("contraction_violations", contraction_violations as f64, 0.0));
    report.metric("abstentions", abstentions as f64);
    report.metric("ties", ties as f64);
    report.metric("eps_a", model.budget.eps_a);
    report.metric("eps_star", model.budget.eps_star);
    report.metric("delta_star", model.budget.delta_star);
    report.metric("classifier_threshold", model.budget.threshold);
    let m_parts = PartitionedTarget::n_parts(&model.target);
    for (n, (count, parameters)) in model.sub_model_counts().into_iter().zip(model.parameter_counts()).enumerate() {
        report.models.push(ModelSize {
            name: format!("source_part_{n}"),
            capacity: opts.capacity,
            feature_dim: 1,
            n_atoms: 2 * (m_parts + count),
            parameters,
        });
    }
    Ok(report.finish())
}
