//! Approximation into a target split into barycentric parts:
//! `T̂(x) = Σ_n Σ_m ψ_n(x) C^Y_m(x) δ_{f^{(n,m)}(x)}`.

use serde::{Deserialize, Serialize};

use super::model::{HeadMode, RandomizedApproximator};
use super::partition::{Chart, Part, PartitionOfUnity};
use super::relu::{fit_universal, FitOptions};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::qas::{circle_distance, Barycentric, CircleArc, CirclePartition, GeodesicPartition};

/// Target covered by parts, each spanned by finitely many atoms with a barycenter.
pub trait PartitionedTarget {
    type Point: Clone + PartialEq;

    fn n_parts(&self) -> usize;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    fn diameter(&self) -> f64;

    /// `C_m(y) = d(y, Y_m)`.
    fn dist_to_part(&self, m: usize, y: &Self::Point) -> f64;

    fn part_atoms(&self, m: usize) -> Vec<Self::Point>;

    /// Weights on [`part_atoms`](Self::part_atoms) whose barycenter is the point of `Y_m` nearest `y`.
    fn coordinates(&self, m: usize, y: &Self::Point) -> Vec<f64>;

    fn part_barycenter(&self, m: usize, mu: &DiscreteMeasure<Self::Point>) -> Result<Self::Point>;

    /// Contraction level `δ★` whose contracted parts sit `3ε★` apart.
    fn delta_star(&self, eps_star: f64) -> f64;

    fn dist_to_contracted(&self, m: usize, delta: f64, y: &Self::Point) -> f64;
}

impl PartitionedTarget for CirclePartition {
    type Point = f64;

    fn n_parts(&self) -> usize {
        GeodesicPartition::n_parts(self)
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        circle_distance(*a, *b)
    }

    fn diameter(&self) -> f64 {
        std::f64::consts::PI
    }

    fn dist_to_part(&self, m: usize, y: &f64) -> f64 {
        CirclePartition::dist_to_part(self, m, *y)
    }

    fn part_atoms(&self, m: usize) -> Vec<f64> {
        let arc = self.arc(m);
        vec![arc.start, arc.end()]
    }

    fn coordinates(&self, m: usize, y: &f64) -> Vec<f64> {
        let arc = self.arc(m);
        let s = match arc.chart(*y) {
            Ok(s) => s,
            Err(_) if circle_distance(*y, arc.start) <= circle_distance(*y, arc.end()) => 0.0,
            Err(_) => arc.len,
        };
        let t = s / arc.len;
        vec![1.0 - t, t]
    }

    fn part_barycenter(&self, m: usize, mu: &DiscreteMeasure<f64>) -> Result<f64> {
        CircleArc(self.arc(m)).barycenter(mu)
    }

    fn delta_star(&self, eps_star: f64) -> f64 {
        self.separation_inverse(3.0 * eps_star)
    }

    fn dist_to_contracted(&self, m: usize, delta: f64, y: &f64) -> f64 {
        GeodesicPartition::dist_to_contracted(self, m, delta, y)
    }
}

/// A segment `[lo, hi]` of the real line as a single part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalTarget {
    pub lo: f64,
    pub hi: f64,
}

impl PartitionedTarget for IntervalTarget {
    type Point = Vec<f64>;

    fn n_parts(&self) -> usize {
        1
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        (a[0] - b[0]).abs()
    }

    fn diameter(&self) -> f64 {
        self.hi - self.lo
    }

    fn dist_to_part(&self, _m: usize, y: &Vec<f64>) -> f64 {
        (self.lo - y[0]).max(y[0] - self.hi).max(0.0)
    }

    fn part_atoms(&self, _m: usize) -> Vec<Vec<f64>> {
        vec![vec![self.lo], vec![self.hi]]
    }

    fn coordinates(&self, _m: usize, y: &Vec<f64>) -> Vec<f64> {
        let t = ((y[0] - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        vec![1.0 - t, t]
    }

    fn part_barycenter(&self, _m: usize, mu: &DiscreteMeasure<Vec<f64>>) -> Result<Vec<f64>> {
        Ok(vec![mu.iter().map(|(p, w)| w * p[0]).sum()])
    }

    /// A single part needs no separation.
    fn delta_star(&self, _eps_star: f64) -> f64 {
        1.0
    }

    fn dist_to_contracted(&self, m: usize, _delta: f64, y: &Vec<f64>) -> f64 {
        self.dist_to_part(m, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuredOptions {
    /// Total error budget `ε`, split evenly into three shares.
    pub eps: f64,
    /// `ε★ / ε_A`; the classifier separates contracted parts when this exceeds 1/4.
    pub eps_star_ratio: f64,
    pub capacity: usize,
    /// Sub-model `(n, m)` trains on points whose image lies within this distance of `Y_m`.
    pub sub_margin: f64,
    pub seed: u64,
}

impl StructuredOptions {
    pub fn new(eps: f64, capacity: usize, seed: u64) -> Self {
        StructuredOptions {
            eps,
            eps_star_ratio: 0.5,
            capacity,
            sub_margin: 0.0,
            seed,
        }
    }
}

/// Error shares derived from `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuredBudget {
    pub eps: f64,
    pub eps_a: f64,
    pub eps_star: f64,
    pub delta_star: f64,
    /// Part `m` fires when `Ĉ_m <= threshold = ε_A / 4`.
    pub threshold: f64,
}

/// Per-point output of the structured model.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredEval<Y> {
    pub pou: Option<Vec<f64>>,
    pub good: bool,
    pub c_hat: Vec<f64>,
    pub fired: Vec<usize>,
    pub selected: Option<usize>,
    pub measure: Option<DiscreteMeasure<Y>>,
    pub point: Option<Y>,
    /// Some active sub-model had no training data and fell back to the first part atom.
    pub fallback: bool,
}

impl<Y> StructuredEval<Y> {
    pub fn abstained(&self) -> bool {
        self.selected.is_none()
    }

    pub fn tie(&self) -> bool {
        self.fired.len() > 1
    }
}

#[derive(Debug, Clone)]
pub struct StructuredModel<P, T: PartitionedTarget> {
    pub cover: PartitionOfUnity<P>,
    pub target: T,
    pub budget: StructuredBudget,
    /// `classifiers[n][m]` estimates `C_m` on source part `n` through atoms `{0, diam}`.
    classifiers: Vec<Vec<RandomizedApproximator<f64>>>,
    sub_models: Vec<Vec<Option<RandomizedApproximator<T::Point>>>>,
}

impl<P, T: PartitionedTarget> StructuredModel<P, T> {
    fn scalar(approx: &RandomizedApproximator<f64>, phi: &[f64]) -> Result<f64> {
        Ok(approx.evaluate(phi)?.iter().map(|(z, w)| w * z.abs()).sum())
    }

    /// Weights and biases per source part, classifiers and sub-models together.
    pub fn parameter_counts(&self) -> Vec<usize> {
        self.classifiers
            .iter()
            .zip(&self.sub_models)
            .map(|(cs, ss)| {
                cs.iter().map(|c| c.core().parameter_count()).sum::<usize>()
                    + ss.iter().flatten().map(|s| s.core().parameter_count()).sum::<usize>()
            })
            .collect()
    }

    /// Trained sub-model count per source part.
    pub fn sub_model_counts(&self) -> Vec<usize> {
        self.sub_models.iter().map(|row| row.iter().filter(|m| m.is_some()).count()).collect()
    }

    pub fn evaluate<X>(&self, x: &X) -> Result<StructuredEval<T::Point>>
    where
        P: Part<X> + Chart<X>,
    {
        let pw = self.cover.weights(x);
        let m_parts = self.target.n_parts();
        let Some(psi) = pw.weights.clone() else {
            return Ok(StructuredEval {
                pou: None,
                good: pw.good,
                c_hat: vec![f64::NAN; m_parts],
                fired: Vec::new(),
                selected: None,
                measure: None,
                point: None,
                fallback: false,
            });
        };
        let charts: Vec<Option<Vec<f64>>> = self
            .cover
            .parts()
            .iter()
            .zip(&psi)
            .map(|(p, &w)| (w > 0.0).then(|| p.chart(x)))
            .collect();

        let mut c_hat = vec![0.0; m_parts];
        for (n, phi) in charts.iter().enumerate() {
            if let Some(phi) = phi {
                for (m, c) in c_hat.iter_mut().enumerate() {
                    *c += psi[n] * Self::scalar(&self.classifiers[n][m], phi)?;
                }
            }
        }
        let fired: Vec<usize> = (0..m_parts).filter(|&m| c_hat[m] <= self.budget.threshold).collect();
        let selected = fired.first().copied();

        let (measure, point, fallback) = match selected {
            None => (None, None, false),
            Some(m) => {
                let mut atoms = Vec::new();
                let mut weights = Vec::new();
                let mut fallback = false;
                for (n, phi) in charts.iter().enumerate() {
                    let Some(phi) = phi else { continue };
                    let y = match &self.sub_models[n][m] {
                        Some(sub) => self.target.part_barycenter(m, &sub.evaluate(phi)?)?,
                        None => {
                            fallback = true;
                            self.target.part_atoms(m)[0].clone()
                        }
                    };
                    atoms.push(y);
                    weights.push(psi[n]);
                }
                let mu = DiscreteMeasure::new(atoms, weights)?;
                let point = self.target.part_barycenter(m, &mu)?;
                (Some(mu), Some(point), fallback)
            }
        };
        Ok(StructuredEval {
            pou: Some(psi),
            good: pw.good,
            c_hat,
            fired,
            selected,
            measure,
            point,
            fallback,
        })
    }

    /// Part `m` whose contracted copy `Y_m^{δ★}` contains `y`.
    pub fn certified_part(&self, y: &T::Point) -> Option<usize> {
        (0..self.target.n_parts()).find(|&m| self.target.dist_to_contracted(m, self.budget.delta_star, y) <= 1e-12)
    }
}

/// Fits classifiers and sub-models on `training` with map `f`.
pub fn build_structured<X, P, T>(
    training: &[X],
    f: impl Fn(&X) -> T::Point,
    cover: PartitionOfUnity<P>,
    target: T,
    opts: &StructuredOptions,
) -> Result<StructuredModel<P, T>>
where
    P: Part<X> + Chart<X>,
    T: PartitionedTarget,
{
    if !(opts.eps > 0.0) {
        return Err(Error::Domain(format!("error budget {} must be positive", opts.eps)));
    }
    if !(opts.eps_star_ratio > 0.0 && opts.eps_star_ratio <= 1.0) {
        return Err(Error::Domain(format!("eps_star_ratio {} must lie in (0, 1]", opts.eps_star_ratio)));
    }
    let eps_a = opts.eps / 3.0;
    let eps_star = opts.eps_star_ratio * eps_a;
    let budget = StructuredBudget {
        eps: opts.eps,
        eps_a,
        eps_star,
        delta_star: target.delta_star(eps_star),
        threshold: eps_a / 4.0,
    };
    let images: Vec<T::Point> = training.iter().map(&f).collect();
    let diam = target.diameter();
    let mut classifiers = Vec::new();
    let mut sub_models = Vec::new();
    for (n, part) in cover.parts().iter().enumerate() {
        let members: Vec<usize> = (0..training.len()).filter(|&i| part.contains(&training[i])).collect();
        if members.is_empty() {
            return Err(Error::Construction(format!("source part {n} contains no training points")));
        }
        let xs: Vec<Vec<f64>> = members.iter().map(|&i| part.chart(&training[i])).collect();
        let seed = opts.seed.wrapping_add(1000 * n as u64);
        let mut row_c = Vec::new();
        let mut row_s = Vec::new();
        for m in 0..target.n_parts() {
            let dists: Vec<f64> = members.iter().map(|&i| target.dist_to_part(m, &images[i])).collect();
            let ys: Vec<Vec<f64>> = dists.iter().map(|c| vec![1.0 - c / diam, c / diam]).collect();
            let fit = fit_universal(&xs, &ys, &FitOptions::new(opts.capacity, seed + 2 * m as u64))?;
            row_c.push(RandomizedApproximator::over_atoms(fit.net, vec![0.0, diam], HeadMode::Projection)?);

            let near: Vec<usize> = (0..members.len()).filter(|&k| dists[k] <= opts.sub_margin).collect();
            if near.is_empty() {
                row_s.push(None);
                continue;
            }
            let sx: Vec<Vec<f64>> = near.iter().map(|&k| xs[k].clone()).collect();
            let sy: Vec<Vec<f64>> = near.iter().map(|&k| target.coordinates(m, &images[members[k]])).collect();
            let fit = fit_universal(&sx, &sy, &FitOptions::new(opts.capacity, seed + 2 * m as u64 + 1))?;
            row_s.push(Some(RandomizedApproximator::over_atoms(
                fit.net,
                target.part_atoms(m),
                HeadMode::Projection,
            )?));
        }
        classifiers.push(row_c);
        sub_models.push(row_s);
    }
    Ok(StructuredModel {
        cover,
        target,
        budget,
        classifiers,
        sub_models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::model::{build_euclidean, CornerSimplex};
    use crate::approximator::partition::IntervalPart;

    #[test]
    fn single_part_reduces_to_unstructured() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let f = |x: &f64| vec![0.2 + 0.6 * x * x];
        let target = IntervalTarget { lo: 0.0, hi: 1.0 };
        let cover = PartitionOfUnity::new(vec![IntervalPart::new(0.0, 1.0, (0.0, 1.0)).unwrap()], None).unwrap();
        let opts = StructuredOptions::new(0.3, 20, 9);
        let model = build_structured(&xs, f, cover, target, &opts).unwrap();

        let feats: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(f).collect();
        let simplex = CornerSimplex::from_vertices(vec![vec![0.0], vec![1.0]]).unwrap();
        // Same seed schedule as part 0, sub-model of part 0.
        let flat = build_euclidean(&feats, &ys, simplex, &FitOptions::new(20, 9 + 1)).unwrap();

        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let e = model.evaluate(&x).unwrap();
            assert_eq!(e.selected, Some(0));
            let a = e.point.unwrap();
            let b = flat.predict(&[x]).unwrap();
            assert!((a[0] - b[0]).abs() <= 1e-15, "x={x}: {} vs {}", a[0], b[0]);
        }
    }

    #[test]
    fn circle_classifier_separates_contracted_arcs() {
        let train: Vec<f64> = (0..400).map(|k| std::f64::consts::TAU * (k as f64 + 0.5) / 400.0).collect();
        let f = |t: &f64| crate::qas::wrap_angle(t + 0.3 * t.sin());
        let cover = PartitionOfUnity::new(super::super::partition::overlapping_arcs(4, 0.3).unwrap(), None).unwrap();
        let target = CirclePartition::new(3).unwrap();
        let mut opts = StructuredOptions::new(0.1 * std::f64::consts::PI, 128, 3);
        opts.sub_margin = 0.05;
        let model = build_structured(&train, f, cover, target, &opts).unwrap();
        let mut certified = 0;
        for k in 0..360 {
            let x = std::f64::consts::TAU * k as f64 / 360.0;
            let y = f(&x);
            let e = model.evaluate(&x).unwrap();
            if let Some(m) = model.certified_part(&y) {
                certified += 1;
                assert_eq!(e.fired, vec![m], "x={x}");
                assert!(circle_distance(e.point.unwrap(), y) <= model.budget.eps);
            }
        }
        assert!(certified >= 324);
    }
}
