//! Distance-based partitions of unity `ψ_n(x) = d(x, X_n^c) / Σ_k d(x, X_k^c)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::qas::ArcChart;

/// A closed piece of a source cover.
pub trait Part<X: ?Sized> {
    /// `d(x, X \ part)`, infinite when the complement is empty.
    fn dist_to_complement(&self, x: &X) -> f64;

    fn contains(&self, x: &X) -> bool;
}

/// Local coordinates on a part, fed to that part's sub-models.
pub trait Chart<X: ?Sized> {
    fn chart(&self, x: &X) -> Vec<f64>;
}

/// Subset of a finite metric space, given by membership flags.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPart<'a> {
    space: &'a FiniteMetricSpace,
    members: Vec<bool>,
}

impl<'a> IndexPart<'a> {
    pub fn new(space: &'a FiniteMetricSpace, members: &[usize]) -> Result<Self> {
        let mut flags = vec![false; space.len()];
        for &m in members {
            space.check_index(m)?;
            flags[m] = true;
        }
        Ok(IndexPart { space, members: flags })
    }
}

impl Part<usize> for IndexPart<'_> {
    fn dist_to_complement(&self, x: &usize) -> f64 {
        (0..self.space.len())
            .filter(|&j| !self.members[j])
            .map(|j| self.space.d(*x, j))
            .fold(f64::INFINITY, f64::min)
    }

    fn contains(&self, x: &usize) -> bool {
        self.members[*x]
    }
}

impl Chart<usize> for IndexPart<'_> {
    fn chart(&self, x: &usize) -> Vec<f64> {
        self.space.row(*x).to_vec()
    }
}

/// `[lo, hi]` inside the line segment `domain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPart {
    pub lo: f64,
    pub hi: f64,
    pub domain: (f64, f64),
}

impl IntervalPart {
    pub fn new(lo: f64, hi: f64, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 <= lo && lo <= hi && hi <= domain.1) {
            return Err(Error::Construction(format!(
                "[{lo}, {hi}] is not an interval inside [{}, {}]",
                domain.0, domain.1
            )));
        }
        Ok(IntervalPart { lo, hi, domain })
    }
}

impl Part<f64> for IntervalPart {
    fn dist_to_complement(&self, x: &f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let left = if self.lo > self.domain.0 { x - self.lo } else { f64::INFINITY };
        let right = if self.hi < self.domain.1 { self.hi - x } else { f64::INFINITY };
        left.min(right)
    }

    fn contains(&self, x: &f64) -> bool {
        self.lo <= *x && *x <= self.hi
    }
}

impl Chart<f64> for IntervalPart {
    fn chart(&self, x: &f64) -> Vec<f64> {
        vec![*x]
    }
}

/// Closed arc of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPart(pub ArcChart);

impl ArcPart {
    /// Signed chart offset, folded into `(−π, π]` around the arc start.
    fn offset(&self, theta: f64) -> f64 {
        let r = (theta - self.0.start).rem_euclid(TAU);
        if r > std::f64::consts::PI {
            r - TAU
        } else {
            r
        }
    }
}

impl Part<f64> for ArcPart {
    fn dist_to_complement(&self, x: &f64) -> f64 {
        if !self.0.contains(*x) {
            return 0.0;
        }
        let s = self.0.chart(*x).expect("contained");
        s.min(self.0.len - s)
    }

    fn contains(&self, x: &f64) -> bool {
        self.0.contains(*x)
    }
}

impl Chart<f64> for ArcPart {
    fn chart(&self, x: &f64) -> Vec<f64> {
        vec![self.offset(*x)]
    }
}

/// Partition-of-unity weights at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PouWeights {
    /// `None` when every distance to a complement vanishes.
    pub weights: Option<Vec<f64>>,
    /// The point lies at depth at least `R` inside some part.
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity<P> {
    parts: Vec<P>,
    radius: f64,
}

impl<P> PartitionOfUnity<P> {
    /// `radius` is the depth `R` defining the good set; `None` uses `1/N`.
    pub fn new(parts: Vec<P>, radius: Option<f64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Construction("partition of unity needs at least one part".into()));
        }
        let radius = radius.unwrap_or(1.0 / parts.len() as f64);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("good-set radius {radius} must be positive")));
        }
        Ok(PartitionOfUnity { parts, radius })
    }

    pub fn parts(&self) -> &[P] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn weights<X: ?Sized>(&self, x: &X) -> PouWeights
    where
        P: Part<X>,
    {
        let d: Vec<f64> = self.parts.iter().map(|p| p.dist_to_complement(x)).collect();
        let good = d.iter().any(|&v| v >= self.radius);
        let infinite = d.iter().filter(|v| v.is_infinite()).count();
        let weights = if infinite > 0 {
            Some(d.iter().map(|v| if v.is_infinite() { 1.0 / infinite as f64 } else { 0.0 }).collect())
        } else {
            let total: f64 = d.iter().sum();
            if total > 0.0 {
                Some(d.iter().map(|v| v / total).collect())
            } else {
                None
            }
        };
        PouWeights { weights, good }
    }
}

/// Circle cover by `n` equal arcs widened by `overlap` on each side.
pub fn overlapping_arcs(n: usize, overlap: f64) -> Result<Vec<ArcPart>> {
    if n == 0 {
        return Err(Error::Construction("need at least one arc".into()));
    }
    let len = TAU / n as f64;
    (0..n)
        .map(|k| ArcChart::new(len * k as f64 - overlap, len + 2.0 * overlap).map(ArcPart))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::shortest_path_metric;

    #[test]
    fn degenerate_denominator() {
        let dom = (0.0, 4.0);
        let pou = PartitionOfUnity::new(
            vec![IntervalPart::new(0.0, 2.0, dom).unwrap(), IntervalPart::new(2.0, 4.0, dom).unwrap()],
            Some(0.5),
        )
        .unwrap();
        let at = pou.weights(&2.0);
        assert!(at.weights.is_none());
        assert!(!at.good);
        let w = pou.weights(&1.0).weights.unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }

    #[test]
    fn whole_space_part() {
        let pou = PartitionOfUnity::new(vec![IntervalPart::new(0.0, 1.0, (0.0, 1.0)).unwrap()], None).unwrap();
        for x in [0.0, 0.3, 1.0] {
            let w = pou.weights(&x);
            assert_eq!(w.weights, Some(vec![1.0]));
            assert!(w.good);
        }
    }

    #[test]
    fn weights_sum_to_one_on_arcs() {
        let pou = PartitionOfUnity::new(overlapping_arcs(4, 0.3).unwrap(), None).unwrap();
        for k in 0..720 {
            let x = TAU * k as f64 / 720.0;
            let w = pou.weights(&x);
            let ws = w.weights.expect("overlapping cover has positive denominator");
            assert!((ws.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(ws.iter().all(|&v| v >= 0.0));
            assert!(w.good);
            for (n, &v) in ws.iter().enumerate() {
                if v > 0.0 {
                    assert!(pou.parts()[n].contains(&x));
                }
            }
        }
    }

    #[test]
    fn graph_parts() {
        let g = shortest_path_metric(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], 4).unwrap();
        let a = IndexPart::new(&g, &[0, 1, 2]).unwrap();
        let b = IndexPart::new(&g, &[1, 2, 3]).unwrap();
        let pou = PartitionOfUnity::new(vec![a, b], Some(2.5)).unwrap();
        let w = pou.weights(&1).weights.unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(pou.weights(&0).good);
        assert!(!pou.weights(&1).good);
    }
}
