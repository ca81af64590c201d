//! The unit circle as a union of closed arcs, each an η-convex barycentric
//! part with its own chart, plus the contraction/separation data of a
//! quantized geodesic partition.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{check_simplex, Barycentric, QasSpace};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metric::Metric;
use crate::numerics::project_simplex;

const ARC_TOL: f64 = 1e-12;

/// Geodesic (arc-length) distance between two angles.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).abs() % TAU;
    r.min(TAU - r)
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Closed arc `[start, start + len]` with chart `θ ↦ (θ − start) mod 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcChart {
    pub start: f64,
    pub len: f64,
}

impl ArcChart {
    pub fn new(start: f64, len: f64) -> Result<Self> {
        if !(len > 0.0 && len <= std::f64::consts::PI) {
            return Err(Error::Construction(format!("arc length {len} must lie in (0, π]")));
        }
        Ok(ArcChart { start: wrap_angle(start), len })
    }

    fn raw_offset(&self, theta: f64) -> f64 {
        let r = (theta - self.start).rem_euclid(TAU);
        // Points just before `start` wrap to ~2π; fold them back onto the arc.
        if r > TAU - ARC_TOL {
            r - TAU
        } else {
            r
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let r = self.raw_offset(theta);
        r >= -ARC_TOL && r <= self.len + ARC_TOL
    }

    /// Chart coordinate in `[0, len]`.
    pub fn chart(&self, theta: f64) -> Result<f64> {
        if self.contains(theta) {
            Ok(self.raw_offset(theta).clamp(0.0, self.len))
        } else {
            Err(Error::Domain(format!("angle {theta} outside arc starting at {}", self.start)))
        }
    }

    pub fn unchart(&self, s: f64) -> f64 {
        wrap_angle(self.start + s)
    }

    pub fn midpoint(&self) -> f64 {
        self.unchart(0.5 * self.len)
    }

    pub fn end(&self) -> f64 {
        self.unchart(self.len)
    }

    /// Distance from `theta` to the arc.
    pub fn dist_to(&self, theta: f64) -> f64 {
        if self.contains(theta) {
            0.0
        } else {
            circle_distance(theta, self.start).min(circle_distance(theta, self.end()))
        }
    }
}

/// One arc as a QAS space: chart-average mixing, quantization through its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleArc(pub ArcChart);

impl Metric<f64> for CircleArc {
    fn dist(&self, a: &f64, b: &f64) -> f64 {
        circle_distance(*a, *b)
    }
}

impl QasSpace for CircleArc {
    type Point = f64;

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        circle_distance(*a, *b)
    }

    /// `h^{-1}(Σ w_n h(u_n))` in the arc chart.
    fn mix(&self, w: &[f64], points: &[f64]) -> Result<f64> {
        check_simplex(w, points.len())?;
        if let Some(k) = w.iter().position(|&x| x == 1.0) {
            self.0.chart(points[k])?;
            return Ok(points[k]);
        }
        let mut s = 0.0;
        for (wn, &p) in w.iter().zip(points) {
            s += wn * self.0.chart(p)?;
        }
        Ok(self.0.unchart(s.clamp(0.0, self.0.len)))
    }

    fn quant_dim(&self) -> usize {
        2
    }

    /// Projects the two parameters onto `Δ_2` and mixes the arc endpoints.
    fn quantize(&self, params: &[f64]) -> Result<f64> {
        if params.len() != 2 {
            return Err(Error::Shape(format!("arc quantization takes 2 parameters, got {}", params.len())));
        }
        let w = project_simplex(params)?;
        self.mix(&w, &[self.0.start, self.0.end()])
    }
}

impl Barycentric for CircleArc {
    fn barycenter(&self, mu: &DiscreteMeasure<f64>) -> Result<f64> {
        if mu.len() == 1 {
            self.0.chart(mu.atoms()[0])?;
            return Ok(mu.atoms()[0]);
        }
        self.mix(mu.weights(), mu.atoms())
    }
}

/// Cover of a target by parts with reference points, contractions and a separation rate.
pub trait GeodesicPartition {
    type Point: Clone;

    fn n_parts(&self) -> usize;

    fn reference(&self, m: usize) -> Self::Point;

    fn contains(&self, m: usize, p: &Self::Point) -> bool;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// `η((1−δ, δ), (ȳ_m, p))`: pulls `p` towards the reference point.
    fn contract(&self, m: usize, delta: f64, p: &Self::Point) -> Result<Self::Point>;

    /// Distance from `p` to the contracted part `Y_m^δ`.
    fn dist_to_contracted(&self, m: usize, delta: f64, p: &Self::Point) -> f64;

    /// Lower bound `S(δ)` on the gap between distinct contracted parts.
    fn separation(&self, delta: f64) -> f64;

    /// Generalized inverse `inf { δ ∈ [0,1] : S(δ) <= t }` by bisection.
    fn separation_inverse(&self, t: f64) -> f64 {
        if self.separation(0.0) <= t {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.separation(mid) <= t {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        hi
    }
}

/// Contracts `point` inside part `m`.
pub fn contract_part<G: GeodesicPartition + ?Sized>(g: &G, m: usize, delta: f64, point: &G::Point) -> Result<G::Point> {
    g.contract(m, delta, point)
}

/// `M` equal closed arcs `[2πm/M, 2π(m+1)/M]` with midpoint references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclePartition {
    arcs: Vec<ArcChart>,
}

impl CirclePartition {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Construction(format!("circle partition needs at least 3 arcs, got {m}")));
        }
        let len = TAU / m as f64;
        let arcs = (0..m).map(|k| ArcChart::new(len * k as f64, len)).collect::<Result<_>>()?;
        Ok(CirclePartition { arcs })
    }

    pub fn arc(&self, m: usize) -> ArcChart {
        self.arcs[m]
    }

    pub fn arcs(&self) -> &[ArcChart] {
        &self.arcs
    }

    pub fn arc_len(&self) -> f64 {
        TAU / self.arcs.len() as f64
    }

    /// Parts containing `theta` (two at shared endpoints).
    pub fn parts_of(&self, theta: f64) -> Vec<usize> {
        (0..self.arcs.len()).filter(|&m| self.arcs[m].contains(theta)).collect()
    }

    pub fn dist_to_part(&self, m: usize, theta: f64) -> f64 {
        self.arcs[m].dist_to(theta)
    }

    /// Contracted arc `Y_m^δ` as a chart interval.
    pub fn contracted_interval(&self, m: usize, delta: f64) -> ArcChart {
        let len = self.arc_len();
        ArcChart {
            start: wrap_angle(self.arcs[m].start + 0.5 * len * (1.0 - delta)),
            len: len * delta,
        }
    }
}

impl GeodesicPartition for CirclePartition {
    type Point = f64;

    fn n_parts(&self) -> usize {
        self.arcs.len()
    }

    fn reference(&self, m: usize) -> f64 {
        self.arcs[m].midpoint()
    }

    fn contains(&self, m: usize, p: &f64) -> bool {
        self.arcs[m].contains(*p)
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        circle_distance(*a, *b)
    }

    fn contract(&self, m: usize, delta: f64, p: &f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("contraction parameter {delta} outside [0,1]")));
        }
        if !self.arcs[m].contains(*p) {
            return Err(Error::Part { part: m });
        }
        CircleArc(self.arcs[m]).mix(&[1.0 - delta, delta], &[self.reference(m), *p])
    }

    fn dist_to_contracted(&self, m: usize, delta: f64, p: &f64) -> f64 {
        let c = self.contracted_interval(m, delta);
        if c.len == 0.0 {
            return circle_distance(*p, c.start);
        }
        let offset = (*p - c.start).rem_euclid(TAU);
        if offset <= c.len + ARC_TOL {
            0.0
        } else {
            circle_distance(*p, c.start).min(circle_distance(*p, c.unchart(c.len)))
        }
    }

    /// `S(δ) = (2π/M)(1 − δ)`: adjacent contracted arcs leave this much of the gap between midpoints.
    fn separation(&self, delta: f64) -> f64 {
        self.arc_len() * (1.0 - delta.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn partition_construction() {
        assert!(CirclePartition::new(2).is_err());
        let p = CirclePartition::new(3).unwrap();
        assert!((p.arc_len() - TAU / 3.0).abs() < 1e-15);
        assert_eq!(p.parts_of(TAU / 3.0), vec![0, 1]);
        assert_eq!(p.parts_of(0.0), vec![0, 2]);
        assert_eq!(p.parts_of(1.0), vec![0]);
    }

    #[test]
    fn contraction_examples() {
        let arc = ArcChart::new(0.0, PI / 2.0).unwrap();
        let a = CircleArc(arc);
        let got = a.mix(&[0.5, 0.5], &[PI / 4.0, 0.0]).unwrap();
        assert!((got - PI / 8.0).abs() < 1e-15);
        let p = CirclePartition::new(3).unwrap();
        assert_eq!(contract_part(&p, 1, 1.0, &2.5).unwrap(), 2.5);
        assert!((contract_part(&p, 1, 0.0, &2.5).unwrap() - p.reference(1)).abs() < 1e-15);
        assert!(matches!(contract_part(&p, 0, 0.5, &4.0), Err(Error::Part { part: 0 })));
    }

    #[test]
    fn separation_examples() {
        let p = CirclePartition::new(3).unwrap();
        assert_eq!(p.separation(1.0), 0.0);
        let mids = circle_distance(p.reference(0), p.reference(1));
        assert!((p.separation(0.0) - mids).abs() < 1e-12);
        for k in 0..=20 {
            let d = k as f64 / 20.0;
            assert!(p.separation_inverse(p.separation(d)) <= d + 1e-12);
        }
    }

    #[test]
    fn arc_quantization_hits_endpoints() {
        let a = CircleArc(ArcChart::new(TAU / 3.0, TAU / 3.0).unwrap());
        assert!((a.quantize(&[3.0, 0.0]).unwrap() - TAU / 3.0).abs() < 1e-15);
        assert!((a.quantize(&[0.0, 3.0]).unwrap() - 2.0 * TAU / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wraparound_distance() {
        assert!((circle_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((circle_distance(0.0, PI) - PI).abs() < 1e-15);
    }
}
