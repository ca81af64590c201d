//! Finite metric spaces, Hölder-like moduli and brute-force metric diagnostics.
//!
//! Everything here works at desk scale: a metric space is an explicit dense
//! distance matrix, and diagnostics such as doubling constants are computed by
//! enumeration rather than estimated.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed in triangle-inequality checks.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Above this many points the triangle inequality is not re-verified on construction.
pub const EXHAUSTIVE_TRIANGLE_CAP: usize = 64;

/// Default size cap for [`doubling_constant_bruteforce`].
pub const DOUBLING_CAP: usize = 64;

/// Exact set cover is attempted up to this many points.
pub const EXACT_COVER_CAP: usize = 12;

/// Grid size used to estimate `h` for tabulated moduli.
pub const CUSTOM_H_GRID: usize = 256;

/// A ground metric on some point carrier.
pub trait Metric<P: ?Sized> {
    fn dist(&self, a: &P, b: &P) -> f64;
}

/// Hölder-like modulus of continuity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    /// `L t^alpha log(1+t)^beta`, with `0 < alpha <= 1` and `0 <= beta <= 1 - alpha`.
    Holder { l: f64, alpha: f64, beta: f64 },
    /// Sub-Hölder modulus `1/|log t|^beta` near zero, continued linearly past `e^{-(beta+1)}`.
    LogModulus { beta: f64 },
    /// Tabulated samples `(t, omega(t))`, linearly interpolated; must start at `(0, 0)`.
    Custom { samples: Vec<(f64, f64)> },
}

impl Modulus {
    pub fn identity() -> Self {
        Modulus::Holder {
            l: 1.0,
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn power(alpha: f64) -> Self {
        Modulus::Holder {
            l: 1.0,
            alpha,
            beta: 0.0,
        }
    }

    /// Checks the parameter constraints of each modulus family.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Modulus::Holder { l, alpha, beta } => {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::Construction(format!("Hölder constant must be positive, got {l}")));
                }
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::Construction(format!("alpha must lie in (0,1], got {alpha}")));
                }
                if !(beta >= 0.0 && beta <= 1.0 - alpha + 1e-15) {
                    return Err(Error::Construction(format!(
                        "beta must lie in [0, 1-alpha], got {beta}"
                    )));
                }
                Ok(())
            }
            Modulus::LogModulus { beta } => {
                if beta > 0.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Construction(format!("log modulus needs beta > 0, got {beta}")))
                }
            }
            Modulus::Custom { ref samples } => {
                if samples.len() < 2 {
                    return Err(Error::Construction("custom modulus needs at least two samples".into()));
                }
                if samples[0] != (0.0, 0.0) {
                    return Err(Error::Construction("custom modulus must start at (0, 0)".into()));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                        return Err(Error::Construction(format!(
                            "custom modulus must be strictly increasing: {:?} -> {:?}",
                            w[0], w[1]
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluates `omega(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("modulus evaluated at negative or NaN t={t}")));
        }
        match *self {
            Modulus::Holder { l, alpha, beta } => {
                let base = l * t.powf(alpha);
                if beta == 0.0 {
                    Ok(base)
                } else {
                    Ok(base * t.ln_1p().powf(beta))
                }
            }
            Modulus::LogModulus { beta } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let knee = (-(beta + 1.0)).exp();
                if t <= knee {
                    Ok(1.0 / t.ln().abs().powf(beta))
                } else {
                    let at_knee = 1.0 / (beta + 1.0).powf(beta);
                    let slope = beta * (beta + 1.0).exp() / (beta + 1.0).powf(beta + 1.0);
                    Ok(at_knee + slope * (t - knee))
                }
            }
            Modulus::Custom { ref samples } => {
                let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
                if t > hi {
                    return Err(Error::Range { value: t, lo, hi });
                }
                let k = samples.partition_point(|&(s, _)| s < t);
                if k == 0 {
                    return Ok(samples[0].1);
                }
                let (t0, w0) = samples[k - 1];
                let (t1, w1) = samples[k];
                Ok(w0 + (w1 - w0) * (t - t0) / (t1 - t0))
            }
        }
    }

    /// Largest argument at which the modulus is defined.
    pub fn domain_max(&self) -> f64 {
        match self {
            Modulus::Custom { samples } => samples[samples.len() - 1].0,
            _ => f64::INFINITY,
        }
    }

    /// Companion function `h` with `omega(s t) <= h(s) omega(t)`.
    ///
    /// Exact for the Hölder and log families. For tabulated moduli it is a grid
    /// estimate of `sup_u omega(u s) / omega(u)`; see [`Modulus::h_is_exact`].
    pub fn h_bound(&self, s: f64) -> f64 {
        match *self {
            Modulus::Holder { alpha, beta, .. } => s.powf(alpha) * s.max(1.0).powf(beta),
            Modulus::LogModulus { beta } => s.powf(beta).max(s),
            Modulus::Custom { ref samples } => {
                let hi = samples[samples.len() - 1].0;
                let mut best: f64 = 0.0;
                for k in 1..=CUSTOM_H_GRID {
                    let u = hi * k as f64 / CUSTOM_H_GRID as f64;
                    if u * s > hi {
                        break;
                    }
                    let (Ok(wus), Ok(wu)) = (self.eval(u * s), self.eval(u)) else {
                        continue;
                    };
                    best = best.max(wus / wu);
                }
                best
            }
        }
    }

    pub fn h_is_exact(&self) -> bool {
        !matches!(self, Modulus::Custom { .. })
    }

    /// Generalized inverse `inf { s >= 0 : h(s) >= t }`; infinite when `h` never reaches `t`.
    pub fn h_inverse(&self, t: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if self.h_bound(1.0) < t {
            let probe_max = 1e12;
            if self.h_bound(probe_max) < t {
                return f64::INFINITY;
            }
            while self.h_bound(hi) < t {
                lo = hi;
                hi *= 2.0;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.h_bound(mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Exponent `ceil(-log2(h^dagger(1/4)) / 4)` bounding doubling constants after snowflaking.
    ///
    /// `None` when `h` never reaches 1/4 on the probed range.
    pub fn snowflake_doubling_exponent(&self) -> Option<u32> {
        let inv = self.h_inverse(0.25);
        if !inv.is_finite() || inv <= 0.0 {
            return None;
        }
        Some(((-inv.log2()) / 4.0).ceil().max(0.0) as u32)
    }

    /// Checks `omega(s + t) <= omega(s) + omega(t)` for all pairs drawn from `grid`.
    pub fn is_subadditive_on(&self, grid: &[f64]) -> bool {
        let hi = self.domain_max();
        for &s in grid {
            for &t in grid {
                if s + t > hi {
                    continue;
                }
                let (Ok(a), Ok(b), Ok(c)) = (self.eval(s), self.eval(t), self.eval(s + t)) else {
                    return false;
                };
                if c > a + b + TRIANGLE_TOL * (1.0 + a + b) {
                    return false;
                }
            }
        }
        true
    }
}

/// Explicit finite metric space over points `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Builds a space from a row-major `n x n` matrix, validating the metric axioms.
    pub fn new(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Construction("metric space needs at least one point".into()));
        }
        if dist.len() != n * n {
            return Err(Error::Shape(format!("expected {} entries, got {}", n * n, dist.len())));
        }
        let space = FiniteMetricSpace { n, dist, labels: None };
        space.check_axioms()?;
        if n <= EXHAUSTIVE_TRIANGLE_CAP {
            space.check_triangle()?;
        }
        Ok(space)
    }

    /// Builds a space from `f(i, j)` evaluated for `i < j` and mirrored.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::new(n, dist)
    }

    /// Builds a space from rows, e.g. parsed JSON.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Shape(format!("{} labels for {} points", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest strictly positive distance; `None` for a one-point space.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist.iter().copied().filter(|&d| d > 0.0).min_by(f64::total_cmp)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::Index { index: i, len: self.n })
        }
    }

    /// Distance from `x` to a set; infinite for the empty set.
    pub fn dist_to_set(&self, x: usize, set: impl IntoIterator<Item = usize>) -> f64 {
        set.into_iter().map(|j| self.d(x, j)).fold(f64::INFINITY, f64::min)
    }

    /// Restriction of the metric to a subset of points, in the given order.
    pub fn subspace(&self, points: &[usize]) -> Result<Self> {
        for &p in points {
            self.check_index(p)?;
        }
        Self::from_fn(points.len(), |a, b| self.d(points[a], points[b]))
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.d(i, i) != 0.0 {
                return Err(Error::Construction(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::Construction(format!("invalid distance d({i},{j})={a}")));
                }
                if a != b {
                    return Err(Error::Construction(format!("asymmetric: d({i},{j})={a}, d({j},{i})={b}")));
                }
                if a == 0.0 {
                    return Err(Error::Construction(format!("distinct points {i},{j} at distance 0")));
                }
            }
        }
        Ok(())
    }

    /// Exhaustive triangle-inequality check with tolerance [`TRIANGLE_TOL`].
    pub fn check_triangle(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let dij = self.d(i, j);
                for k in 0..n {
                    let bound = dij + self.d(j, k);
                    if self.d(i, k) > bound + TRIANGLE_TOL * bound.max(1.0) {
                        return Err(Error::Construction(format!(
                            "triangle inequality fails: d({i},{k})={} > d({i},{j})+d({j},{k})={bound}",
                            self.d(i, k)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sorted distinct pairwise distances (including 0).
    pub fn distance_values(&self) -> Vec<f64> {
        let mut v = self.dist.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

impl Metric<usize> for FiniteMetricSpace {
    fn dist(&self, a: &usize, b: &usize) -> f64 {
        self.d(*a, *b)
    }
}

/// Applies `omega` entrywise, producing the generalized snowflake of `space`.
pub fn snowflake_distance(modulus: &Modulus, space: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    modulus.validate()?;
    // Concave powers are subadditive; other families are checked on the distance set.
    let concave = matches!(modulus, Modulus::Holder { beta, .. } if *beta == 0.0);
    if !concave && !modulus.is_subadditive_on(&space.distance_values()) {
        return Err(Error::Construction(
            "modulus is not subadditive on the induced distance set".into(),
        ));
    }
    let n = space.len();
    let mut dist = Vec::with_capacity(n * n);
    for &d in &space.dist {
        dist.push(modulus.eval(d)?);
    }
    FiniteMetricSpace::new(n, dist)
}

/// Weighted undirected edge `(i, j, w)`.
pub type Edge = (usize, usize, f64);

/// Shortest-path metric of a connected graph with positive weights (Dijkstra from every vertex).
pub fn shortest_path_metric(edges: &[Edge], n_vertices: usize) -> Result<FiniteMetricSpace> {
    if n_vertices == 0 {
        return Err(Error::Construction("graph has no vertices".into()));
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_vertices];
    for &(i, j, w) in edges {
        if i >= n_vertices || j >= n_vertices {
            return Err(Error::Index {
                index: i.max(j),
                len: n_vertices,
            });
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Construction(format!("edge ({i},{j}) has non-positive weight {w}")));
        }
        adj[i].push((j, w));
        adj[j].push((i, w));
    }

    let mut dist = vec![f64::INFINITY; n_vertices * n_vertices];
    for s in 0..n_vertices {
        let row = &mut dist[s * n_vertices..(s + 1) * n_vertices];
        row[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrdF64(0.0), s)));
        while let Some(Reverse((OrdF64(du), u))) = heap.pop() {
            if du > row[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let alt = du + w;
                if alt < row[v] {
                    row[v] = alt;
                    heap.push(Reverse((OrdF64(alt), v)));
                }
            }
        }
        if let Some(t) = row.iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected(s, t));
        }
    }
    // Dijkstra from both ends can differ in the last ulp; symmetrize.
    for i in 0..n_vertices {
        for j in (i + 1)..n_vertices {
            let m = dist[i * n_vertices + j].min(dist[j * n_vertices + i]);
            dist[i * n_vertices + j] = m;
            dist[j * n_vertices + i] = m;
        }
    }
    FiniteMetricSpace::new(n_vertices, dist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Parses an edge list: one `i j w` triple per line, 0-based; `#` starts a comment.
///
/// Returns the edges and the vertex count (largest index + 1).
pub fn parse_edge_list(text: &str) -> Result<(Vec<Edge>, usize)> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected `i j w`, got {} fields", fields.len())));
        }
        let i: usize = fields[0].parse().map_err(|e| parse_err(format!("vertex `{}`: {e}", fields[0])))?;
        let j: usize = fields[1].parse().map_err(|e| parse_err(format!("vertex `{}`: {e}", fields[1])))?;
        let w: f64 = fields[2].parse().map_err(|e| parse_err(format!("weight `{}`: {e}", fields[2])))?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(parse_err(format!("weight must be positive, got {w}")));
        }
        n = n.max(i + 1).max(j + 1);
        edges.push((i, j, w));
    }
    Ok((edges, n))
}

/// Hausdorff distance between two nonempty index sets.
pub fn hausdorff_distance(space: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Hausdorff distance needs nonempty sets".into()));
    }
    for &p in a.iter().chain(b) {
        space.check_index(p)?;
    }
    let directed = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&x| space.dist_to_set(x, to.iter().copied()))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Result of [`doubling_constant_bruteforce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub constant: usize,
    pub radius_grid: Vec<f64>,
    /// `true` when every cover was certified minimal by exhaustive search.
    pub exact: bool,
}

/// Doubling constant of a finite space with open balls.
///
/// Probes one radius inside every interval between consecutive breakpoints
/// `{d_ij} ∪ {d_ij / 2}`, which visits every combinatorial configuration of
/// `B(x, 2r)` and the radius-`r` balls. Covers are minimal for `n <= 12` and
/// greedy upper bounds above that.
pub fn doubling_constant_bruteforce(space: &FiniteMetricSpace) -> Result<DoublingEstimate> {
    doubling_constant_with_cap(space, DOUBLING_CAP)
}

pub fn doubling_constant_with_cap(space: &FiniteMetricSpace, cap: usize) -> Result<DoublingEstimate> {
    let n = space.len();
    if n > cap {
        return Err(Error::Size { size: n, cap });
    }
    let mut breaks: Vec<f64> = space
        .distance_values()
        .into_iter()
        .flat_map(|d| [d, 0.5 * d])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut radius_grid: Vec<f64> = breaks.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    radius_grid.push(breaks.last().copied().unwrap_or(0.0) + 1.0);

    let exact = n <= EXACT_COVER_CAP;
    let mut constant = 1;
    for &r in &radius_grid {
        for x in 0..n {
            let big: Vec<usize> = (0..n).filter(|&u| space.d(x, u) < 2.0 * r).collect();
            let balls: Vec<Vec<usize>> = (0..n)
                .map(|c| big.iter().copied().filter(|&u| space.d(c, u) < r).collect())
                .filter(|b: &Vec<usize>| !b.is_empty())
                .collect();
            let k = if exact {
                exact_cover_size(&big, &balls)
            } else {
                greedy_cover_size(&big, &balls)
            };
            constant = constant.max(k);
        }
    }
    Ok(DoublingEstimate {
        constant,
        radius_grid,
        exact,
    })
}

fn greedy_cover_size(target: &[usize], balls: &[Vec<usize>]) -> usize {
    let mut uncovered: Vec<usize> = target.to_vec();
    let mut count = 0;
    while !uncovered.is_empty() {
        let best = balls
            .iter()
            .max_by_key(|b| b.iter().filter(|u| uncovered.contains(u)).count())
            .expect("every point lies in its own ball");
        uncovered.retain(|u| !best.contains(u));
        count += 1;
    }
    count
}

fn exact_cover_size(target: &[usize], balls: &[Vec<usize>]) -> usize {
    let mask_of = |set: &[usize]| set.iter().fold(0u64, |m, &u| m | (1u64 << u));
    let goal = mask_of(target);
    let masks: Vec<u64> = balls.iter().map(|b| mask_of(b)).collect();
    for k in 1..=target.len() {
        if cover_exists(goal, &masks, k, 0, 0) {
            return k;
        }
    }
    target.len()
}

fn cover_exists(goal: u64, masks: &[u64], left: usize, start: usize, acc: u64) -> bool {
    if acc & goal == goal {
        return true;
    }
    if left == 0 {
        return false;
    }
    (start..masks.len()).any(|i| cover_exists(goal, masks, left - 1, i + 1, acc | masks[i]))
}

/// Greedy maximal `delta`-separated subset, scanning points in index order.
pub fn separated_net(space: &FiniteMetricSpace, delta: f64) -> Result<Vec<usize>> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("net radius must be positive, got {delta}")));
    }
    let mut net: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        if net.iter().all(|&j| space.d(i, j) >= delta) {
            net.push(i);
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteMetricSpace {
        shortest_path_metric(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap()
    }

    #[test]
    fn holder_and_log_examples() {
        assert_eq!(Modulus::identity().eval(0.0).unwrap(), 0.0);
        let m = Modulus::Holder { l: 2.0, alpha: 0.5, beta: 0.0 };
        assert!((m.eval(4.0).unwrap() - 4.0).abs() < 1e-15);
        let lm = Modulus::LogModulus { beta: 1.0 };
        assert!((lm.eval((-2.0f64).exp()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_modulus_is_continuous_at_knee() {
        for beta in [0.5, 1.0, 2.0] {
            let m = Modulus::LogModulus { beta };
            let knee = (-(beta + 1.0)).exp();
            let left = m.eval(knee).unwrap();
            let right = m.eval(knee * (1.0 + 1e-12)).unwrap();
            assert!((left - right).abs() < 1e-9);
        }
    }

    #[test]
    fn modulus_domain_errors() {
        assert!(matches!(Modulus::identity().eval(-1.0), Err(Error::Domain(_))));
        let c = Modulus::Custom { samples: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)] };
        c.validate().unwrap();
        assert!((c.eval(1.5).unwrap() - 1.25).abs() < 1e-15);
        assert!(matches!(c.eval(3.0), Err(Error::Range { .. })));
    }

    #[test]
    fn custom_modulus_rejects_non_monotone() {
        let c = Modulus::Custom { samples: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn h_inverse_matches_power_law() {
        let m = Modulus::power(0.5);
        assert!((m.h_inverse(0.25) - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(m.snowflake_doubling_exponent(), Some(1));
        let capped = Modulus::Custom { samples: vec![(0.0, 0.0), (1.0, 1.0)] };
        // h estimated on [0,1] never exceeds 1 but 1/4 is reachable.
        assert!(capped.h_inverse(0.25).is_finite());
        assert!(capped.h_inverse(10.0).is_infinite());
    }

    #[test]
    fn snowflake_examples() {
        let two = FiniteMetricSpace::from_fn(2, |_, _| 4.0).unwrap();
        let s = snowflake_distance(&Modulus::power(0.5), &two).unwrap();
        assert_eq!(s.d(0, 1), 2.0);
        let p = path3();
        let s = snowflake_distance(&Modulus::power(0.5), &p).unwrap();
        assert_eq!(s.d(0, 1), 1.0);
        assert_eq!(s.d(1, 2), 1.0);
        assert!((s.d(0, 2) - 2f64.sqrt()).abs() < 1e-15);
        assert!(s.d(0, 2) < s.d(0, 1) + s.d(1, 2));
        assert_eq!(snowflake_distance(&Modulus::identity(), &p).unwrap(), p);
    }

    #[test]
    fn snowflake_rejects_superadditive_table() {
        // omega(2) = 3 > omega(1) + omega(1) = 2
        let c = Modulus::Custom { samples: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)] };
        assert!(matches!(snowflake_distance(&c, &path3()), Err(Error::Construction(_))));
    }

    #[test]
    fn shortest_paths() {
        let e = shortest_path_metric(&[(0, 1, 3.0)], 2).unwrap();
        assert_eq!(e.d(0, 1), 3.0);
        let tri = shortest_path_metric(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)], 3).unwrap();
        assert_eq!(tri.d(0, 2), 2.0);
        assert_eq!(path3().d(0, 2), 2.0);
        assert!(matches!(
            shortest_path_metric(&[(0, 1, 1.0)], 3),
            Err(Error::Disconnected(0, 2))
        ));
    }

    #[test]
    fn edge_list_parse_errors_carry_line() {
        let (edges, n) = parse_edge_list("# header\n0 1 2.5\n\n1 2 1\n").unwrap();
        assert_eq!(n, 3);
        assert_eq!(edges, vec![(0, 1, 2.5), (1, 2, 1.0)]);
        match parse_edge_list("0 1 1\n1 x 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("0 1 -1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn hausdorff_examples() {
        let p = path3();
        assert_eq!(hausdorff_distance(&p, &[0, 2], &[0, 2]).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&p, &[0], &[2]).unwrap(), 2.0);
        assert_eq!(hausdorff_distance(&p, &[0], &[1, 2]).unwrap(), 2.0);
        assert!(hausdorff_distance(&p, &[], &[1]).is_err());
    }

    #[test]
    fn doubling_examples() {
        let one = FiniteMetricSpace::new(1, vec![0.0]).unwrap();
        assert_eq!(doubling_constant_bruteforce(&one).unwrap().constant, 1);
        let two = FiniteMetricSpace::from_fn(2, |_, _| 1.0).unwrap();
        assert!(doubling_constant_bruteforce(&two).unwrap().constant <= 2);
        let uni = FiniteMetricSpace::from_fn(4, |_, _| 1.0).unwrap();
        let est = doubling_constant_bruteforce(&uni).unwrap();
        assert_eq!(est.constant, 4);
        assert!(est.exact);
        let big = FiniteMetricSpace::from_fn(70, |i, j| 1.0 + ((i + j) % 2) as f64 * 0.5).unwrap();
        assert!(matches!(doubling_constant_bruteforce(&big), Err(Error::Size { .. })));
    }

    #[test]
    fn nets() {
        let p = path3();
        assert_eq!(separated_net(&p, 10.0).unwrap(), vec![0]);
        assert_eq!(separated_net(&p, 0.5).unwrap(), vec![0, 1, 2]);
        assert_eq!(separated_net(&p, 1.5).unwrap(), vec![0, 2]);
        assert!(separated_net(&p, 0.0).is_err());
    }

    #[test]
    fn axioms_rejected() {
        assert!(FiniteMetricSpace::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(FiniteMetricSpace::new(2, vec![0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(FiniteMetricSpace::new(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0]).is_err());
    }
}
