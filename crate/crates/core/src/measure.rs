//! Finitely supported probability measures, exact Wasserstein-1 distances and
//! the Wasserstein mixing/quantization maps.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Metric};
use crate::numerics::{ceil_index, project_simplex};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Default cap on the combined support size handled by [`w1_discrete`].
pub const W1_SUPPORT_CAP: usize = 256;

/// Finitely supported probability measure `Σ_k weights[k] δ_{atoms[k]}`.
///
/// Atoms may repeat. The default carrier is a point index into a
/// [`FiniteMetricSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure<P>", bound(deserialize = "P: Deserialize<'de> + Clone"))]
pub struct DiscreteMeasure<P = usize> {
    atoms: Vec<P>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure<P> {
    atoms: Vec<P>,
    weights: Vec<f64>,
}

impl<P> TryFrom<RawMeasure<P>> for DiscreteMeasure<P> {
    type Error = Error;

    fn try_from(raw: RawMeasure<P>) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms, raw.weights)
    }
}

impl<P> DiscreteMeasure<P> {
    pub fn new(atoms: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Shape(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if atoms.is_empty() {
            return Err(Error::Construction("a probability measure needs at least one atom".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Construction(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Construction(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn dirac(p: P) -> Self {
        DiscreteMeasure {
            atoms: vec![p],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[P] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Atoms carrying positive weight.
    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.iter().filter(|(_, w)| *w > 0.0).map(|(p, _)| p)
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> DiscreteMeasure<Q> {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(f).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Drops zero-weight atoms.
    pub fn pruned(self) -> Self {
        let (atoms, weights) = self.atoms.into_iter().zip(self.weights).filter(|(_, w)| *w > 0.0).unzip();
        DiscreteMeasure { atoms, weights }
    }
}

impl<P: PartialEq> DiscreteMeasure<P> {
    /// Merges coincident atoms, summing their weights; first occurrence fixes the order.
    pub fn merged(self) -> Self {
        let mut atoms: Vec<P> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (p, w) in self.atoms.into_iter().zip(self.weights) {
            match atoms.iter().position(|q| *q == p) {
                Some(k) => weights[k] += w,
                None => {
                    atoms.push(p);
                    weights.push(w);
                }
            }
        }
        DiscreteMeasure { atoms, weights }
    }

    /// Total weight on atoms equal to `p`.
    pub fn mass_at(&self, p: &P) -> f64 {
        self.iter().filter(|(q, _)| *q == p).map(|(_, w)| w).sum()
    }
}

impl DiscreteMeasure<usize> {
    pub fn check_indices(&self, space: &FiniteMetricSpace) -> Result<()> {
        self.atoms.iter().try_for_each(|&a| space.check_index(a))
    }
}

/// `E_{Y~μ} d(Y, y)`, the Wasserstein-1 distance from `μ` to the point mass at `y`.
pub fn expected_distance<P, M: Metric<P> + ?Sized>(metric: &M, mu: &DiscreteMeasure<P>, y: &P) -> f64 {
    mu.iter().map(|(a, w)| w * metric.dist(a, y)).sum()
}

/// Wasserstein-1 distance to a point mass on a finite metric space.
pub fn w1_to_dirac(space: &FiniteMetricSpace, mu: &DiscreteMeasure, y: usize) -> Result<f64> {
    mu.check_indices(space)?;
    space.check_index(y)?;
    Ok(expected_distance(space, mu, &y))
}

/// Exact Wasserstein-1 distance on a finite metric space.
pub fn w1_discrete(space: &FiniteMetricSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.check_indices(space)?;
    nu.check_indices(space)?;
    w1_with_metric(space, mu, nu, W1_SUPPORT_CAP)
}

/// Exact Wasserstein-1 distance over any ground metric (min-cost flow).
pub fn w1_with_metric<P, M: Metric<P> + ?Sized>(
    metric: &M,
    mu: &DiscreteMeasure<P>,
    nu: &DiscreteMeasure<P>,
    cap: usize,
) -> Result<f64> {
    let size = mu.len() + nu.len();
    if size > cap {
        return Err(Error::Size { size, cap });
    }
    let cost: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|a| nu.atoms().iter().map(|b| metric.dist(a, b)).collect())
        .collect();
    Ok(transport_cost(&cost, mu.weights(), nu.weights()))
}

/// Min-cost transport between supplies `a` and demands `b` (successive shortest paths).
///
/// Residual masses below `1e-15` are treated as exhausted.
pub fn transport_cost(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut g = FlowGraph::new(m + n + 2);
    let (s, t) = (m + n, m + n + 1);
    for (i, &ai) in a.iter().enumerate() {
        if ai > 0.0 {
            g.add_edge(s, i, ai, 0.0);
        }
    }
    for (j, &bj) in b.iter().enumerate() {
        if bj > 0.0 {
            g.add_edge(m + j, t, bj, 0.0);
        }
    }
    for i in (0..m).filter(|&i| a[i] > 0.0) {
        for j in (0..n).filter(|&j| b[j] > 0.0) {
            g.add_edge(i, m + j, f64::INFINITY, cost[i][j]);
        }
    }
    g.min_cost_flow(s, t)
}

struct FlowEdge {
    to: usize,
    cap: f64,
    cost: f64,
}

struct FlowGraph {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

const FLOW_EPS: f64 = 1e-15;

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
    }

    fn min_cost_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adj.len();
        // All initial costs are nonnegative, so zero potentials are feasible.
        let mut potential = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev_edge = vec![usize::MAX; n];
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((Key(0.0), s)));
            while let Some(Reverse((Key(du), u))) = heap.pop() {
                if du > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= FLOW_EPS {
                        continue;
                    }
                    // Clamp tiny negative reduced costs left by rounding.
                    let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                    let alt = du + reduced;
                    if alt < dist[edge.to] {
                        dist[edge.to] = alt;
                        prev_edge[edge.to] = e;
                        heap.push(Reverse((Key(alt), edge.to)));
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                total += push * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Domain(format!("mixing weights {w:?} are not in the simplex")));
    }
    Ok(())
}

/// Convex combination `Σ w_n μ_n`.
///
/// Zero-weight atoms are pruned. With `merge` set, coincident atoms are
/// combined; otherwise the raw concatenation is preserved.
pub fn mix_wasserstein<P: Clone + PartialEq>(
    w: &[f64],
    measures: &[DiscreteMeasure<P>],
    merge: bool,
) -> Result<DiscreteMeasure<P>> {
    if w.len() != measures.len() || w.is_empty() {
        return Err(Error::Shape(format!("{} weights for {} measures", w.len(), measures.len())));
    }
    check_weights(w)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (&wn, mu) in w.iter().zip(measures) {
        for (p, wk) in mu.iter() {
            let x = wn * wk;
            if x > 0.0 {
                atoms.push(p.clone());
                weights.push(x);
            }
        }
    }
    let out = DiscreteMeasure { atoms, weights };
    Ok(if merge { out.merged() } else { out })
}

/// `Σ_i [P_Δ(u)]_i δ_{seq[⌈z_i⌉]}` with the ceiling clamped into the sequence.
pub fn quantize_measure<P: Clone>(u: &[f64], z: &[f64], dense_seq: &[P]) -> Result<DiscreteMeasure<P>> {
    if dense_seq.is_empty() {
        return Err(Error::Construction("dense sequence is empty".into()));
    }
    if u.len() != z.len() {
        return Err(Error::Shape(format!("u has {} entries, z has {}", u.len(), z.len())));
    }
    let weights = project_simplex(u)?;
    let atoms = z
        .iter()
        .map(|&zi| dense_seq[ceil_index(zi, dense_seq.len()).zero_based()].clone())
        .collect();
    Ok(DiscreteMeasure { atoms, weights })
}

/// One block `(u, z)` of quantization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantBlock {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

impl QuantBlock {
    /// Block placing all mass on the dense-sequence entry with 0-based index `k`.
    pub fn vertex(k: usize) -> Self {
        QuantBlock {
            u: vec![1.0],
            z: vec![(k + 1) as f64],
        }
    }

    /// Number of ceiling indices that fall outside `[1, q]`.
    pub fn clamped_count(&self, q: usize) -> usize {
        self.z.iter().filter(|&&z| ceil_index(z, q).clamped).count()
    }
}

/// Quantized mixing map `Σ_i w_i Q(u_i, z_i)`.
pub fn quantized_mixing_wasserstein<P: Clone + PartialEq>(
    w: &[f64],
    blocks: &[QuantBlock],
    dense_seq: &[P],
) -> Result<DiscreteMeasure<P>> {
    if w.len() != blocks.len() {
        return Err(Error::Shape(format!("{} weights for {} blocks", w.len(), blocks.len())));
    }
    let quantized = blocks
        .iter()
        .map(|b| quantize_measure(&b.u, &b.z, dense_seq))
        .collect::<Result<Vec<_>>>()?;
    mix_wasserstein(w, &quantized, false)
}

/// Index of the atom selected by a uniform draw `u ∈ [0, 1)`.
pub fn atom_for_uniform(weights: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        cum += w;
        if cum > u {
            return k;
        }
    }
    // Rounding left u above the cumulative sum: fall back to the last charged atom.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Draws one atom with probability equal to its weight; deterministic in `seed`.
pub fn sample<P: Clone>(mu: &DiscreteMeasure<P>, seed: u64) -> P {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(mu, &mut rng)
}

pub fn sample_with<P: Clone, R: Rng + ?Sized>(mu: &DiscreteMeasure<P>, rng: &mut R) -> P {
    let u: f64 = rng.gen();
    mu.atoms()[atom_for_uniform(mu.weights(), u)].clone()
}

/// `(1 − ε/N)^N`, the lower bound on the probability that all `N` sampled
/// outputs land within `N√ε` of their targets when the sup W1 error is below `ε`.
pub fn finite_set_success_bound(eps: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    if !(eps > 0.0) || eps / n as f64 > 1.0 {
        return Err(Error::Domain(format!("need 0 < eps <= N, got eps={eps}, N={n}")));
    }
    Ok((1.0 - eps / n as f64).powi(n as i32))
}

/// `(1 − √ε/N)^N`: the bound that Markov's inequality gives for the same event.
/// Each of the `N` draws misses `N√ε` with probability at most `ε / (N√ε)`.
pub fn markov_success_bound(eps: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    if !(eps > 0.0) || eps.sqrt() / n as f64 > 1.0 {
        return Err(Error::Domain(format!("need 0 < sqrt(eps) <= N, got eps={eps}, N={n}")));
    }
    Ok((1.0 - eps.sqrt() / n as f64).powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn two_points(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(2, |_, _| d).unwrap()
    }

    #[test]
    fn dirac_distance_examples() {
        let s = two_points(1.0);
        assert_eq!(w1_to_dirac(&s, &DiscreteMeasure::dirac(1), 1).unwrap(), 0.0);
        let half = DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        assert_eq!(w1_to_dirac(&s, &half, 0).unwrap(), 0.5);
        assert_eq!(w1_to_dirac(&two_points(3.0), &DiscreteMeasure::dirac(0), 1).unwrap(), 3.0);
        assert!(matches!(w1_to_dirac(&s, &half, 5), Err(Error::Index { .. })));
    }

    #[test]
    fn w1_examples() {
        let s = two_points(2.0);
        let mu = DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![0, 1], vec![0.75, 0.25]).unwrap();
        assert_eq!(w1_discrete(&s, &mu, &mu).unwrap(), 0.0);
        assert_eq!(w1_discrete(&s, &DiscreteMeasure::dirac(0), &DiscreteMeasure::dirac(1)).unwrap(), 2.0);
        let got = w1_discrete(&s, &mu, &nu).unwrap();
        let cost = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        assert!((got - 0.5).abs() < 1e-15);
        assert!((got - oracle::w1_lp(&cost, mu.weights(), nu.weights())).abs() < 1e-12);
    }

    #[test]
    fn w1_support_cap() {
        let s = two_points(1.0);
        let w = vec![1.0 / 200.0; 200];
        let big = DiscreteMeasure::new(vec![0; 200], w).unwrap();
        assert!(matches!(w1_discrete(&s, &big, &big), Err(Error::Size { .. })));
    }

    #[test]
    fn mixing_examples() {
        let a = DiscreteMeasure::dirac(0usize);
        let b = DiscreteMeasure::new(vec![1, 2], vec![0.3, 0.7]).unwrap();
        assert_eq!(mix_wasserstein(&[0.0, 1.0], &[a.clone(), b.clone()], false).unwrap(), b);
        let half = mix_wasserstein(&[0.5, 0.5], &[a, DiscreteMeasure::dirac(1)], false).unwrap();
        assert_eq!(half, DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap());
        let same = mix_wasserstein(&[0.5, 0.5], &[DiscreteMeasure::dirac(3), DiscreteMeasure::dirac(3)], true).unwrap();
        assert_eq!(same, DiscreteMeasure::dirac(3));
        assert!(mix_wasserstein(&[1.0], &[DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1)], false).is_err());
    }

    #[test]
    fn quantize_examples() {
        let seq = ['a', 'b'];
        let q1 = quantize_measure(&[0.3], &[2.0], &seq).unwrap();
        assert_eq!(q1, DiscreteMeasure::dirac('b'));
        let q = quantize_measure(&[1.0, 1.0], &[1.0, 2.0], &seq).unwrap();
        assert_eq!(q, DiscreteMeasure::new(vec!['a', 'b'], vec![0.5, 0.5]).unwrap());
        let q = quantize_measure(&[5.0, 0.0], &[1.0, 1.0], &seq).unwrap();
        assert_eq!(q.merged().pruned(), DiscreteMeasure::dirac('a'));
        assert!(quantize_measure::<char>(&[1.0], &[1.0], &[]).is_err());
    }

    #[test]
    fn quantized_mixing_vertex() {
        let seq = [10usize, 20, 30];
        let blocks = vec![QuantBlock::vertex(0), QuantBlock { u: vec![0.0, 1.0], z: vec![2.0, 3.0] }];
        let m = quantized_mixing_wasserstein(&[0.0, 1.0], &blocks, &seq).unwrap();
        assert_eq!(m, quantize_measure(&[0.0, 1.0], &[2.0, 3.0], &seq).unwrap().pruned());
    }

    #[test]
    fn sampling() {
        assert_eq!(sample(&DiscreteMeasure::dirac(7usize), 1), 7);
        let mu = DiscreteMeasure::new(vec![0usize, 1, 2], vec![0.5, 0.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<usize> = (0..100_000).map(|_| sample_with(&mu, &mut rng)).collect();
        assert!(!draws.contains(&1));
        let freq = draws.iter().filter(|&&d| d == 0).count() as f64 / draws.len() as f64;
        assert!((freq - 0.5).abs() < 0.01);
        assert_eq!(sample(&mu, 42), sample(&mu, 42));
    }

    #[test]
    fn success_bound() {
        assert!((finite_set_success_bound(1e-12, 3).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(finite_set_success_bound(0.5, 1).unwrap(), 0.5);
        assert!((finite_set_success_bound(0.2, 2).unwrap() - 0.81).abs() < 1e-15);
        assert!(finite_set_success_bound(3.0, 2).is_err());
    }

    #[test]
    fn two_atom_kernel_breaks_the_eps_bound_but_not_markov() {
        // One source point, eps = 1/4, radius N√ε = 1/2. Put mass p on an atom at
        // distance 0.51 and the rest on f(x): W1 = 0.51 p stays below eps.
        let (eps, n, far) = (0.25, 1, 0.51);
        let p = 0.99 * eps / far;
        let w1 = p * far;
        assert!(w1 < eps);
        let success = 1.0 - p;
        assert!(success < finite_set_success_bound(eps, n).unwrap());
        assert!(success >= markov_success_bound(eps, n).unwrap());
        assert!(markov_success_bound(4.0, 1).is_err());
    }

    #[test]
    fn json_shape() {
        let mu = DiscreteMeasure::new(vec![0usize, 2], vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(s, r#"{"atoms":[0,2],"weights":[0.25,0.75]}"#);
        assert_eq!(serde_json::from_str::<DiscreteMeasure>(&s).unwrap(), mu);
        assert!(serde_json::from_str::<DiscreteMeasure>(r#"{"atoms":[0],"weights":[0.5]}"#).is_err());
    }
}
