//! `x ↦ Σ_n [P_Δ(f̂(φ̂(x)))]_n Q(u^n, z^n)`: a ReLU core, a simplex head and quantized blocks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::relu::{fit_universal, FitOptions, FitReport, ReluNet};
use crate::error::{Error, Result};
use crate::feature::{kuratowski_embed, CompressedFeature, DistanceFeature};
use crate::measure::{quantized_mixing_wasserstein, w1_to_dirac, DiscreteMeasure, QuantBlock};
use crate::metric::FiniteMetricSpace;
use crate::numerics::{project_simplex, softmax};
use crate::qas::{Barycentric, Norm};

/// How core outputs are turned into simplex weights.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "head", rename_all = "snake_case")]
pub enum HeadMode {
    #[default]
    Projection,
    Softmax {
        temperature: f64,
    },
}

impl HeadMode {
    pub fn weights(&self, logits: &[f64]) -> Result<Vec<f64>> {
        match *self {
            HeadMode::Projection => project_simplex(logits),
            HeadMode::Softmax { temperature } => {
                if !(temperature > 0.0) {
                    return Err(Error::Domain(format!("softmax temperature {temperature} must be positive")));
                }
                softmax(&logits.iter().map(|v| v / temperature).collect::<Vec<_>>())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedApproximator<P> {
    core: ReluNet,
    blocks: Vec<QuantBlock>,
    dense_seq: Vec<P>,
    head: HeadMode,
}

impl<P: Clone + PartialEq> RandomizedApproximator<P> {
    pub fn new(core: ReluNet, blocks: Vec<QuantBlock>, dense_seq: Vec<P>, head: HeadMode) -> Result<Self> {
        if core.output_dim() != blocks.len() {
            return Err(Error::Shape(format!(
                "core emits {} logits for {} quantized blocks",
                core.output_dim(),
                blocks.len()
            )));
        }
        if dense_seq.is_empty() {
            return Err(Error::Construction("dense sequence is empty".into()));
        }
        for b in &blocks {
            if b.u.len() != b.z.len() || b.u.is_empty() {
                return Err(Error::Shape("quantized block needs matching non-empty u and z".into()));
            }
        }
        Ok(RandomizedApproximator {
            core,
            blocks,
            dense_seq,
            head,
        })
    }

    /// One single-atom block per entry of `atoms`, which doubles as the dense sequence.
    pub fn over_atoms(core: ReluNet, atoms: Vec<P>, head: HeadMode) -> Result<Self> {
        let blocks = (0..atoms.len()).map(QuantBlock::vertex).collect();
        Self::new(core, blocks, atoms, head)
    }

    pub fn core(&self) -> &ReluNet {
        &self.core
    }

    pub fn blocks(&self) -> &[QuantBlock] {
        &self.blocks
    }

    pub fn dense_seq(&self) -> &[P] {
        &self.dense_seq
    }

    pub fn head(&self) -> HeadMode {
        self.head
    }

    pub fn with_head(mut self, head: HeadMode) -> Self {
        self.head = head;
        self
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Mixture weights `P_Δ(f̂(φ̂(x)))` (or the softmax variant).
    pub fn head_weights(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.head.weights(&self.core.forward(phi)?)
    }

    /// The output measure; atoms are kept unmerged, one run per block.
    pub fn evaluate(&self, phi: &[f64]) -> Result<DiscreteMeasure<P>> {
        let w = self.head_weights(phi)?;
        quantized_mixing_wasserstein(&w, &self.blocks, &self.dense_seq)
    }

    /// Barycenter of the output measure.
    pub fn derandomize<S: Barycentric<Point = P>>(&self, space: &S, phi: &[f64]) -> Result<P> {
        space.barycenter(&self.evaluate(phi)?)
    }
}

/// Heaviest atom after merging duplicates; ties go to the earliest atom.
pub fn argmax_atom<P: Clone + PartialEq>(mu: &DiscreteMeasure<P>) -> P {
    let merged = mu.clone().merged();
    let mut best = 0;
    for (k, &w) in merged.weights().iter().enumerate() {
        if w > merged.weights()[best] {
            best = k;
        }
    }
    merged.atoms()[best].clone()
}

/// Logit margin for one-hot targets: `P_Δ` returns the exact vertex while every coordinate error stays below 1/2.
pub const ONE_HOT_MARGIN: f64 = 2.0;

pub fn one_hot_logits(k: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = ONE_HOT_MARGIN;
    v
}

/// Resource limits for a finite-map fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteBudget {
    pub capacity: usize,
    /// Number of output atoms `N`; defaults to the size of the range of `f`.
    pub n_atoms: Option<usize>,
    /// Retained feature coordinates `d`; defaults to all of them.
    pub feature_dim: Option<usize>,
}

impl FiniteBudget {
    pub fn capacity(capacity: usize) -> Self {
        FiniteBudget {
            capacity,
            n_atoms: None,
            feature_dim: None,
        }
    }
}

/// Approximator of `f : X → Y` between finite spaces, using Kuratowski features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMapModel {
    pub approximator: RandomizedApproximator<usize>,
    pub feature: DistanceFeature,
    pub compression: CompressedFeature,
    pub atoms: Vec<usize>,
    pub fit_error: f64,
    pub ridge_fallback: bool,
}

impl FiniteMapModel {
    pub fn features(&self, x: usize) -> Result<Vec<f64>> {
        if x >= self.feature.len() {
            return Err(Error::Index {
                index: x,
                len: self.feature.len(),
            });
        }
        self.compression.apply(self.feature.embed(x))
    }

    pub fn evaluate(&self, x: usize) -> Result<DiscreteMeasure<usize>> {
        self.approximator.evaluate(&self.features(x)?)
    }

    /// `W_1(T̂(x), δ_{f(x)})` for every source point.
    pub fn errors(&self, target: &FiniteMetricSpace, f: &[usize]) -> Result<Vec<f64>> {
        (0..f.len()).map(|x| w1_to_dirac(target, &self.evaluate(x)?, f[x])).collect()
    }

    pub fn sup_error(&self, target: &FiniteMetricSpace, f: &[usize]) -> Result<f64> {
        Ok(self.errors(target, f)?.into_iter().fold(0.0, f64::max))
    }
}

/// Sorted distinct values of `f` with their multiplicities.
fn range_counts(f: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut vals = f.to_vec();
    vals.sort_unstable();
    let mut range: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in vals {
        if range.last() == Some(&v) {
            *counts.last_mut().expect("nonempty") += 1;
        } else {
            range.push(v);
            counts.push(1);
        }
    }
    (range, counts)
}

/// Weighted k-medoids over `candidates`: farthest-point start, then best-swap descent.
pub fn k_medoids(space: &FiniteMetricSpace, candidates: &[usize], weights: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 || candidates.is_empty() {
        return Err(Error::Construction("k-medoids needs k >= 1 and at least one candidate".into()));
    }
    if k >= candidates.len() {
        return Ok(candidates.to_vec());
    }
    let cost = |medoids: &[usize]| -> f64 {
        candidates
            .iter()
            .zip(weights)
            .map(|(&c, &w)| w as f64 * medoids.iter().map(|&m| space.d(c, m)).fold(f64::INFINITY, f64::min))
            .sum()
    };
    let heaviest = (0..candidates.len()).max_by_key(|&i| (weights[i], std::cmp::Reverse(i))).expect("nonempty");
    let mut medoids = vec![candidates[heaviest]];
    while medoids.len() < k {
        let next = candidates
            .iter()
            .copied()
            .filter(|c| !medoids.contains(c))
            .max_by(|&a, &b| {
                let da = medoids.iter().map(|&m| space.d(a, m)).fold(f64::INFINITY, f64::min);
                let db = medoids.iter().map(|&m| space.d(b, m)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k < number of candidates");
        medoids.push(next);
    }
    let mut best = cost(&medoids);
    loop {
        let mut improved = false;
        for slot in 0..k {
            for &c in candidates {
                if medoids.contains(&c) {
                    continue;
                }
                let old = medoids[slot];
                medoids[slot] = c;
                let trial = cost(&medoids);
                if trial < best - 1e-12 {
                    best = trial;
                    improved = true;
                } else {
                    medoids[slot] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    medoids.sort_unstable();
    Ok(medoids)
}

/// Fits `f : X → Y` (given as `f[x]`) with one-hot heads over `N` atoms of `Y`.
pub fn build_finite_map(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    f: &[usize],
    budget: &FiniteBudget,
    seed: u64,
) -> Result<FiniteMapModel> {
    if f.len() != source.len() || f.is_empty() {
        return Err(Error::Shape(format!("map has {} values for {} source points", f.len(), source.len())));
    }
    for &y in f {
        target.check_index(y)?;
    }
    let (range, counts) = range_counts(f);
    let n_atoms = budget.n_atoms.unwrap_or(range.len());
    let atoms = k_medoids(target, &range, &counts, n_atoms)?;

    let anchors: Vec<usize> = (0..source.len()).collect();
    let feature = kuratowski_embed(source, &anchors)?;
    let d = budget.feature_dim.unwrap_or(feature.dim());
    if d == 0 || d > feature.dim() {
        return Err(Error::Range {
            value: d as f64,
            lo: 1.0,
            hi: feature.dim() as f64,
        });
    }
    let compression = CompressedFeature { d, norm: Norm::Linf };

    let xs: Vec<Vec<f64>> = (0..source.len()).map(|x| compression.apply(feature.embed(x))).collect::<Result<_>>()?;
    let ys: Vec<Vec<f64>> = f
        .iter()
        .map(|&y| {
            let nearest = (0..atoms.len())
                .min_by(|&a, &b| target.d(y, atoms[a]).total_cmp(&target.d(y, atoms[b])))
                .expect("at least one atom");
            one_hot_logits(nearest, atoms.len())
        })
        .collect();
    let FitReport {
        net,
        max_error,
        ridge_fallback,
    } = fit_universal(&xs, &ys, &FitOptions::new(budget.capacity, seed))?;

    let blocks = atoms.iter().map(|&a| QuantBlock::vertex(a)).collect();
    let dense_seq: Vec<usize> = (0..target.len()).collect();
    Ok(FiniteMapModel {
        approximator: RandomizedApproximator::new(net, blocks, dense_seq, HeadMode::Projection)?,
        feature,
        compression,
        atoms,
        fit_error: max_error,
        ridge_fallback,
    })
}

/// One point of a capacity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub capacity: usize,
    pub sup_error: f64,
}

/// Increases the capacity through `capacities` until the sup error drops to `tolerance`.
pub fn sweep_finite_map(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    f: &[usize],
    capacities: &[usize],
    n_atoms: Option<usize>,
    seed: u64,
    tolerance: f64,
) -> Result<(Option<FiniteMapModel>, Vec<SweepPoint>)> {
    let mut trace = Vec::new();
    for &capacity in capacities {
        let budget = FiniteBudget {
            capacity,
            n_atoms,
            feature_dim: None,
        };
        let model = build_finite_map(source, target, f, &budget, seed)?;
        let sup_error = model.sup_error(target, f)?;
        trace.push(SweepPoint { capacity, sup_error });
        if sup_error <= tolerance {
            return Ok((Some(model), trace));
        }
    }
    Ok((None, trace))
}

/// `D + 1` affinely independent vertices in `R^D` with exact barycentric coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSimplex {
    vertices: Vec<Vec<f64>>,
}

impl CornerSimplex {
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices.first().map_or(0, Vec::len);
        if vertices.len() != dim + 1 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Shape(format!("{} vertices do not span a simplex in R^{dim}", vertices.len())));
        }
        let s = CornerSimplex { vertices };
        if dim > 0 && s.edge_matrix().lu().try_inverse().is_none() {
            return Err(Error::Construction("simplex vertices are affinely dependent".into()));
        }
        Ok(s)
    }

    /// Simplex containing every point with coordinates bounded away from zero by `margin`-dependent slack.
    pub fn enclosing(points: &[Vec<f64>], margin: f64) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.is_empty() || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("enclosing simplex needs equal-length points".into()));
        }
        if !(margin >= 0.0) {
            return Err(Error::Domain(format!("margin {margin} must be nonnegative")));
        }
        let mut base = vec![0.0; dim];
        let mut width = vec![0.0; dim];
        for j in 0..dim {
            let lo = points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
            let r = if hi > lo { hi - lo } else { 1.0 };
            base[j] = lo - margin * r;
            width[j] = r * (1.0 + 2.0 * margin);
        }
        let stretch = (dim + 1) as f64;
        let mut vertices = vec![base.clone()];
        for j in 0..dim {
            let mut v = base.clone();
            v[j] += stretch * width[j];
            vertices.push(v);
        }
        Ok(CornerSimplex { vertices })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    fn edge_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.vertices[j + 1][i] - self.vertices[0][i])
    }

    /// Barycentric coordinates `λ` with `Σ λ_k v_k = y` (possibly negative outside the simplex).
    pub fn coordinates(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if y.len() != d {
            return Err(Error::Shape(format!("point in R^{} for a simplex in R^{d}", y.len())));
        }
        if d == 0 {
            return Ok(vec![1.0]);
        }
        let rhs = DVector::from_fn(d, |i, _| y[i] - self.vertices[0][i]);
        let lam = self
            .edge_matrix()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Construction("simplex vertices are affinely dependent".into()))?;
        let mut out = Vec::with_capacity(d + 1);
        out.push(1.0 - lam.iter().sum::<f64>());
        out.extend(lam.iter());
        Ok(out)
    }
}

/// Approximator into `R^D` whose atoms are simplex vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanModel {
    pub approximator: RandomizedApproximator<Vec<f64>>,
    pub simplex: CornerSimplex,
    pub fit_error: f64,
    pub ridge_fallback: bool,
}

impl EuclideanModel {
    pub fn evaluate(&self, phi: &[f64]) -> Result<DiscreteMeasure<Vec<f64>>> {
        self.approximator.evaluate(phi)
    }

    /// Barycenter `Σ_n w_n v_n` of the output measure.
    pub fn predict(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let mu = self.evaluate(phi)?;
        let mut out = vec![0.0; self.simplex.dim()];
        for (v, w) in mu.iter() {
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        Ok(out)
    }
}

/// Fits the barycentric coordinates of `targets` in `simplex` from feature vectors.
pub fn build_euclidean(
    features: &[Vec<f64>],
    targets: &[Vec<f64>],
    simplex: CornerSimplex,
    opts: &FitOptions,
) -> Result<EuclideanModel> {
    let coords: Vec<Vec<f64>> = targets.iter().map(|y| simplex.coordinates(y)).collect::<Result<_>>()?;
    let fit = fit_universal(features, &coords, opts)?;
    Ok(EuclideanModel {
        approximator: RandomizedApproximator::over_atoms(fit.net, simplex.vertices.clone(), HeadMode::Projection)?,
        simplex,
        fit_error: fit.max_error,
        ridge_fallback: fit.ridge_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::relu::Dense;
    use crate::metric::shortest_path_metric;
    use crate::numerics::weighted_rows;
    use crate::qas::{Euclidean, QasSpace};

    fn path(n: usize) -> FiniteMetricSpace {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        shortest_path_metric(&edges, n).unwrap()
    }

    #[test]
    fn evaluate_matches_double_sum() {
        let core = ReluNet::new(vec![Dense::new(vec![vec![1.0], vec![-1.0]], vec![0.2, 0.5]).unwrap()]).unwrap();
        let blocks = vec![
            QuantBlock { u: vec![0.3, 0.9], z: vec![1.2, 3.0] },
            QuantBlock { u: vec![1.0], z: vec![-4.0] },
        ];
        let seq = vec![10usize, 11, 12, 13];
        let m = RandomizedApproximator::new(core.clone(), blocks.clone(), seq.clone(), HeadMode::Projection).unwrap();
        let phi = [0.1];
        let mu = m.evaluate(&phi).unwrap();
        let outer = project_simplex(&core.forward(&phi).unwrap()).unwrap();
        let mut expected: Vec<(usize, f64)> = Vec::new();
        for (n, b) in blocks.iter().enumerate() {
            let inner = project_simplex(&b.u).unwrap();
            for (q, z) in b.z.iter().enumerate() {
                let idx = (z.ceil().max(1.0) as usize).min(seq.len()) - 1;
                expected.push((seq[idx], outer[n] * inner[q]));
            }
        }
        let expected: Vec<_> = expected.into_iter().filter(|(_, w)| *w > 0.0).collect();
        assert_eq!(mu.len(), expected.len());
        for ((a, w), (ea, ew)) in mu.iter().zip(&expected) {
            assert_eq!(a, ea);
            assert!((w - ew).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let core = ReluNet::new(vec![Dense::zeros(1, 3)]).unwrap();
        assert!(RandomizedApproximator::over_atoms(core.clone(), vec![0usize, 1], HeadMode::Projection).is_err());
        assert!(RandomizedApproximator::<usize>::over_atoms(core, vec![], HeadMode::Projection).is_err());
    }

    #[test]
    fn finite_map_interpolates_with_full_range() {
        let x = path(7);
        let y = path(4);
        let f = vec![0, 0, 1, 3, 2, 2, 1];
        let model = build_finite_map(&x, &y, &f, &FiniteBudget::capacity(16), 5).unwrap();
        assert_eq!(model.atoms, vec![0, 1, 2, 3]);
        assert!(model.sup_error(&y, &f).unwrap() <= 1e-6);
    }

    #[test]
    fn fewer_atoms_uses_medoids() {
        let x = path(6);
        let y = path(6);
        let f: Vec<usize> = (0..6).collect();
        let medoids = k_medoids(&y, &f, &[1; 6], 2).unwrap();
        assert_eq!(medoids.len(), 2);
        let budget = FiniteBudget {
            capacity: 12,
            n_atoms: Some(2),
            feature_dim: None,
        };
        let model = build_finite_map(&x, &y, &f, &budget, 1).unwrap();
        let errs = model.errors(&y, &f).unwrap();
        for (xi, e) in errs.iter().enumerate() {
            let best = medoids.iter().map(|&m| y.d(xi, m)).fold(f64::INFINITY, f64::min);
            assert!((e - best).abs() < 1e-9, "x={xi}: {e} vs {best}");
        }
    }

    #[test]
    fn simplex_coordinates_roundtrip() {
        let pts = vec![vec![0.0, 1.0, -2.0], vec![3.0, 1.5, 0.0], vec![1.0, 0.0, 5.0]];
        let s = CornerSimplex::enclosing(&pts, 0.1).unwrap();
        for p in &pts {
            let lam = s.coordinates(p).unwrap();
            assert!(lam.iter().all(|&l| l > 0.0));
            assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let back = weighted_rows(&lam, s.vertices()).unwrap();
            for (a, b) in back.iter().zip(p) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(CornerSimplex::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).is_err());
    }

    #[test]
    fn euclidean_prediction_is_barycenter() {
        let xs: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64 / 24.0]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0].sin(), x[0] * x[0]]).collect();
        let s = CornerSimplex::enclosing(&ys, 0.1).unwrap();
        let m = build_euclidean(&xs, &ys, s, &FitOptions::new(30, 2)).unwrap();
        let space = Euclidean::new(2, Norm::L2);
        for x in &xs {
            let a = m.predict(x).unwrap();
            let b = m.approximator.derandomize(&space, x).unwrap();
            let w = m.approximator.head_weights(x).unwrap();
            let c = weighted_rows(&w, m.simplex.vertices()).unwrap();
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() < 1e-12 && (a[k] - c[k]).abs() < 1e-12);
            }
        }
        assert!(space.quant_dim() == 2);
    }

    #[test]
    fn argmax_breaks_ties_early() {
        let mu = DiscreteMeasure::new(vec![3usize, 1, 3, 2], vec![0.2, 0.4, 0.2, 0.2]).unwrap();
        assert_eq!(argmax_atom(&mu), 3);
        let tie = DiscreteMeasure::new(vec![5usize, 4], vec![0.5, 0.5]).unwrap();
        assert_eq!(argmax_atom(&tie), 5);
    }
}
