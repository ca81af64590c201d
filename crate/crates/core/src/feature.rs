//! Feature maps into finite-dimensional normed spaces and coordinate
//! truncation operators.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{separated_net, FiniteMetricSpace};
use crate::qas::Norm;

/// Bi-Lipschitz ratios `‖φ(x) − φ(y)‖ / d(x, y)` over all distinct pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceFeatureKind {
    Kuratowski,
    Landmark { delta: f64 },
}

/// `φ(x) = (d(x, a))_{a ∈ anchors}` tabulated for every point, with the ℓ∞ norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceFeature {
    pub kind: DistanceFeatureKind,
    pub anchors: Vec<usize>,
    table: Vec<Vec<f64>>,
    pub bounds: LipschitzBounds,
}

impl DistanceFeature {
    fn build(space: &FiniteMetricSpace, anchors: Vec<usize>, kind: DistanceFeatureKind) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Construction("feature map needs at least one anchor".into()));
        }
        for &a in &anchors {
            space.check_index(a)?;
        }
        let table: Vec<Vec<f64>> = (0..space.len())
            .map(|x| anchors.iter().map(|&a| space.d(x, a)).collect())
            .collect();
        let mut feature = DistanceFeature {
            kind,
            anchors,
            table,
            bounds: LipschitzBounds { lower: f64::INFINITY, upper: 0.0 },
        };
        feature.bounds = feature.measure_bounds(space);
        Ok(feature)
    }

    fn measure_bounds(&self, space: &FiniteMetricSpace) -> LipschitzBounds {
        let n = space.len();
        let (mut lower, mut upper) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = Norm::Linf.dist(&self.table[i], &self.table[j]) / space.d(i, j);
                lower = lower.min(r);
                upper = upper.max(r);
            }
        }
        if n < 2 {
            lower = 1.0;
            upper = 1.0;
        }
        LipschitzBounds { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.anchors.len()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn embed(&self, x: usize) -> &[f64] {
        &self.table[x]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    /// Injective on the point set (exhaustive pair check).
    pub fn is_injective(&self) -> bool {
        self.bounds.lower > 0.0
    }
}

/// Fréchet–Kuratowski embedding into `(R^{|anchors|}, ℓ∞)`.
pub fn kuratowski_embed(space: &FiniteMetricSpace, anchors: &[usize]) -> Result<DistanceFeature> {
    DistanceFeature::build(space, anchors.to_vec(), DistanceFeatureKind::Kuratowski)
}

/// Distances to a greedy maximal `delta`-separated net.
pub fn landmark_embed(space: &FiniteMetricSpace, delta: f64) -> Result<DistanceFeature> {
    let net = separated_net(space, delta)?;
    DistanceFeature::build(space, net, DistanceFeatureKind::Landmark { delta })
}

/// Real Fourier amplitudes of uniform circle samples, ordered `[a0, a1, b1, a2, b2, ...]`.
///
/// `u(θ_j) = a0 + Σ_k a_k cos kθ_j + b_k sin kθ_j` for band-limited `u`.
pub fn schauder_truncate(samples: &[f64], n: usize) -> Result<Vec<f64>> {
    let g = samples.len();
    if g < 2 || !g.is_power_of_two() {
        return Err(Error::Domain(format!("grid size {g} must be a power of two >= 2")));
    }
    if n == 0 || n > g / 2 {
        return Err(Error::Range {
            value: n as f64,
            lo: 1.0,
            hi: (g / 2) as f64,
        });
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&u| Complex::new(u, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(g).process(&mut buf);
    let scale = 1.0 / g as f64;
    let mut out = Vec::with_capacity(n);
    for idx in 0..n {
        let k = idx.div_ceil(2);
        let v = if idx == 0 {
            buf[0].re * scale
        } else if idx % 2 == 1 {
            2.0 * buf[k].re * scale
        } else {
            -2.0 * buf[k].im * scale
        };
        out.push(v);
    }
    Ok(out)
}

/// Evaluates an amplitude vector `[a0, a1, b1, ...]` on a uniform grid of size `g`.
pub fn fourier_synthesize(coeffs: &[f64], g: usize) -> Vec<f64> {
    (0..g)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / g as f64;
            coeffs
                .iter()
                .enumerate()
                .map(|(idx, &c)| {
                    let k = (idx.div_ceil(2)) as f64;
                    if idx == 0 {
                        c
                    } else if idx % 2 == 1 {
                        c * (k * theta).cos()
                    } else {
                        c * (k * theta).sin()
                    }
                })
                .sum()
        })
        .collect()
}

/// Mean square of an amplitude vector, `a0² + ½ Σ (a_k² + b_k²)`.
pub fn amplitude_energy(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| if i == 0 { c * c } else { 0.5 * c * c })
        .sum()
}

/// Coordinate truncations `T_n x = (x_1, …, x_n, 0, …)` on `R^D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BapFamily {
    pub max_rank: usize,
    pub norm: Norm,
}

impl BapFamily {
    pub fn new(max_rank: usize, norm: Norm) -> Self {
        BapFamily { max_rank, norm }
    }

    /// Operator-norm bound of the family; coordinate projections are nonexpansive.
    pub fn norm_bound(&self) -> f64 {
        1.0
    }

    pub fn truncate(&self, x: &[f64], n: usize) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &v)| if i < n { v } else { 0.0 }).collect()
    }

    pub fn truncation_error(&self, x: &[f64], n: usize) -> f64 {
        self.norm.of(x.iter().skip(n).copied())
    }
}

/// `min { n : max_{x ∈ K} ‖T_n x − x‖ <= eps }`.
pub fn bap_rate(b: &BapFamily, k: &[Vec<f64>], eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut best = f64::INFINITY;
    for n in 1..=b.max_rank {
        let worst = k.iter().map(|x| b.truncation_error(x, n)).fold(0.0, f64::max);
        if worst <= eps {
            return Ok(n);
        }
        best = best.min(worst);
    }
    Err(Error::Saturation { max_rank: b.max_rank, best })
}

/// `φ̂ = ι⁻¹ ∘ T_d ∘ φ`: the first `d` feature coordinates, with the restricted norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressedFeature {
    pub d: usize,
    pub norm: Norm,
}

impl CompressedFeature {
    pub fn apply(&self, phi_x: &[f64]) -> Result<Vec<f64>> {
        if self.d > phi_x.len() {
            return Err(Error::Range {
                value: self.d as f64,
                lo: 1.0,
                hi: phi_x.len() as f64,
            });
        }
        Ok(phi_x[..self.d].to_vec())
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.norm.dist(a, b)
    }
}

pub fn compressed_feature(target_dim: usize, b: &BapFamily, d: usize) -> Result<CompressedFeature> {
    if d == 0 || d > target_dim {
        return Err(Error::Range {
            value: d as f64,
            lo: 1.0,
            hi: target_dim as f64,
        });
    }
    Ok(CompressedFeature { d, norm: b.norm })
}

/// Reads function samples stored as CSV columns (one grid value per row, header required).
pub fn read_sample_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let width = rdr.headers()?.len();
    let mut cols = vec![Vec::new(); width];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                line: row + 2,
                msg: format!("column {c}: `{field}`: {e}"),
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fourier_amplitudes_naive;
    use std::f64::consts::TAU;

    #[test]
    fn kuratowski_examples() {
        let one = FiniteMetricSpace::new(1, vec![0.0]).unwrap();
        assert_eq!(kuratowski_embed(&one, &[0]).unwrap().embed(0), &[0.0]);
        let two = FiniteMetricSpace::from_fn(2, |_, _| 3.0).unwrap();
        let phi = kuratowski_embed(&two, &[0, 1]).unwrap();
        assert_eq!(phi.embed(0), &[0.0, 3.0]);
        assert_eq!(phi.embed(1), &[3.0, 0.0]);
        assert_eq!(phi.bounds, LipschitzBounds { lower: 1.0, upper: 1.0 });
        assert!(kuratowski_embed(&two, &[]).is_err());
    }

    #[test]
    fn landmark_examples() {
        let n = 32;
        let circle = FiniteMetricSpace::from_fn(n, |i, j| {
            crate::qas::circle_distance(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64)
        })
        .unwrap();
        let lm = landmark_embed(&circle, 0.8).unwrap();
        assert!(lm.bounds.lower > 0.0);
        assert!(lm.bounds.upper <= 1.0 + 1e-12);
        let single = landmark_embed(&circle, 10.0).unwrap();
        assert_eq!(single.anchors, vec![0]);
        let full = landmark_embed(&circle, 1e-3).unwrap();
        assert_eq!(full.table(), kuratowski_embed(&circle, &(0..n).collect::<Vec<_>>()).unwrap().table());
    }

    #[test]
    fn fourier_examples() {
        let g = 64;
        let constant = vec![2.5; g];
        let c = schauder_truncate(&constant, 9).unwrap();
        assert!((c[0] - 2.5).abs() < 1e-14);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-14));
        let cos: Vec<f64> = (0..g).map(|j| (TAU * j as f64 / g as f64).cos()).collect();
        let c = schauder_truncate(&cos, 9).unwrap();
        let naive = fourier_amplitudes_naive(&cos, 9);
        assert!((c[1] - 1.0).abs() < 1e-12);
        for (i, (x, y)) in c.iter().zip(&naive).enumerate() {
            assert!((x - y).abs() < 1e-12);
            if i != 1 {
                assert!(x.abs() < 1e-12);
            }
        }
        assert!(schauder_truncate(&cos, 33).is_err());
        assert!(schauder_truncate(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn bap_examples() {
        let b = BapFamily::new(4, Norm::L2);
        let k = vec![vec![2.0, 0.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0, 0.0]];
        assert_eq!(bap_rate(&b, &k, 1e-9).unwrap(), 1);
        assert_eq!(bap_rate(&b, &[vec![0.0, 0.0, 1.0, 0.0]], 0.5).unwrap(), 3);
        let small = BapFamily::new(2, Norm::L2);
        assert!(matches!(
            bap_rate(&small, &[vec![0.0, 0.0, 1.0]], 0.5),
            Err(Error::Saturation { max_rank: 2, .. })
        ));
    }

    #[test]
    fn compression_examples() {
        let b = BapFamily::new(3, Norm::Linf);
        let full = compressed_feature(3, &b, 3).unwrap();
        assert_eq!(full.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let two = compressed_feature(3, &b, 2).unwrap();
        assert_eq!(two.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0]);
        assert!(compressed_feature(3, &b, 4).is_err());
    }

    #[test]
    fn csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "u1,u2\n1,2\n3,4.5\n").unwrap();
        assert_eq!(read_sample_columns(&p).unwrap(), vec![vec![1.0, 3.0], vec![2.0, 4.5]]);
        std::fs::write(&p, "u1\nx\n").unwrap();
        assert!(matches!(read_sample_columns(&p), Err(Error::Parse { line: 2, .. })));
    }
}
