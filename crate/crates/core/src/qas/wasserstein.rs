use super::{check_simplex, Barycentric, QasSpace};
use crate::error::{Error, Result};
use crate::measure::{mix_wasserstein, quantize_measure, w1_discrete, DiscreteMeasure};
use crate::metric::FiniteMetricSpace;

/// `(P_1(Y), W_1)` over a finite ground space, with the dense sequence taken
/// in index order and `q` atoms per quantized measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinSpace {
    ground: FiniteMetricSpace,
    q: usize,
    dense_seq: Vec<usize>,
}

impl WassersteinSpace {
    pub fn new(ground: FiniteMetricSpace, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::Construction("quantization needs q >= 1".into()));
        }
        let dense_seq = (0..ground.len()).collect();
        Ok(WassersteinSpace { ground, q, dense_seq })
    }

    pub fn ground(&self) -> &FiniteMetricSpace {
        &self.ground
    }

    pub fn dense_seq(&self) -> &[usize] {
        &self.dense_seq
    }
}

impl QasSpace for WassersteinSpace {
    type Point = DiscreteMeasure;

    fn distance(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
        w1_discrete(&self.ground, a, b).expect("measures over the ground space within the support cap")
    }

    fn mix(&self, w: &[f64], points: &[DiscreteMeasure]) -> Result<DiscreteMeasure> {
        check_simplex(w, points.len())?;
        mix_wasserstein(w, points, true)
    }

    fn quant_dim(&self) -> usize {
        2 * self.q
    }

    /// Parameters are `(u, z)` concatenated, each of length `q`.
    fn quantize(&self, params: &[f64]) -> Result<DiscreteMeasure> {
        if params.len() != 2 * self.q {
            return Err(Error::Shape(format!("expected {} parameters, got {}", 2 * self.q, params.len())));
        }
        let (u, z) = params.split_at(self.q);
        quantize_measure(u, z, &self.dense_seq)
    }
}

impl Barycentric for WassersteinSpace {
    /// Flattens a measure over measures into its mean measure.
    fn barycenter(&self, mu: &DiscreteMeasure<DiscreteMeasure>) -> Result<DiscreteMeasure> {
        if mu.len() == 1 {
            return Ok(mu.atoms()[0].clone());
        }
        mix_wasserstein(mu.weights(), mu.atoms(), true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::shortest_path_metric;

    #[test]
    fn vertex_mixing_and_quantization() {
        let g = shortest_path_metric(&[(0, 1, 1.0), (1, 2, 2.0)], 3).unwrap();
        let w = WassersteinSpace::new(g, 2).unwrap();
        let pts = vec![DiscreteMeasure::dirac(0), DiscreteMeasure::new(vec![1, 2], vec![0.5, 0.5]).unwrap()];
        assert_eq!(w.mix(&[0.0, 1.0], &pts).unwrap(), pts[1]);
        let q = w.quantize(&[1.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(q, DiscreteMeasure::new(vec![0, 2], vec![0.5, 0.5]).unwrap());
        assert_eq!(w.distance(&pts[0], &DiscreteMeasure::dirac(2)), 3.0);
    }
}
