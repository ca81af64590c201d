use serde::{Deserialize, Serialize};

use super::{check_simplex, Barycentric, QasSpace};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metric::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn of(self, v: impl IntoIterator<Item = f64>) -> f64 {
        let it = v.into_iter();
        match self {
            Norm::L1 => it.map(f64::abs).sum(),
            Norm::L2 => it.map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => it.map(f64::abs).fold(0.0, f64::max),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        self.of(a.iter().zip(b).map(|(x, y)| x - y))
    }
}

/// `R^d` with a fixed norm; mixing and barycenter are weighted averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Euclidean {
    pub dim: usize,
    pub norm: Norm,
}

impl Euclidean {
    pub fn new(dim: usize, norm: Norm) -> Self {
        Euclidean { dim, norm }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Shape(format!("point of dimension {} in R^{}", p.len(), self.dim)))
        }
    }
}

impl Metric<Vec<f64>> for Euclidean {
    fn dist(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        self.norm.dist(a, b)
    }
}

impl QasSpace for Euclidean {
    type Point = Vec<f64>;

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        self.norm.dist(a, b)
    }

    fn mix(&self, w: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_simplex(w, points.len())?;
        if let Some(k) = w.iter().position(|&x| x == 1.0) {
            return Ok(points[k].clone());
        }
        let mut out = vec![0.0; self.dim];
        for (wn, p) in w.iter().zip(points) {
            self.check_point(p)?;
            for (o, x) in out.iter_mut().zip(p) {
                *o += wn * x;
            }
        }
        Ok(out)
    }

    fn quant_dim(&self) -> usize {
        self.dim
    }

    fn quantize(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.check_point(params)?;
        Ok(params.to_vec())
    }
}

impl Barycentric for Euclidean {
    /// Weighted mean `Σ w_k x_k`.
    fn barycenter(&self, mu: &DiscreteMeasure<Vec<f64>>) -> Result<Vec<f64>> {
        if mu.len() == 1 {
            self.check_point(&mu.atoms()[0])?;
            return Ok(mu.atoms()[0].clone());
        }
        self.mix(mu.weights(), mu.atoms())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qas::check_mixing_inequality;

    #[test]
    fn barycenter_examples() {
        let e = Euclidean::new(1, Norm::L2);
        assert_eq!(e.barycenter(&DiscreteMeasure::dirac(vec![3.5])).unwrap(), vec![3.5]);
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(e.barycenter(&mu).unwrap(), vec![1.0]);
        assert!(e.barycenter(&DiscreteMeasure::dirac(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn mixing_examples() {
        let e = Euclidean::new(2, Norm::L1);
        let pts = vec![vec![0.0, 1.0], vec![4.0, -2.0], vec![1.0, 1.0]];
        let c = check_mixing_inequality(&e, &[0.0, 1.0, 0.0], &pts, 1).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.ok);
        let same = vec![vec![1.0, 1.0]; 3];
        let c = check_mixing_inequality(&e, &[0.2, 0.3, 0.5], &same, 0).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
    }

    #[test]
    fn norms() {
        assert_eq!(Norm::L1.dist(&[0.0, 0.0], &[3.0, 4.0]), 7.0);
        assert_eq!(Norm::L2.dist(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert_eq!(Norm::Linf.dist(&[0.0, 0.0], &[3.0, 4.0]), 4.0);
    }
}
