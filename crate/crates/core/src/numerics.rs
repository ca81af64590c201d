//! Small exact kernels shared by every pipeline: simplex projection, softmax,
//! attention and the ceiling index into a dense sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a vector lies in the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Domain(format!("non-finite entry {} at position {i}", v[i]))),
        None => Ok(()),
    }
}

/// Euclidean projection onto the probability simplex `Δ_N` (sort-then-threshold).
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Shape("cannot project an empty vector".into()));
    }
    check_finite(v)?;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // One renormalization pass removes the rounding left by the threshold sum.
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for x in &mut w {
            *x /= total;
        }
    }
    Ok(w)
}

/// True when `w` has nonnegative entries summing to one within `tol`.
pub fn is_in_simplex(w: &[f64], tol: f64) -> bool {
    !w.is_empty() && w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Numerically stable softmax with max-shift.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Shape("softmax of an empty vector".into()));
    }
    check_finite(v)?;
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    Ok(e.into_iter().map(|x| x / z).collect())
}

/// Convex combination of the rows of `values` with weights `w`.
pub fn weighted_rows(w: &[f64], values: &[Vec<f64>]) -> Result<Vec<f64>> {
    if w.len() != values.len() || values.is_empty() {
        return Err(Error::Shape(format!("{} weights for {} rows", w.len(), values.len())));
    }
    let d = values[0].len();
    if values.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("value rows have unequal length".into()));
    }
    let mut out = vec![0.0; d];
    for (wn, row) in w.iter().zip(values) {
        for (o, &x) in out.iter_mut().zip(row) {
            *o += wn * x;
        }
    }
    Ok(out)
}

/// Single attention read-out `Σ_n softmax(u)_n V_n`.
pub fn attention_layer(u: &[f64], values: &[Vec<f64>]) -> Result<Vec<f64>> {
    let w = softmax(u)?;
    weighted_rows(&w, values)
}

/// Hard sigmoid `min{max{u, 0}, 1}`.
pub fn hard_sigmoid(u: f64) -> f64 {
    u.clamp(0.0, 1.0)
}

/// Result of [`ceil_index`]: a 1-based index and whether clamping occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CeilIndex {
    pub index: usize,
    pub clamped: bool,
}

impl CeilIndex {
    /// Zero-based position into the dense sequence.
    pub fn zero_based(self) -> usize {
        self.index - 1
    }
}

/// `⌈z⌉` clamped into `[1, q]`.
pub fn ceil_index(z: f64, q: usize) -> CeilIndex {
    assert!(q >= 1, "ceil_index needs q >= 1");
    let c = z.ceil();
    if c.is_nan() || c < 1.0 {
        CeilIndex { index: 1, clamped: true }
    } else if c > q as f64 {
        CeilIndex { index: q, clamped: true }
    } else {
        CeilIndex {
            index: c as usize,
            clamped: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_sigmoid_clamps() {
        assert_eq!(hard_sigmoid(-0.5), 0.0);
        assert_eq!(hard_sigmoid(0.25), 0.25);
        assert_eq!(hard_sigmoid(7.0), 1.0);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]).unwrap(), vec![0.2, 0.3, 0.5]);
        assert_eq!(project_simplex(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[-3.0]).unwrap(), vec![1.0]);
        assert!(matches!(project_simplex(&[f64::NAN, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(project_simplex(&[1.0, f64::INFINITY]), Err(Error::Domain(_))));
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for c in [-700.0, 0.0, 3.5, 700.0] {
            let w = softmax(&[c, c, c]).unwrap();
            assert!(w.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
        let w = softmax(&[1f64.ln(), 3f64.ln()]).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn attention_examples() {
        let v = vec![vec![1.0, 2.0], vec![-4.0, 7.0], vec![3.0, 3.0]];
        let out = attention_layer(&[50.0, 0.0, 0.0], &v).unwrap();
        // Residual mass on the other rows is 2 e^{-50} ≈ 4e-22.
        assert!((out[0] - 1.0).abs() < 1e-15 * 8.0 && (out[1] - 2.0).abs() < 1e-15 * 8.0);
        let same = vec![vec![0.3, -1.0]; 4];
        let out = attention_layer(&[0.0; 4], &same).unwrap();
        assert!((out[0] - 0.3).abs() < 1e-15 && (out[1] + 1.0).abs() < 1e-15);
        let out = attention_layer(&[0.0, 0.0], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
        assert!(matches!(attention_layer(&[0.0], &v), Err(Error::Shape(_))));
    }

    #[test]
    fn ceil_examples() {
        assert_eq!(ceil_index(2.0, 5), CeilIndex { index: 2, clamped: false });
        assert_eq!(ceil_index(2.3, 5), CeilIndex { index: 3, clamped: false });
        assert_eq!(ceil_index(-1.0, 5), CeilIndex { index: 1, clamped: true });
        assert_eq!(ceil_index(9.1, 5), CeilIndex { index: 5, clamped: true });
        assert_eq!(ceil_index(0.5, 5), CeilIndex { index: 1, clamped: false });
    }
}
