//! Quantizable approximately simplicial (QAS) structures for concrete target geometries.
//!
//! A [`QasSpace`] bundles a metric, a mixing function `η(w, y)`, the declared
//! constants `(C_η, p)` and a finite-dimensional quantization. Spaces with a
//! barycenter map also implement [`Barycentric`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

pub mod circle;
pub mod euclidean;
pub mod spd;
pub mod wasserstein;

pub use circle::{circle_distance, wrap_angle, ArcChart, CircleArc, CirclePartition, GeodesicPartition};
pub use euclidean::{Euclidean, Norm};
pub use spd::{karcher_barycenter, spd_distance, spd_geodesic, sym_exp, KarcherOptions, KarcherResult, SpdMatrix, SpdSpace};
pub use wasserstein::WassersteinSpace;

/// Slack used by [`check_mixing_inequality`].
pub const MIXING_SLACK: f64 = 1e-9;

pub trait QasSpace {
    type Point: Clone;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Mixing function `η(w, points)`; must return `points[i]` at `w = e_i`.
    fn mix(&self, w: &[f64], points: &[Self::Point]) -> Result<Self::Point>;

    fn c_eta(&self) -> f64 {
        1.0
    }

    fn p(&self) -> u32 {
        1
    }

    /// Dimension of the quantization parameter space.
    fn quant_dim(&self) -> usize;

    /// Quantization map from parameters to a point.
    fn quantize(&self, params: &[f64]) -> Result<Self::Point>;
}

pub trait Barycentric: QasSpace {
    fn barycenter(&self, mu: &DiscreteMeasure<Self::Point>) -> Result<Self::Point>;
}

/// Outcome of [`check_mixing_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Evaluates `d(η(w, y), y_i) <= C_η (Σ_j d(y_i, y_j)^p w_j)^{1/p}`.
pub fn check_mixing_inequality<S: QasSpace + ?Sized>(
    space: &S,
    w: &[f64],
    points: &[S::Point],
    i: usize,
) -> Result<MixingCheck> {
    if w.len() != points.len() {
        return Err(Error::Shape(format!("{} weights for {} points", w.len(), points.len())));
    }
    if i >= points.len() {
        return Err(Error::Index { index: i, len: points.len() });
    }
    let mixed = space.mix(w, points)?;
    let lhs = space.distance(&mixed, &points[i]);
    let p = space.p() as f64;
    let sum: f64 = w
        .iter()
        .zip(points)
        .map(|(wj, yj)| wj * space.distance(&points[i], yj).powf(p))
        .sum();
    let rhs = space.c_eta() * sum.powf(1.0 / p);
    Ok(MixingCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + MIXING_SLACK,
    })
}

pub(crate) fn check_simplex(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::Shape(format!("{} weights for {} points", w.len(), n)));
    }
    if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("weights {w:?} are not in the simplex")));
    }
    Ok(())
}
