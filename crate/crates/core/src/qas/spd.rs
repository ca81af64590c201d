//! SPD matrices with the affine-invariant metric, weighted geometric means and
//! the Karcher barycenter.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_simplex, Barycentric, QasSpace};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metric::Metric;

/// Eigenvalues below this are treated as zero when validating and are floored
/// before taking logs or roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Symmetric positive definite matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        let scale = m.amax().max(1.0);
        if (&m - m.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(Error::Construction("matrix is not symmetric".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        if !(min_eig > EIGEN_FLOOR) {
            return Err(Error::Spectral { eigenvalue: min_eig });
        }
        Ok(SpdMatrix(sym))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("SPD rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        SpdMatrix(DMatrix::identity(d, d))
    }

    pub fn scaled_identity(d: usize, c: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * c)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }

    /// `M A Mᵀ`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m * &self.0 * m.transpose())
    }

    /// Applies `f` to the spectrum (eigenvalues floored at [`EIGEN_FLOOR`]).
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        sym_fn(&self.0, f)
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.map_spectrum(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.map_spectrum(|x| 1.0 / x.sqrt())
    }

    pub fn log(&self) -> DMatrix<f64> {
        self.map_spectrum(f64::ln)
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SpdMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `V f(Λ) Vᵀ` for a symmetric matrix.
fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let vals = eig.eigenvalues.map(|x| f(x.max(EIGEN_FLOOR)));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&vals) * v.transpose()))
}

/// Matrix exponential of a symmetric matrix.
pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let vals = eig.eigenvalues.map(f64::exp);
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&vals) * v.transpose()))
}

fn check_dims(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::Shape(format!("SPD dimensions {} and {} differ", a.dim(), b.dim())))
    }
}

/// `‖log(A^{-1/2} B A^{-1/2})‖_F`.
pub fn spd_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(distance_unchecked(a, b))
}

fn distance_unchecked(a: &SpdMatrix, b: &SpdMatrix) -> f64 {
    let ais = a.inv_sqrt();
    let inner = symmetrize(&(&ais * b.matrix() * &ais));
    let eig = inner.symmetric_eigenvalues();
    eig.iter().map(|&l| l.max(EIGEN_FLOOR).ln().powi(2)).sum::<f64>().sqrt()
}

/// Weighted geometric mean `A^{1/2} (A^{-1/2} B A^{-1/2})^{w_1} A^{1/2}`.
///
/// The exponent is the first weight, so `w = (1, 0)` returns `B` and
/// `w = (0, 1)` returns `A`; the point sits at distance `w_1 d(A, B)` from `A`.
pub fn spd_geodesic(w: [f64; 2], a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(a, b)?;
    check_simplex(&w, 2)?;
    if w[0] == 1.0 {
        return Ok(b.clone());
    }
    if w[1] == 1.0 {
        return Ok(a.clone());
    }
    Ok(geodesic_point(a, b, w[0]))
}

/// Point at parameter `t` on the geodesic from `a` (t = 0) to `b` (t = 1).
fn geodesic_point(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> SpdMatrix {
    let (s, si) = (a.sqrt(), a.inv_sqrt());
    let inner = symmetrize(&(&si * b.matrix() * &si));
    let powered = sym_fn(&inner, |x| x.powf(t));
    SpdMatrix(symmetrize(&(&s * powered * &s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KarcherOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        KarcherOptions { tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KarcherResult {
    pub mean: SpdMatrix,
    pub iterations: usize,
    pub residual: f64,
}

/// Riemannian gradient `Σ_k w_k log(Σ^{-1/2} A_k Σ^{-1/2})` and its Frobenius norm.
pub fn karcher_gradient(sigma: &SpdMatrix, mu: &DiscreteMeasure<SpdMatrix>) -> (DMatrix<f64>, f64) {
    let si = sigma.inv_sqrt();
    let d = sigma.dim();
    let mut g = DMatrix::zeros(d, d);
    for (a, w) in mu.iter() {
        if w == 0.0 {
            continue;
        }
        let inner = symmetrize(&(&si * a.matrix() * &si));
        g += sym_fn(&inner, f64::ln) * w;
    }
    let norm = g.norm();
    (g, norm)
}

/// Karcher (Fréchet) mean of a finitely supported measure on SPD matrices.
///
/// Starts from the log-Euclidean mean and iterates
/// `Σ ← Σ^{1/2} exp(step · G) Σ^{1/2}`, halving the step whenever the residual
/// would grow.
pub fn karcher_barycenter(mu: &DiscreteMeasure<SpdMatrix>, opts: KarcherOptions) -> Result<KarcherResult> {
    let d = mu.atoms()[0].dim();
    if mu.atoms().iter().any(|a| a.dim() != d) {
        return Err(Error::Shape("SPD atoms have mixed dimensions".into()));
    }
    let charged: Vec<&SpdMatrix> = mu.iter().filter(|(_, w)| *w > 0.0).map(|(a, _)| a).collect();
    if charged.iter().all(|a| *a == charged[0]) {
        return Ok(KarcherResult {
            mean: charged[0].clone(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut log_mean = DMatrix::zeros(d, d);
    for (a, w) in mu.iter() {
        log_mean += a.log() * w;
    }
    let mut sigma = SpdMatrix(sym_exp(&log_mean));
    let (mut grad, mut residual) = karcher_gradient(&sigma, mu);
    let mut step = 1.0;
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::Convergence { iterations, residual });
        }
        iterations += 1;
        let s = sigma.sqrt();
        let candidate = SpdMatrix(symmetrize(&(&s * sym_exp(&(&grad * step)) * &s)));
        let (g_new, r_new) = karcher_gradient(&candidate, mu);
        if r_new > residual && step > 1e-6 {
            step *= 0.5;
            continue;
        }
        sigma = candidate;
        grad = g_new;
        residual = r_new;
    }
    Ok(KarcherResult {
        mean: sigma,
        iterations,
        residual,
    })
}

/// SPD matrices of a fixed dimension as a barycentric QAS space.
///
/// Mixing of two points follows the geodesic; more points use the Karcher mean
/// of the weighted point masses, solved to `mix_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdSpace {
    pub dim: usize,
    pub mix_tol: f64,
    pub barycenter: KarcherOptions,
}

impl SpdSpace {
    pub fn new(dim: usize) -> Self {
        SpdSpace {
            dim,
            mix_tol: 1e-12,
            barycenter: KarcherOptions::default(),
        }
    }
}

impl Metric<SpdMatrix> for SpdSpace {
    fn dist(&self, a: &SpdMatrix, b: &SpdMatrix) -> f64 {
        distance_unchecked(a, b)
    }
}

impl QasSpace for SpdSpace {
    type Point = SpdMatrix;

    fn distance(&self, a: &SpdMatrix, b: &SpdMatrix) -> f64 {
        distance_unchecked(a, b)
    }

    fn mix(&self, w: &[f64], points: &[SpdMatrix]) -> Result<SpdMatrix> {
        check_simplex(w, points.len())?;
        if let Some(p) = points.iter().find(|p| p.dim() != self.dim) {
            return Err(Error::Shape(format!("{}x{} matrix in SPD({})", p.dim(), p.dim(), self.dim)));
        }
        if let Some(k) = w.iter().position(|&x| x == 1.0) {
            return Ok(points[k].clone());
        }
        if points.len() == 2 {
            return Ok(geodesic_point(&points[0], &points[1], w[1]));
        }
        let mu = DiscreteMeasure::new(points.to_vec(), w.to_vec())?;
        let opts = KarcherOptions {
            tol: self.mix_tol,
            max_iter: 1000,
        };
        match karcher_barycenter(&mu, opts) {
            Ok(r) => Ok(r.mean),
            // Round-off can stall the residual a little above a very tight tolerance.
            Err(Error::Convergence { residual, .. }) if residual < 1e-10 => {
                karcher_barycenter(&mu, KarcherOptions { tol: 1e-10, max_iter: 1000 }).map(|r| r.mean)
            }
            Err(e) => Err(e),
        }
    }

    fn quant_dim(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Upper-triangular entries of a symmetric matrix `S`, mapped to `exp(S)`.
    fn quantize(&self, params: &[f64]) -> Result<SpdMatrix> {
        if params.len() != self.quant_dim() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.quant_dim(), params.len())));
        }
        let mut s = DMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                s[(i, j)] = params[k];
                s[(j, i)] = params[k];
                k += 1;
            }
        }
        SpdMatrix::new(sym_exp(&s))
    }
}

impl Barycentric for SpdSpace {
    fn barycenter(&self, mu: &DiscreteMeasure<SpdMatrix>) -> Result<SpdMatrix> {
        karcher_barycenter(mu, self.barycenter).map(|r| r.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SpdMatrix {
        SpdMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(spd_distance(&a, &a).unwrap() < 1e-12);
        let e = std::f64::consts::E;
        let d = spd_distance(&SpdMatrix::identity(3), &SpdMatrix::scaled_identity(3, e).unwrap()).unwrap();
        assert!((d - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match SpdMatrix::new(m) {
            Err(Error::Spectral { eigenvalue }) => assert!((eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SpdMatrix::from_rows(&[vec![1.0, 0.3], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let a = diag(&[1.0, 2.0]);
        let b = SpdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(spd_geodesic([1.0, 0.0], &a, &b).unwrap(), b);
        assert_eq!(spd_geodesic([0.0, 1.0], &a, &b).unwrap(), a);
        let same = spd_geodesic([0.3, 0.7], &a, &a).unwrap();
        assert!((same.matrix() - a.matrix()).amax() < 1e-12);
        let mid = spd_geodesic([0.5, 0.5], &SpdMatrix::identity(2), &SpdMatrix::scaled_identity(2, 4.0).unwrap()).unwrap();
        assert!((mid.matrix() - DMatrix::identity(2, 2) * 2.0).amax() < 1e-12);
        let s = spd_geodesic([0.3, 0.7], &a, &b).unwrap();
        let dab = spd_distance(&a, &b).unwrap();
        assert!((spd_distance(&a, &s).unwrap() - 0.3 * dab).abs() < 1e-8);
    }

    #[test]
    fn karcher_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let single = karcher_barycenter(&DiscreteMeasure::dirac(a.clone()), KarcherOptions::default()).unwrap();
        assert_eq!(single.mean, a);
        let pair = DiscreteMeasure::new(vec![a.clone(), a.clone()], vec![0.5, 0.5]).unwrap();
        assert_eq!(karcher_barycenter(&pair, KarcherOptions::default()).unwrap().mean, a);
        let e2 = SpdMatrix::scaled_identity(3, 2f64.exp()).unwrap();
        let mu = DiscreteMeasure::new(vec![SpdMatrix::identity(3), e2], vec![0.5, 0.5]).unwrap();
        let r = karcher_barycenter(&mu, KarcherOptions::default()).unwrap();
        assert!((r.mean.matrix() - DMatrix::identity(3, 3) * std::f64::consts::E).amax() < 1e-8);
    }

    #[test]
    fn karcher_reports_nonconvergence() {
        let mu = DiscreteMeasure::new(
            vec![diag(&[1.0, 5.0]), SpdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 1.0]]).unwrap(), diag(&[0.2, 0.4])],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let err = karcher_barycenter(&mu, KarcherOptions { tol: 1e-30, max_iter: 3 }).unwrap_err();
        assert!(matches!(err, Error::Convergence { iterations: 3, .. }));
    }

    #[test]
    fn json_rows() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[2.0,0.5],[0.5,1.0]]");
        assert_eq!(serde_json::from_str::<SpdMatrix>(&s).unwrap(), a);
    }

    #[test]
    fn quantization_is_spd() {
        let s = SpdSpace::new(2);
        let q = s.quantize(&[0.0, 0.0, 0.0]).unwrap();
        assert!((q.matrix() - DMatrix::identity(2, 2)).amax() < 1e-15);
    }
}
