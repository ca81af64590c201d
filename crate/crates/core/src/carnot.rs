//! Step-2 free nilpotent group, level-2 signatures of piecewise-linear paths,
//! and an RK4 flow oracle for controlled ODEs `dy = V(y) dx`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ANTISYM_TOL: f64 = 1e-12;

/// `(a, A)` with `a ∈ R^d` and `A` antisymmetric: log coordinates of a step-2 group element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step2GroupElement {
    a: Vec<f64>,
    area: Vec<Vec<f64>>,
}

impl Step2GroupElement {
    pub fn new(a: Vec<f64>, area: Vec<Vec<f64>>) -> Result<Self> {
        let d = a.len();
        if area.len() != d || area.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("level-2 part must be {d}×{d}")));
        }
        for i in 0..d {
            for j in 0..d {
                if (area[i][j] + area[j][i]).abs() > ANTISYM_TOL {
                    return Err(Error::Domain(format!("level-2 part is not antisymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Step2GroupElement { a, area })
    }

    pub fn identity(d: usize) -> Self {
        Step2GroupElement {
            a: vec![0.0; d],
            area: vec![vec![0.0; d]; d],
        }
    }

    /// Signature of a straight segment with this increment.
    pub fn from_increment(a: Vec<f64>) -> Self {
        let d = a.len();
        Step2GroupElement {
            a,
            area: vec![vec![0.0; d]; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn increment(&self) -> &[f64] {
        &self.a
    }

    pub fn area(&self) -> &[Vec<f64>] {
        &self.area
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!("group elements over R^{} and R^{}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// `(a + b, A + B + ½(a⊗b − b⊗a))`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.dim();
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect();
        let area = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        self.area[i][j] + other.area[i][j] + 0.5 * (self.a[i] * other.a[j] - other.a[i] * self.a[j])
                    })
                    .collect()
            })
            .collect();
        Ok(Step2GroupElement { a, area })
    }

    pub fn inverse(&self) -> Self {
        Step2GroupElement {
            a: self.a.iter().map(|x| -x).collect(),
            area: self.area.iter().map(|r| r.iter().map(|x| -x).collect()).collect(),
        }
    }

    /// Carnot dilation `(λa, λ²A)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        Step2GroupElement {
            a: self.a.iter().map(|x| lambda * x).collect(),
            area: self.area.iter().map(|r| r.iter().map(|x| lambda * lambda * x).collect()).collect(),
        }
    }

    /// `a` followed by the strictly upper-triangular entries of `A`.
    pub fn log_coordinates(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = self.a.clone();
        for i in 0..d {
            for j in (i + 1)..d {
                out.push(self.area[i][j]);
            }
        }
        out
    }
}

pub fn group_multiply(g: &Step2GroupElement, h: &Step2GroupElement) -> Result<Step2GroupElement> {
    g.multiply(h)
}

/// `‖log g − log h‖` with the full matrix `A` flattened next to `a`.
pub fn tangent_distance(g: &Step2GroupElement, h: &Step2GroupElement) -> f64 {
    let level1: f64 = g.a.iter().zip(&h.a).map(|(x, y)| (x - y).powi(2)).sum();
    let level2: f64 = g
        .area
        .iter()
        .flatten()
        .zip(h.area.iter().flatten())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    (level1 + level2).sqrt()
}

/// Homogeneous norm `‖a‖ + ‖A‖_F^{1/2}`.
pub fn cc_homogeneous_norm(g: &Step2GroupElement) -> f64 {
    let a: f64 = g.a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let frob: f64 = g.area.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    a + frob.sqrt()
}

/// Left-invariant quasi-distance `‖g⁻¹h‖`.
pub fn cc_quasi_distance(g: &Step2GroupElement, h: &Step2GroupElement) -> Result<f64> {
    Ok(cc_homogeneous_norm(&g.inverse().multiply(h)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    times: Vec<f64>,
    vertices: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    pub fn new(times: Vec<f64>, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 || times.len() != vertices.len() {
            return Err(Error::Shape(format!(
                "path needs at least 2 vertices with one time each, got {} vertices and {} times",
                vertices.len(),
                times.len()
            )));
        }
        let d = vertices[0].len();
        if vertices.iter().any(|v| v.len() != d) {
            return Err(Error::Shape("path vertices have unequal dimensions".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("path times must be finite and strictly increasing".into()));
        }
        Ok(PiecewiseLinearPath { times, vertices })
    }

    /// Vertices at times `0, 1, …, k`.
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let times = (0..vertices.len()).map(|k| k as f64).collect();
        Self::new(times, vertices)
    }

    /// Reads `time, x1, …, xd` rows (header required).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut times = Vec::new();
        let mut vertices = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: row + 2,
                    msg: e.to_string(),
                })?;
            if vals.len() < 2 {
                return Err(Error::Parse {
                    line: row + 2,
                    msg: "expected a time and at least one coordinate".into(),
                });
            }
            times.push(vals[0]);
            vertices.push(vals[1..].to_vec());
        }
        Self::new(times, vertices)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(lo <= t && t <= hi) {
            return Err(Error::Range { value: t, lo, hi });
        }
        Ok(())
    }

    /// Segment index `k` with `times[k] <= t <= times[k+1]`.
    fn segment_of(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        k.clamp(1, self.times.len() - 1) - 1
    }

    pub fn point_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let k = self.segment_of(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let r = (t - t0) / (t1 - t0);
        Ok(self.vertices[k]
            .iter()
            .zip(&self.vertices[k + 1])
            .map(|(a, b)| a + r * (b - a))
            .collect())
    }

    /// Same vertices traversed at new times.
    pub fn reparameterize(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(times, self.vertices.clone())
    }

    /// This path followed by `other` translated to start at this path's end.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("cannot concatenate paths of different dimensions".into()));
        }
        let end = self.vertices.last().expect("nonempty").clone();
        let shift: Vec<f64> = end.iter().zip(&other.vertices[0]).map(|(e, s)| e - s).collect();
        let dt = self.domain().1 - other.domain().0;
        let mut times = self.times.clone();
        let mut vertices = self.vertices.clone();
        for (t, v) in other.times.iter().zip(&other.vertices).skip(1) {
            times.push(t + dt);
            vertices.push(v.iter().zip(&shift).map(|(x, s)| x + s).collect());
        }
        Self::new(times, vertices)
    }

    /// Times at which the path changes direction inside `(s, t)`, bracketed by `s` and `t`.
    fn breakpoints(&self, s: f64, t: f64) -> Vec<f64> {
        let mut pts = vec![s];
        pts.extend(self.times.iter().copied().filter(|&u| u > s && u < t));
        pts.push(t);
        pts
    }
}

/// Level-2 signature over `[s, t]` as a Chen product of segment increments.
pub fn signature_level2(p: &PiecewiseLinearPath, s: f64, t: f64) -> Result<Step2GroupElement> {
    p.check_time(s)?;
    p.check_time(t)?;
    if !(s < t) {
        return Err(Error::Domain(format!("signature interval [{s}, {t}] is empty")));
    }
    let pts = p.breakpoints(s, t);
    let mut sig = Step2GroupElement::identity(p.dim());
    let mut prev = p.point_at(pts[0])?;
    for &u in &pts[1..] {
        let cur = p.point_at(u)?;
        let inc = cur.iter().zip(&prev).map(|(a, b)| a - b).collect();
        sig = sig.multiply(&Step2GroupElement::from_increment(inc))?;
        prev = cur;
    }
    Ok(sig)
}

/// `V : R^e → L(R^d, R^e)`, returned as `e` rows of length `d`.
pub trait VectorField {
    fn state_dim(&self) -> usize;

    fn driver_dim(&self) -> usize;

    fn eval(&self, y: &[f64]) -> Vec<Vec<f64>>;
}

/// Vector field given by a closure.
pub struct FnField<F> {
    pub state_dim: usize,
    pub driver_dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<Vec<f64>>> VectorField for FnField<F> {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn driver_dim(&self) -> usize {
        self.driver_dim
    }

    fn eval(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (self.f)(y)
    }
}

/// `V(y) e_k = M_k y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearField {
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl VectorField for LinearField {
    fn state_dim(&self) -> usize {
        self.matrices.first().map_or(0, Vec::len)
    }

    fn driver_dim(&self) -> usize {
        self.matrices.len()
    }

    fn eval(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let e = self.state_dim();
        (0..e)
            .map(|i| {
                self.matrices
                    .iter()
                    .map(|m| m[i].iter().zip(y).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }
}

/// Heisenberg fields `V_1 = (1, 0, −y_2/2)`, `V_2 = (0, 1, y_1/2)` on `R^3`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeisenbergField;

impl VectorField for HeisenbergField {
    fn state_dim(&self) -> usize {
        3
    }

    fn driver_dim(&self) -> usize {
        2
    }

    fn eval(&self, y: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-0.5 * y[1], 0.5 * y[0]]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Agreement required between the runs at step `h` and `h/2`.
    pub tol: f64,
    pub max_halvings: usize,
    /// Blow-up threshold on `‖y‖`.
    pub cap: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-8,
            max_halvings: 16,
            cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub y: Vec<f64>,
    /// Step of the accepted (finer) run.
    pub step: f64,
    pub halvings: usize,
    /// Richardson estimate `‖y_{h/2} − y_h‖ / 15` of the remaining error.
    pub error_estimate: f64,
}

fn rk4_run<V: VectorField + ?Sized>(field: &V, driver: &PiecewiseLinearPath, y0: &[f64], step: f64, cap: f64) -> Result<Vec<f64>> {
    let e = y0.len();
    let mut y = y0.to_vec();
    let rhs = |y: &[f64], xdot: &[f64]| -> Vec<f64> {
        field
            .eval(y)
            .iter()
            .map(|row| row.iter().zip(xdot).map(|(v, x)| v * x).sum())
            .collect()
    };
    for k in 0..driver.times.len() - 1 {
        let (t0, t1) = (driver.times[k], driver.times[k + 1]);
        let xdot: Vec<f64> = driver.vertices[k + 1]
            .iter()
            .zip(&driver.vertices[k])
            .map(|(b, a)| (b - a) / (t1 - t0))
            .collect();
        let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for i in 0..n {
            let k1 = rhs(&y, &xdot);
            let y2: Vec<f64> = (0..e).map(|j| y[j] + 0.5 * h * k1[j]).collect();
            let k2 = rhs(&y2, &xdot);
            let y3: Vec<f64> = (0..e).map(|j| y[j] + 0.5 * h * k2[j]).collect();
            let k3 = rhs(&y3, &xdot);
            let y4: Vec<f64> = (0..e).map(|j| y[j] + h * k3[j]).collect();
            let k4 = rhs(&y4, &xdot);
            for j in 0..e {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= cap) {
                return Err(Error::Divergence {
                    time: t0 + h * (i + 1) as f64,
                    norm,
                });
            }
        }
    }
    Ok(y)
}

/// Integrates `dy = V(y) dx` along `driver`, halving `step` until successive runs agree to `opts.tol`.
pub fn rde_flow_oracle<V: VectorField + ?Sized>(
    field: &V,
    driver: &PiecewiseLinearPath,
    y0: &[f64],
    step: f64,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    if y0.len() != field.state_dim() || driver.dim() != field.driver_dim() {
        return Err(Error::Shape(format!(
            "field maps R^{} with driver R^{}; got y0 in R^{} and driver in R^{}",
            field.state_dim(),
            field.driver_dim(),
            y0.len(),
            driver.dim()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step {step} must be positive")));
    }
    let mut h = step;
    let mut coarse = rk4_run(field, driver, y0, h, opts.cap)?;
    for halvings in 1..=opts.max_halvings {
        h *= 0.5;
        let fine = rk4_run(field, driver, y0, h, opts.cap)?;
        let gap = coarse.iter().zip(&fine).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if gap <= opts.tol {
            return Ok(FlowResult {
                y: fine,
                step: h,
                halvings,
                error_estimate: gap / 15.0,
            });
        }
        coarse = fine;
    }
    Err(Error::Convergence {
        iterations: opts.max_halvings,
        residual: f64::NAN,
    })
}

/// Largest ratio `‖I(y) − I(y')‖ / ‖y − y'‖` over consecutive pairs of `starts`.
pub fn flow_lipschitz_estimate<V: VectorField + ?Sized>(
    field: &V,
    driver: &PiecewiseLinearPath,
    starts: &[Vec<f64>],
    step: f64,
) -> Result<f64> {
    let opts = FlowOptions::default();
    let ends: Vec<Vec<f64>> = starts
        .iter()
        .map(|y| rde_flow_oracle(field, driver, y, step, &opts).map(|r| r.y))
        .collect::<Result<_>>()?;
    let mut best = 0.0_f64;
    for i in 0..starts.len() {
        for j in (i + 1)..starts.len() {
            let num = ends[i].iter().zip(&ends[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den = starts[i].iter().zip(&starts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if den > 0.0 {
                best = best.max(num / den);
            }
        }
    }
    Ok(best)
}
