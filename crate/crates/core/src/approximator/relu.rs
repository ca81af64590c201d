//! Feedforward ReLU networks and a seeded fitting procedure.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine layer `x ↦ W x + b` with `W` stored row-major (`out × in`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != bias.len() {
            return Err(Error::Shape(format!("{} rows but {} biases", weights.len(), bias.len())));
        }
        if let Some(first) = weights.first() {
            if weights.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Shape("ragged weight matrix".into()));
            }
        }
        Ok(Dense { weights, bias })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weights: vec![vec![0.0; input]; output],
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// `x^{(t+1)} = ReLU(A^{(t)} x^{(t)} + b^{(t)})` for the hidden layers, then an affine read-out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNet {
    layers: Vec<Dense>,
}

impl ReluNet {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Construction("network needs an output layer".into()));
        }
        for w in layers.windows(2) {
            if w[1].input_dim() != w[0].output_dim() {
                return Err(Error::Shape(format!(
                    "layer widths do not chain: {} -> {}",
                    w[0].output_dim(),
                    w[1].input_dim()
                )));
            }
        }
        Ok(ReluNet { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Largest hidden width (the capacity `c`); zero for an affine map.
    pub fn capacity(&self) -> usize {
        self.layers[..self.layers.len() - 1].iter().map(Dense::output_dim).max().unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.output_dim() * (l.input_dim() + 1)).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!("input of length {} for a net expecting {}", x.len(), self.input_dim())));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for layer in &self.layers[..last] {
            h = layer.apply(&h).into_iter().map(|v| v.max(0.0)).collect();
        }
        self.layers[last].apply(&h)
    }
}

pub fn relu_forward(net: &ReluNet, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FitMethod {
    /// Random hidden layer, ridge-regressed read-out. `ridge` is relative to the mean squared feature scale.
    RandomFeatures { ridge: f64 },
    /// Full-batch gradient descent on all weights of a one-hidden-layer net.
    GradientDescent { epochs: usize, learning_rate: f64 },
}

impl Default for FitMethod {
    fn default() -> Self {
        FitMethod::RandomFeatures { ridge: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Hidden width; zero gives an affine model.
    pub capacity: usize,
    pub seed: u64,
    pub method: FitMethod,
}

impl FitOptions {
    pub fn new(capacity: usize, seed: u64) -> Self {
        FitOptions {
            capacity,
            seed,
            method: FitMethod::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub net: ReluNet,
    /// Largest absolute coordinate error over the training pairs.
    pub max_error: f64,
    /// The ridge system was singular at the requested regularization and was re-solved with more.
    pub ridge_fallback: bool,
}

fn check_training(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<(usize, usize)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} inputs for {} targets", xs.len(), ys.len())));
    }
    let (n, m) = (xs[0].len(), ys[0].len());
    if xs.iter().any(|x| x.len() != n) || ys.iter().any(|y| y.len() != m) {
        return Err(Error::Shape("training vectors have unequal lengths".into()));
    }
    if xs.iter().flatten().chain(ys.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("training data contains non-finite values".into()));
    }
    Ok((n, m))
}

/// Fits a ReLU network to training pairs; deterministic in `opts.seed`.
pub fn fit_universal(xs: &[Vec<f64>], ys: &[Vec<f64>], opts: &FitOptions) -> Result<FitReport> {
    let (n_in, n_out) = check_training(xs, ys)?;
    let (net, ridge_fallback) = match opts.method {
        FitMethod::RandomFeatures { ridge } => {
            let hidden = random_hidden_layer(xs, n_in, opts.capacity, opts.seed);
            let features: Vec<Vec<f64>> = match &hidden {
                Some(h) => xs.iter().map(|x| h.apply(x).into_iter().map(|v| v.max(0.0)).collect()).collect(),
                None => xs.to_vec(),
            };
            let (readout, fallback) = ridge_readout(&features, ys, ridge)?;
            let layers = match hidden {
                Some(h) => vec![h, readout],
                None => vec![readout],
            };
            (ReluNet::new(layers)?, fallback)
        }
        FitMethod::GradientDescent { epochs, learning_rate } => {
            (gradient_descent(xs, ys, n_in, n_out, opts, epochs, learning_rate)?, false)
        }
    };
    let max_error = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            net.forward_unchecked(x)
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(FitReport {
        net,
        max_error,
        ridge_fallback,
    })
}

/// Per-coordinate standard deviation of the inputs (1 for constant coordinates).
fn input_scale(xs: &[Vec<f64>], n_in: usize) -> Vec<f64> {
    let k = xs.len() as f64;
    let mean: Vec<f64> = (0..n_in).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / k).collect();
    (0..n_in)
        .map(|j| {
            let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / k;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// Hidden layer of width `capacity`: shifted identity units first (so affine
/// targets are exactly representable), then random directions whose kinks pass
/// through training points visited in a seeded order. Widths are nested: the
/// first `c` units do not depend on the requested capacity.
fn random_hidden_layer(xs: &[Vec<f64>], n_in: usize, capacity: usize, seed: u64) -> Option<Dense> {
    if capacity == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = input_scale(xs, n_in);
    let mut weights = Vec::with_capacity(capacity);
    let mut bias = Vec::with_capacity(capacity);

    let n_pass = n_in.min(capacity);
    for j in 0..n_pass {
        let lo = xs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min);
        let mut row = vec![0.0; n_in];
        row[j] = 1.0;
        weights.push(row);
        bias.push(scale[j] - lo);
    }

    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng);
    for k in 0..(capacity - n_pass) {
        let dir: Vec<f64> = (0..n_in).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
        let dir: Vec<f64> = dir.iter().map(|d| d / norm).collect();
        let anchor = &xs[order[k % order.len()]];
        // Direction is drawn in standardized coordinates; fold the scaling into the weights.
        let row: Vec<f64> = (0..n_in).map(|j| dir[j] / scale[j]).collect();
        let b = -row.iter().zip(anchor).map(|(w, x)| w * x).sum::<f64>();
        weights.push(row);
        bias.push(b);
    }
    Some(Dense { weights, bias })
}

/// Least-squares read-out with an unpenalized intercept.
fn ridge_readout(features: &[Vec<f64>], ys: &[Vec<f64>], ridge: f64) -> Result<(Dense, bool)> {
    let (k, p, m) = (features.len(), features[0].len(), ys[0].len());
    let fmean: Vec<f64> = (0..p).map(|j| features.iter().map(|f| f[j]).sum::<f64>() / k as f64).collect();
    let ymean: Vec<f64> = (0..m).map(|j| ys.iter().map(|y| y[j]).sum::<f64>() / k as f64).collect();
    if p == 0 {
        return Ok((Dense::new(vec![Vec::new(); m], ymean)?, false));
    }
    let h = DMatrix::from_fn(k, p, |i, j| features[i][j] - fmean[j]);
    let y = DMatrix::from_fn(k, m, |i, j| ys[i][j] - ymean[j]);
    let gram = h.transpose() * &h;
    let rhs = h.transpose() * &y;
    let scale = (gram.trace() / p as f64).max(f64::MIN_POSITIVE);

    let mut lambda = ridge.max(0.0) * scale;
    let mut fallback = false;
    let beta = loop {
        let mut a = gram.clone();
        for i in 0..p {
            a[(i, i)] += lambda;
        }
        if let Some(chol) = a.cholesky() {
            let sol = chol.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                break sol;
            }
        }
        fallback = true;
        lambda = if lambda == 0.0 { 1e-12 * scale } else { lambda * 100.0 };
        if lambda > scale {
            return Err(Error::Construction("ridge system stayed singular".into()));
        }
    };

    let weights: Vec<Vec<f64>> = (0..m).map(|o| (0..p).map(|j| beta[(j, o)]).collect()).collect();
    let bias: Vec<f64> = (0..m)
        .map(|o| ymean[o] - (0..p).map(|j| beta[(j, o)] * fmean[j]).sum::<f64>())
        .collect();
    Ok((Dense::new(weights, bias)?, fallback))
}

fn gradient_descent(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    n_in: usize,
    n_out: usize,
    opts: &FitOptions,
    epochs: usize,
    learning_rate: f64,
) -> Result<ReluNet> {
    let width = opts.capacity.max(1);
    let mut hidden = random_hidden_layer(xs, n_in, width, opts.seed).expect("width is positive");
    let mut out = Dense::zeros(width, n_out);
    let k = xs.len() as f64;
    for epoch in 0..epochs {
        // Step size halves every quarter of the schedule.
        let lr = learning_rate * 0.5f64.powi((4 * epoch / epochs.max(1)) as i32);
        let mut g_hw = vec![vec![0.0; n_in]; width];
        let mut g_hb = vec![0.0; width];
        let mut g_ow = vec![vec![0.0; width]; n_out];
        let mut g_ob = vec![0.0; n_out];
        for (x, y) in xs.iter().zip(ys) {
            let pre = hidden.apply(x);
            let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
            let pred = out.apply(&act);
            let err: Vec<f64> = pred.iter().zip(y).map(|(p, t)| 2.0 * (p - t) / k).collect();
            for o in 0..n_out {
                g_ob[o] += err[o];
                for j in 0..width {
                    g_ow[o][j] += err[o] * act[j];
                }
            }
            for j in 0..width {
                if pre[j] <= 0.0 {
                    continue;
                }
                let back: f64 = (0..n_out).map(|o| err[o] * out.weights[o][j]).sum();
                g_hb[j] += back;
                for i in 0..n_in {
                    g_hw[j][i] += back * x[i];
                }
            }
        }
        for o in 0..n_out {
            out.bias[o] -= lr * g_ob[o];
            for j in 0..width {
                out.weights[o][j] -= lr * g_ow[o][j];
            }
        }
        for j in 0..width {
            hidden.bias[j] -= lr * g_hb[j];
            for i in 0..n_in {
                hidden.weights[j][i] -= lr * g_hw[j][i];
            }
        }
    }
    ReluNet::new(vec![hidden, out])
}
