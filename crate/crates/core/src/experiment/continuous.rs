//! Classification, operator, SPD-valued and flow-map experiments.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::{ExperimentReport, ModelSize, PointRecord, Threshold};
use crate::approximator::{
    build_euclidean, fit_universal, CornerSimplex, EuclideanModel, FitOptions, HeadMode, RandomizedApproximator,
    ReluNet,
};
use crate::carnot::{
    cc_quasi_distance, flow_lipschitz_estimate, rde_flow_oracle, signature_level2, FlowOptions, HeisenbergField,
    PiecewiseLinearPath,
};
use crate::error::{Error, Result};
use crate::feature::{amplitude_energy, fourier_synthesize, schauder_truncate};
use crate::measure::{w1_discrete, DiscreteMeasure};
use crate::metric::{shortest_path_metric, snowflake_distance, FiniteMetricSpace, Modulus};
use crate::numerics::hard_sigmoid;
use crate::qas::{spd_distance, sym_exp, Barycentric, SpdMatrix, SpdSpace};

/// Slack allowed in `d(β(T̂(x)), f(x)) <= W_1(T̂(x), δ_{f(x)})`.
pub const CONTRACTION_TOL: f64 = 1e-12;

fn model_size(name: &str, net: &ReluNet, n_atoms: usize) -> ModelSize {
    ModelSize {
        name: name.to_string(),
        capacity: net.capacity(),
        feature_dim: net.input_dim(),
        n_atoms,
        parameters: net.parameter_count(),
    }
}

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Records the per-point errors and the contraction check shared by barycentric experiments.
fn finish_barycentric(mut report: ExperimentReport, errors: Vec<f64>, contraction_gaps: Vec<f64>) -> ExperimentReport {
    let violations = contraction_gaps.iter().filter(|&&g| g > CONTRACTION_TOL).count();
    report.metric(
        "contraction_max_gap",
        contraction_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    report.check(Threshold::at_most("contraction_violations", violations as f64, 0.0));
    report.points = errors
        .into_iter()
        .enumerate()
        .map(|(id, error)| PointRecord {
            id,
            error,
            certified: true,
            part: None,
        })
        .collect();
    report.certified_mass = Some(1.0);
    report.finish()
}

/// Kernel `P(Y | x) = (clamp(x), 1 − clamp(x))` on two classes, hard-sigmoid head.
pub fn run_classification(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n = cfg.n_points.unwrap_or(101);
    let train = grid(n, -0.25, 1.25);
    let xs: Vec<Vec<f64>> = train.iter().map(|&x| vec![x]).collect();
    let ys: Vec<Vec<f64>> = train.iter().map(|&x| vec![hard_sigmoid(x)]).collect();
    let fit = fit_universal(&xs, &ys, &FitOptions::new(cfg.capacity.unwrap_or(48), cfg.seed))?;
    let classes = FiniteMetricSpace::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 })?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.models.push(model_size("head", &fit.net, 2));
    let mut errors = Vec::new();
    let mut head_ok = true;
    for &x in &grid(cfg.n_test.unwrap_or(4 * n + 1), -0.25, 1.25) {
        let s = hard_sigmoid(fit.net.forward(&[x])?[0]);
        let weights = [s, 1.0 - s];
        head_ok &= (0.0..=1.0).contains(&s) && (weights[0] + weights[1] - 1.0).abs() <= 1e-15;
        let model = DiscreteMeasure::new(vec![0, 1], weights.to_vec())?;
        let p = hard_sigmoid(x);
        let kernel = DiscreteMeasure::new(vec![0, 1], vec![p, 1.0 - p])?;
        errors.push(w1_discrete(&classes, &model, &kernel)?);
    }
    report.points = errors
        .iter()
        .enumerate()
        .map(|(id, &error)| PointRecord {
            id,
            error,
            certified: true,
            part: None,
        })
        .collect();
    let sup = errors.iter().copied().fold(0.0, f64::max);
    report.check(Threshold::at_most("sup_w1", sup, cfg.eps.unwrap_or(0.05)));
    report.check(Threshold::holds("head_weights_in_simplex", head_ok));
    report.metric("fit_error", fit.max_error);
    report.certified_mass = Some(1.0);
    Ok(report.finish())
}

/// Grid size for operator samples.
const OPERATOR_GRID: usize = 64;
/// Output frequencies kept by the truncation `T_5`.
const OPERATOR_OUT_FREQ: usize = 5;

/// Random band-limited function with frequencies up to 3, as amplitude coefficients.
fn random_band_limited<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let mut c = vec![0.5 * rng.gen_range(-1.0..1.0)];
    for k in 1..=3 {
        for _ in 0..2 {
            c.push(rng.gen_range(-1.0..1.0) / k as f64);
        }
    }
    c
}

/// `u ↦ T_5(u²)` as output amplitudes, computed on the sample grid.
pub fn square_then_truncate(samples: &[f64]) -> Result<Vec<f64>> {
    let sq: Vec<f64> = samples.iter().map(|u| u * u).collect();
    schauder_truncate(&sq, 2 * OPERATOR_OUT_FREQ + 1)
}

/// Root-mean-square norm of the function with amplitudes `c`.
pub fn rms_norm(c: &[f64]) -> f64 {
    amplitude_energy(c).sqrt()
}

fn rms_dist(a: &[f64], b: &[f64]) -> f64 {
    rms_norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Contraction gap `d(β(μ), y) − W_1(μ, δ_y)` and the error for a Euclidean model.
fn euclidean_point(model: &EuclideanModel, phi: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    let mu = model.evaluate(phi)?;
    let w1: f64 = mu.iter().map(|(v, w)| w * rms_dist(v, truth)).sum();
    let beta = model.predict(phi)?;
    let err = rms_dist(&beta, truth);
    Ok((err, err - w1))
}

pub fn run_operator(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.feature_dim.unwrap_or(8);
    if d == 0 || d > OPERATOR_GRID / 2 {
        return Err(Error::Config(format!("feature_dim {d} outside 1..={}", OPERATOR_GRID / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sample = |count: usize| -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let mut feats = Vec::with_capacity(count);
        let mut outs = Vec::with_capacity(count);
        for _ in 0..count {
            let u = fourier_synthesize(&random_band_limited(&mut rng), OPERATOR_GRID);
            feats.push(schauder_truncate(&u, d)?);
            outs.push(square_then_truncate(&u)?);
        }
        Ok((feats, outs))
    };
    let (train_x, train_y) = sample(cfg.n_points.unwrap_or(10_000))?;
    let (test_x, test_y) = sample(cfg.n_test.unwrap_or(20))?;

    let simplex = CornerSimplex::enclosing(&train_y, 0.1)?;
    let model = build_euclidean(&train_x, &train_y, simplex, &FitOptions::new(cfg.capacity.unwrap_or(2000), cfg.seed))?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.models.push(model_size("operator", model.approximator.core(), model.simplex.vertices().len()));
    let mut errors = Vec::new();
    let mut gaps = Vec::new();
    for (x, y) in test_x.iter().zip(&test_y) {
        let (e, g) = euclidean_point(&model, x, y)?;
        errors.push(e);
        gaps.push(g);
    }
    let train_sup = train_x
        .iter()
        .zip(&train_y)
        .map(|(x, y)| model.predict(x).map(|p| rms_dist(&p, y)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.metric("train_sup_l2", train_sup);
    report.metric("fit_error", model.fit_error);
    let sup = errors.iter().copied().fold(0.0, f64::max);
    report.check(Threshold::at_most("sup_l2", sup, cfg.eps.unwrap_or(0.1)));
    Ok(finish_barycentric(report, errors, gaps))
}

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
fn random_symmetric<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

/// Piecewise-linear interpolation weights of `t` on the knots.
fn hat_weights(knots: &[f64], t: f64) -> Vec<f64> {
    let mut w = vec![0.0; knots.len()];
    if knots.len() == 1 {
        w[0] = 1.0;
        return w;
    }
    let k = knots.partition_point(|&s| s <= t).clamp(1, knots.len() - 1) - 1;
    let r = ((t - knots[k]) / (knots[k + 1] - knots[k])).clamp(0.0, 1.0);
    w[k] = 1.0 - r;
    w[k + 1] = r;
    w
}

/// `t ↦ exp(S_0 + t S_1 + t² S_2)` on `[0, 1]`, Karcher barycenter read-out.
pub fn run_spd_map(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let dim = cfg.target_size.unwrap_or(3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s: Vec<DMatrix<f64>> = (0..3).map(|_| random_symmetric(dim, 0.5, &mut rng)).collect();
    let f = |t: f64| SpdMatrix::new(sym_exp(&(&s[0] + &s[1] * t + &s[2] * (t * t))));

    let n_atoms = cfg.n_atoms.unwrap_or(11).max(1);
    let knots = grid(n_atoms, 0.0, 1.0);
    let atoms: Vec<SpdMatrix> = knots.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let train = grid(cfg.n_points.unwrap_or(101), 0.0, 1.0);
    let xs: Vec<Vec<f64>> = train.iter().map(|&t| vec![t]).collect();
    let ys: Vec<Vec<f64>> = train.iter().map(|&t| hat_weights(&knots, t)).collect();
    let fit = fit_universal(&xs, &ys, &FitOptions::new(cfg.capacity.unwrap_or(32), cfg.seed))?;
    let approx = RandomizedApproximator::over_atoms(fit.net, atoms.clone(), HeadMode::Projection)?;
    let space = SpdSpace::new(dim);

    let mut diam = 0.0_f64;
    for a in &atoms {
        for b in &atoms {
            diam = diam.max(spd_distance(a, b)?);
        }
    }
    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.models.push(model_size("spd_head", approx.core(), n_atoms));
    report.metric("target_diameter", diam);
    report.metric("fit_error", fit.max_error);
    let mut errors = Vec::new();
    let mut gaps = Vec::new();
    for &t in &grid(cfg.n_test.unwrap_or(201), 0.0, 1.0) {
        let truth = f(t)?;
        let mu = approx.evaluate(&[t])?;
        let mut w1 = 0.0;
        for (a, w) in mu.iter() {
            w1 += w * spd_distance(a, &truth)?;
        }
        let beta = space.barycenter(&mu)?;
        errors.push(w1);
        gaps.push(spd_distance(&beta, &truth)? - w1);
    }
    let sup = errors.iter().copied().fold(0.0, f64::max);
    report.check(Threshold::at_most("sup_w1", sup, cfg.eps.unwrap_or(0.1 * diam.max(f64::MIN_POSITIVE))));
    Ok(finish_barycentric(report, errors, gaps))
}

/// Initial condition for the flow experiment.
const RDE_Y0: [f64; 3] = [0.5, -0.3, 0.0];
/// Default number of distance-feature anchors.
const RDE_ANCHORS: usize = 24;

/// Random two-segment planar drivers from the origin.
fn random_driver<R: Rng + ?Sized>(rng: &mut R) -> Result<PiecewiseLinearPath> {
    let p1 = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let p2 = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    PiecewiseLinearPath::from_vertices(vec![vec![0.0, 0.0], p1, p2])
}

/// Flow of the Heisenberg fields as a function of the driver's level-2 signature.
pub fn run_rde_flow(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n_train = cfg.n_points.unwrap_or(1000);
    let n_test = cfg.n_test.unwrap_or(20);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let drivers: Vec<PiecewiseLinearPath> =
        (0..n_train + n_test).map(|_| random_driver(&mut rng)).collect::<Result<_>>()?;
    let sigs = drivers.iter().map(|p| signature_level2(p, 0.0, 2.0)).collect::<Result<Vec<_>>>()?;

    // Homogeneous quasi-distance, closed under shortest paths, then snowflaked.
    let total = sigs.len();
    let mut edges = Vec::new();
    for i in 0..total {
        for j in (i + 1)..total {
            let q = cc_quasi_distance(&sigs[i], &sigs[j])?;
            if q > 0.0 {
                edges.push((i, j, q));
            }
        }
    }
    let closed = shortest_path_metric(&edges, total)?;
    let source = snowflake_distance(&Modulus::power(0.5), &closed)?;

    let opts = FlowOptions::default();
    let targets: Vec<Vec<f64>> = drivers
        .iter()
        .map(|p| rde_flow_oracle(&HeisenbergField, p, &RDE_Y0, 0.1, &opts).map(|r| r.y))
        .collect::<Result<_>>()?;
    // Anchors are training drivers picked farthest-first, starting from driver 0.
    let n_anchors = cfg.feature_dim.unwrap_or(RDE_ANCHORS).clamp(1, n_train);
    let mut anchors = vec![0usize];
    let mut gap: Vec<f64> = (0..n_train).map(|i| source.d(i, 0)).collect();
    while anchors.len() < n_anchors {
        let next = (0..n_train).fold(0, |b, i| if gap[i] > gap[b] { i } else { b });
        anchors.push(next);
        for i in 0..n_train {
            gap[i] = gap[i].min(source.d(i, next));
        }
    }
    let features: Vec<Vec<f64>> = (0..total).map(|i| anchors.iter().map(|&a| source.d(i, a)).collect()).collect();

    let simplex = CornerSimplex::enclosing(&targets[..n_train], 0.1)?;
    let fit_opts = FitOptions::new(cfg.capacity.unwrap_or(300), cfg.seed);
    let model = build_euclidean(&features[..n_train], &targets[..n_train], simplex, &fit_opts)?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.models.push(model_size("flow", model.approximator.core(), model.simplex.vertices().len()));
    let euclid = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut diam = 0.0_f64;
    for a in &targets {
        for b in &targets {
            diam = diam.max(euclid(a, b));
        }
    }
    let mut errors = Vec::new();
    let mut gaps = Vec::new();
    for i in n_train..total {
        let mu = model.evaluate(&features[i])?;
        let w1: f64 = mu.iter().map(|(v, w)| w * euclid(v, &targets[i])).sum();
        let err = euclid(&model.predict(&features[i])?, &targets[i]);
        errors.push(err);
        gaps.push(err - w1);
    }
    let starts: Vec<Vec<f64>> = (0..5)
        .map(|k| vec![RDE_Y0[0] + 0.1 * k as f64, RDE_Y0[1] - 0.05 * k as f64, 0.02 * k as f64])
        .collect();
    report.metric(
        "flow_lipschitz_in_y0",
        flow_lipschitz_estimate(&HeisenbergField, &drivers[0], &starts, 0.1)?,
    );
    report.metric("target_diameter", diam);
    report.metric("fit_error", model.fit_error);
    report.metric("anchors", anchors.len() as f64);
    let sup = errors.iter().copied().fold(0.0, f64::max);
    report.check(Threshold::at_most("sup_error", sup, cfg.eps.unwrap_or(0.1 * diam)));
    Ok(finish_barycentric(report, errors, gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentKind;
    use crate::oracle::fourier_amplitudes_naive;

    #[test]
    fn operator_ground_truth_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = fourier_synthesize(&random_band_limited(&mut rng), OPERATOR_GRID);
        let fast = square_then_truncate(&u).unwrap();
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let slow = fourier_amplitudes_naive(&sq, 11);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hat_weights_interpolate() {
        let knots = grid(5, 0.0, 1.0);
        assert_eq!(hat_weights(&knots, 0.0), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(hat_weights(&knots, 1.0), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let w = hat_weights(&knots, 0.3);
        assert!((w[1] - 0.8).abs() < 1e-12 && (w[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn classification_passes() {
        let r = run_classification(&ExperimentConfig::new(ExperimentKind::Classification, 2)).unwrap();
        assert!(r.pass, "{:?}", r.thresholds);
    }

    #[test]
    fn spd_map_passes() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SpdMap, 3);
        cfg.n_test = Some(41);
        let r = run_spd_map(&cfg).unwrap();
        assert!(r.pass, "{:?} {:?}", r.thresholds, r.metrics);
    }
}
