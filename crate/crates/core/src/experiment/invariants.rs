//! Randomized property checks against independent oracles, run as one experiment.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::config::ExperimentConfig;
use super::graph::random_connected_graph;
use super::report::{ExperimentReport, Threshold};
use crate::carnot::{signature_level2, tangent_distance, PiecewiseLinearPath, Step2GroupElement};
use crate::error::Result;
use crate::measure::{w1_discrete, w1_to_dirac, w1_with_metric, DiscreteMeasure};
use crate::metric::{shortest_path_metric, snowflake_distance, FiniteMetricSpace, Modulus};
use crate::numerics::{attention_layer, project_simplex, softmax};
use crate::oracle;
use crate::qas::{
    check_mixing_inequality, karcher_barycenter, sym_exp, ArcChart, CircleArc, Euclidean, KarcherOptions, Norm,
    QasSpace, SpdMatrix, SpdSpace, WassersteinSpace, MIXING_SLACK,
};

/// Uniformly distributed point of the simplex `Δ_n`.
pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random measure on `0..n` with between 1 and `max_support` atoms.
pub fn random_measure<R: Rng + ?Sized>(n: usize, max_support: usize, rng: &mut R) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_support.min(n));
    let mut pts: Vec<usize> = (0..n).collect();
    pts.shuffle(rng);
    pts.truncate(k);
    DiscreteMeasure::new(pts, random_simplex(k, rng)).expect("valid random measure")
}

pub fn random_graph_metric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    shortest_path_metric(&random_connected_graph(n, 0.3, rng), n).expect("spanning tree keeps the graph connected")
}

/// `exp(S)` for a random symmetric `S` with entries in `[-scale, scale]`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> SpdMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-scale..scale));
    SpdMatrix::new(sym_exp(&((&m + m.transpose()) * 0.5))).expect("matrix exponential of a symmetric matrix")
}

fn random_step2<R: Rng + ?Sized>(rng: &mut R) -> Step2GroupElement {
    let a12 = rng.gen_range(-1.0..1.0);
    Step2GroupElement::new(
        vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        vec![vec![0.0, a12], vec![-a12, 0.0]],
    )
    .expect("antisymmetric by construction")
}

/// Largest mixing-inequality excess over `trials` random instances.
fn mixing_excess<S: QasSpace, R: Rng>(space: &S, trials: usize, rng: &mut R, mut draw: impl FnMut(&mut R) -> Vec<S::Point>) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let pts = draw(rng);
        let w = random_simplex(pts.len(), rng);
        let i = rng.gen_range(0..pts.len());
        let c = check_mixing_inequality(space, &w, &pts, i)?;
        worst = worst.max(c.lhs - c.rhs);
    }
    Ok(worst)
}

/// Runs every check with `trials` random instances each.
pub fn invariant_suite(seed: u64, trials: usize) -> Result<Vec<Threshold>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // Closed-form distance to a Dirac against the coupling LP.
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let g = random_graph_metric(rng.gen_range(2..=10), &mut rng);
        let mu = random_measure(g.len(), 8, &mut rng);
        let y = rng.gen_range(0..g.len());
        let cost: Vec<Vec<f64>> = mu.atoms().iter().map(|&a| vec![g.d(a, y)]).collect();
        worst = worst.max((w1_to_dirac(&g, &mu, y)? - oracle::w1_lp(&cost, mu.weights(), &[1.0])).abs());
    }
    out.push(Threshold::at_most("w1_dirac_vs_lp", worst, 1e-9));

    // Min-cost flow against the LP.
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let g = random_graph_metric(rng.gen_range(2..=10), &mut rng);
        let mu = random_measure(g.len(), 6, &mut rng);
        let nu = random_measure(g.len(), 6, &mut rng);
        let cost: Vec<Vec<f64>> = mu.atoms().iter().map(|&a| nu.atoms().iter().map(|&b| g.d(a, b)).collect()).collect();
        worst = worst.max((w1_discrete(&g, &mu, &nu)? - oracle::w1_lp(&cost, mu.weights(), nu.weights())).abs());
    }
    out.push(Threshold::at_most("w1_flow_vs_lp", worst, 1e-9));

    // Simplex projection against the active-set enumeration.
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=8);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = project_simplex(&v)?;
        let q = oracle::simplex_projection_active_set(&v);
        worst = worst.max(p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    out.push(Threshold::at_most("simplex_projection_vs_active_set", worst, 1e-10));

    // Softmax shift invariance and attention outputs in the convex hull.
    let (mut shift, mut hull) = (0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let n = rng.gen_range(1..=6);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let c = rng.gen_range(-50.0..50.0);
        let a = softmax(&u)?;
        let b = softmax(&u.iter().map(|x| x + c).collect::<Vec<_>>())?;
        shift = shift.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        let values: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        hull = hull.max(oracle::convex_hull_residual(&values, &attention_layer(&u, &values)?));
    }
    out.push(Threshold::at_most("softmax_shift_invariance", shift, 1e-12));
    out.push(Threshold::at_most("attention_in_convex_hull", hull, 1e-9));

    // Snowflaked graph metrics remain metrics.
    let mut ok = true;
    for _ in 0..trials.min(50) {
        let g = random_graph_metric(rng.gen_range(2..=12), &mut rng);
        let alpha = rng.gen_range(0.2..1.0);
        ok &= snowflake_distance(&Modulus::power(alpha), &g).and_then(|s| s.check_triangle()).is_ok();
    }
    out.push(Threshold::holds("snowflake_triangle", ok));

    // Mixing inequality with C = 1, p = 1 for every mixing function.
    let eu = Euclidean::new(3, Norm::L2);
    out.push(Threshold::at_most(
        "mixing_euclidean",
        mixing_excess(&eu, trials, &mut rng, |r| {
            let k = r.gen_range(1..=5);
            (0..k).map(|_| (0..3).map(|_| r.gen_range(-2.0..2.0)).collect()).collect()
        })?,
        MIXING_SLACK,
    ));
    let ground = random_graph_metric(8, &mut rng);
    let ws = WassersteinSpace::new(ground, 2)?;
    out.push(Threshold::at_most(
        "mixing_wasserstein",
        mixing_excess(&ws, trials, &mut rng, |r| {
            let k = r.gen_range(1..=4);
            (0..k).map(|_| random_measure(8, 3, r)).collect()
        })?,
        MIXING_SLACK,
    ));
    let arc = CircleArc(ArcChart::new(0.4, 0.9 * PI)?);
    out.push(Threshold::at_most(
        "mixing_circle_arc",
        mixing_excess(&arc, trials, &mut rng, |r| {
            let k = r.gen_range(1..=5);
            (0..k).map(|_| 0.4 + r.gen_range(0.0..0.9 * PI)).collect()
        })?,
        MIXING_SLACK,
    ));
    let spd = SpdSpace::new(3);
    out.push(Threshold::at_most(
        "mixing_spd",
        mixing_excess(&spd, trials.min(200), &mut rng, |r| {
            let k = r.gen_range(1..=4);
            (0..k).map(|_| random_spd(3, 0.7, r)).collect()
        })?,
        MIXING_SLACK,
    ));

    // Euclidean barycenter is 1-Lipschitz from W1.
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let draw = |r: &mut ChaCha8Rng| {
            let k = r.gen_range(1..=4);
            let pts: Vec<Vec<f64>> = (0..k).map(|_| (0..2).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
            DiscreteMeasure::new(pts, random_simplex(k, r)).expect("valid")
        };
        let (mu, nu) = (draw(&mut rng), draw(&mut rng));
        let mean = |m: &DiscreteMeasure<Vec<f64>>| -> Vec<f64> {
            (0..2).map(|j| m.iter().map(|(p, w)| w * p[j]).sum()).collect()
        };
        let lhs = Norm::L2.dist(&mean(&mu), &mean(&nu));
        worst = worst.max(lhs - w1_with_metric(&eu2(), &mu, &nu, 64)?);
    }
    out.push(Threshold::at_most("barycenter_lipschitz", worst, 1e-12));

    // Karcher residual and permutation invariance.
    let (mut residual, mut perm) = (0.0_f64, 0.0_f64);
    for _ in 0..trials.min(100) {
        let d = rng.gen_range(1..=5);
        let atoms: Vec<SpdMatrix> = (0..3).map(|_| random_spd(d, 0.6, &mut rng)).collect();
        let w = random_simplex(3, &mut rng);
        let mu = DiscreteMeasure::new(atoms.clone(), w.clone())?;
        let r = karcher_barycenter(&mu, KarcherOptions::default())?;
        residual = residual.max(r.residual);
        let mu_rev = DiscreteMeasure::new(atoms.into_iter().rev().collect(), w.into_iter().rev().collect())?;
        let r2 = karcher_barycenter(&mu_rev, KarcherOptions::default())?;
        perm = perm.max(crate::qas::spd_distance(&r.mean, &r2.mean)?);
    }
    out.push(Threshold::at_most("karcher_residual", residual, 1e-8));
    out.push(Threshold::at_most("karcher_permutation", perm, 1e-7));

    // Group associativity and the Chen identity.
    let (mut assoc, mut chen) = (0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let (a, b, c) = (random_step2(&mut rng), random_step2(&mut rng), random_step2(&mut rng));
        let left = a.multiply(&b)?.multiply(&c)?;
        let right = a.multiply(&b.multiply(&c)?)?;
        assoc = assoc.max(tangent_distance(&left, &right));
        let verts: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let p = PiecewiseLinearPath::from_vertices(verts)?;
        let u = rng.gen_range(0.1..2.9);
        let split = signature_level2(&p, 0.0, u)?.multiply(&signature_level2(&p, u, 3.0)?)?;
        chen = chen.max(tangent_distance(&split, &signature_level2(&p, 0.0, 3.0)?));
    }
    out.push(Threshold::at_most("group_associativity", assoc, 1e-12));
    out.push(Threshold::at_most("chen_identity", chen, 1e-12));

    Ok(out)
}

fn eu2() -> Euclidean {
    Euclidean::new(2, Norm::L2)
}

pub fn run_invariant_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let trials = cfg.n_points.unwrap_or(200);
    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.metric("trials_per_check", trials as f64);
    for t in invariant_suite(cfg.seed, trials)? {
        report.check(t);
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_small() {
        let checks = invariant_suite(11, 30).unwrap();
        for t in &checks {
            assert!(t.pass, "{t:?}");
        }
        assert!(checks.len() >= 15);
    }
}
