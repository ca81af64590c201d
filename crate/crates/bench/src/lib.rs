//! Seeded inputs shared by the benchmarks.

use qas_core::experiment::invariants::{random_graph_metric, random_measure, random_simplex, random_spd};
use qas_core::qas::SpdMatrix;
use qas_core::{DiscreteMeasure, FiniteMetricSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A graph metric on `n` vertices and two measures with up to `support` atoms each.
pub fn transport_instance(n: usize, support: usize, seed: u64) -> (FiniteMetricSpace, DiscreteMeasure, DiscreteMeasure) {
    let mut r = rng(seed);
    let g = random_graph_metric(n, &mut r);
    let mu = random_measure(n, support, &mut r);
    let nu = random_measure(n, support, &mut r);
    (g, mu, nu)
}

pub fn logits(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| (0..n).map(|_| r.gen_range(-3.0..3.0)).collect()).collect()
}

pub fn spd_measure(dim: usize, atoms: usize, seed: u64) -> DiscreteMeasure<SpdMatrix> {
    let mut r = rng(seed);
    let pts = (0..atoms).map(|_| random_spd(dim, 0.7, &mut r)).collect();
    DiscreteMeasure::new(pts, random_simplex(atoms, &mut r)).expect("weights on the simplex")
}
