//! Independent reference implementations.
//!
//! These are deliberately naive: exhaustive enumeration, generic LP solves,
//! Riemann sums. They share no code with the production routines and exist so
//! tests and the invariant suite have something to disagree with.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Simplex projection by enumerating every support set.
///
/// For a support `S` the KKT point is `w_S = v_S - (Σ v_S - 1)/|S|`; the answer
/// is the feasible candidate closest to `v`. Exponential in `v.len()`.
pub fn simplex_projection_active_set(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!((1..=20).contains(&n), "active-set oracle is for small N");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut w = vec![0.0; n];
        let mut feasible = true;
        for &i in &support {
            w[i] = v[i] - shift;
            if w[i] < 0.0 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, w));
        }
    }
    best.expect("the singleton support at the largest entry is always feasible").1
}

/// Optimal transport cost by solving the coupling LP directly.
///
/// `cost[i][j]` is the ground cost between source atom `i` and target atom `j`.
pub fn w1_lp(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, &ai) in a.iter().enumerate() {
        let expr: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(&expr[..], ComparisonOp::Eq, ai);
    }
    for (j, &bj) in b.iter().enumerate() {
        let expr: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(&expr[..], ComparisonOp::Eq, bj);
    }
    problem.solve().expect("transport LP is always feasible").objective()
}

/// L1 residual of the best convex combination of `points` approximating `x`.
///
/// Zero (up to LP round-off) exactly when `x` lies in the convex hull.
pub fn convex_hull_residual(points: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let lambdas: Vec<_> = points.iter().map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    problem.add_constraint(
        &lambdas.iter().map(|&l| (l, 1.0)).collect::<Vec<_>>()[..],
        ComparisonOp::Eq,
        1.0,
    );
    for (k, &xk) in x.iter().enumerate() {
        let plus = problem.add_var(1.0, (0.0, f64::INFINITY));
        let minus = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut expr: Vec<_> = lambdas.iter().zip(points).map(|(&l, p)| (l, p[k])).collect();
        expr.push((plus, 1.0));
        expr.push((minus, -1.0));
        problem.add_constraint(&expr[..], ComparisonOp::Eq, xk);
    }
    problem.solve().expect("hull LP is always feasible").objective()
}

/// All-pairs shortest paths by Floyd–Warshall; `None` where unreachable.
pub fn floyd_warshall(edges: &[(usize, usize, f64)], n: usize) -> Vec<Vec<Option<f64>>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(i, j, w) in edges {
        d[i][j] = d[i][j].min(w);
        d[j][i] = d[j][i].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let alt = d[i][k] + d[k][j];
                if alt < d[i][j] {
                    d[i][j] = alt;
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().map(|x| x.is_finite().then_some(x)).collect())
        .collect()
}

/// Real Fourier amplitudes `[a0, a1, b1, a2, b2, ...]` of grid samples by direct summation.
///
/// `u(θ) ≈ a0 + Σ_k a_k cos kθ + b_k sin kθ` with `θ_j = 2πj/G`.
pub fn fourier_amplitudes_naive(samples: &[f64], n_coeffs: usize) -> Vec<f64> {
    let g = samples.len() as f64;
    let mut out = Vec::with_capacity(n_coeffs);
    for idx in 0..n_coeffs {
        let k = idx.div_ceil(2);
        let value: f64 = samples
            .iter()
            .enumerate()
            .map(|(j, &u)| {
                let theta = 2.0 * std::f64::consts::PI * (k * j) as f64 / g;
                if idx == 0 {
                    u
                } else if idx % 2 == 1 {
                    u * theta.cos()
                } else {
                    u * theta.sin()
                }
            })
            .sum();
        out.push(if idx == 0 { value / g } else { 2.0 * value / g });
    }
    out
}

/// Signed area `½∫ x¹dx² − x²dx¹` of a planar polyline via midpoint Riemann sums.
pub fn levy_area_riemann(vertices: &[[f64; 2]], steps_per_segment: usize) -> f64 {
    let mut area = 0.0;
    for seg in vertices.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let dx = [(q[0] - p[0]) / steps_per_segment as f64, (q[1] - p[1]) / steps_per_segment as f64];
        for s in 0..steps_per_segment {
            let t = (s as f64 + 0.5) / steps_per_segment as f64;
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            area += 0.5 * (x[0] * dx[1] - x[1] * dx[0]);
        }
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_transport_small() {
        // (1/2, 1/2) vs (3/4, 1/4) on two points at distance 2.
        let cost = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        assert!((w1_lp(&cost, &[0.5, 0.5], &[0.75, 0.25]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hull_membership() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(convex_hull_residual(&tri, &[0.2, 0.2]) < 1e-12);
        assert!(convex_hull_residual(&tri, &[1.0, 1.0]) > 0.5);
    }

    #[test]
    fn active_set_examples() {
        assert_eq!(simplex_projection_active_set(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(simplex_projection_active_set(&[1.0, 1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn unit_square_area() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        assert!((levy_area_riemann(&sq, 1000) - 1.0).abs() < 1e-9);
    }
}
