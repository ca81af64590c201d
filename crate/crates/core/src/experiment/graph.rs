//! Maps between finite graphs and cover-based graph colouring.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::{ExperimentReport, ModelSize, PointRecord, Threshold};
use crate::approximator::{argmax_atom, build_finite_map, sweep_finite_map, FiniteBudget, FiniteMapModel};
use crate::error::{Error, Result};
use crate::metric::{parse_edge_list, shortest_path_metric, Edge, FiniteMetricSpace};

/// Random spanning tree plus extra edges, weights uniform in `[0.5, 2]`.
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, extra_edge_prob: f64, rng: &mut R) -> Vec<Edge> {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, rng.gen_range(0.5..2.0)));
    }
    for u in 0..n {
        for v in (u + 2)..n {
            if rng.gen::<f64>() < extra_edge_prob {
                edges.push((u, v, rng.gen_range(0.5..2.0)));
            }
        }
    }
    edges
}

/// Unit-weight `rows × cols` grid graph.
pub fn grid_graph(rows: usize, cols: usize) -> Vec<Edge> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, 1.0));
            }
        }
    }
    edges
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: &Path) -> Result<(Vec<Edge>, usize)> {
    parse_edge_list(&read(path)?)
}

/// Target indices separated by whitespace; `#` starts a comment.
pub fn parse_map(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            out.push(tok.parse().map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("{tok:?}: {e}"),
            })?);
        }
    }
    Ok(out)
}

/// One piece per non-empty line.
pub fn parse_cover(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut pieces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let piece = body
            .split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("{tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        pieces.push(piece);
    }
    Ok(pieces)
}

/// Induced-subgraph distances on `piece`; `∞` between disconnected vertices.
fn induced_distances(edges: &[Edge], piece: &[usize]) -> Vec<Vec<f64>> {
    let k = piece.len();
    let pos = |v: usize| piece.iter().position(|&p| p == v);
    let mut d = vec![vec![f64::INFINITY; k]; k];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        if let (Some(i), Some(j)) = (pos(u), pos(v)) {
            d[i][j] = d[i][j].min(w);
            d[j][i] = d[j][i].min(w);
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Checks that every vertex is covered and that each piece's induced
/// shortest-path metric agrees with the global one.
pub fn verify_cover(edges: &[Edge], n: usize, pieces: &[Vec<usize>]) -> Result<FiniteMetricSpace> {
    let global = shortest_path_metric(edges, n)?;
    let mut covered = vec![false; n];
    for (p, piece) in pieces.iter().enumerate() {
        for &v in piece {
            global.check_index(v)?;
            covered[v] = true;
        }
        let local = induced_distances(edges, piece);
        for i in 0..piece.len() {
            for j in (i + 1)..piece.len() {
                let (u, v) = (piece[i], piece[j]);
                let g = global.d(u, v);
                if (local[i][j] - g).abs() > 1e-12 * g.max(1.0) {
                    return Err(Error::Cover {
                        piece: p,
                        u,
                        v,
                        global: g,
                        local: local[i][j],
                    });
                }
            }
        }
    }
    if let Some(v) = covered.iter().position(|c| !c) {
        return Err(Error::Config(format!("vertex {v} is not covered by any piece")));
    }
    Ok(global)
}

/// Smallest-available-colour greedy colouring in index order.
pub fn greedy_coloring(edges: &[Edge], n: usize) -> Vec<usize> {
    let mut nbrs = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        nbrs[u].push(v);
        nbrs[v].push(u);
    }
    let mut color = vec![usize::MAX; n];
    for v in 0..n {
        let mut c = 0;
        while nbrs[v].iter().any(|&u| color[u] == c) {
            c += 1;
        }
        color[v] = c;
    }
    color
}

fn model_size(name: String, m: &FiniteMapModel) -> ModelSize {
    ModelSize {
        name,
        capacity: m.approximator.core().capacity(),
        feature_dim: m.compression.d,
        n_atoms: m.atoms.len(),
        parameters: m.approximator.core().parameter_count(),
    }
}

pub fn run_graph_map(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (src_edges, n) = match &cfg.source_graph {
        Some(p) => read_graph(p)?,
        None => {
            let n = cfg.n_points.unwrap_or(10);
            (random_connected_graph(n, 0.2, &mut rng), n)
        }
    };
    let (tgt_edges, m) = match &cfg.target_graph {
        Some(p) => read_graph(p)?,
        None => {
            let m = cfg.target_size.unwrap_or(8);
            (random_connected_graph(m, 0.2, &mut rng), m)
        }
    };
    let source = shortest_path_metric(&src_edges, n)?;
    let target = shortest_path_metric(&tgt_edges, m)?;
    let f = match &cfg.map {
        Some(p) => parse_map(&read(p)?)?,
        None => (0..n).map(|_| rng.gen_range(0..m)).collect(),
    };
    if f.len() != n {
        return Err(Error::Config(format!("map lists {} values for {n} source vertices", f.len())));
    }

    let budget = FiniteBudget {
        capacity: cfg.capacity.unwrap_or(2 * n + 8),
        n_atoms: cfg.n_atoms,
        feature_dim: cfg.feature_dim,
    };
    let model = build_finite_map(&source, &target, &f, &budget, cfg.seed)?;
    let errors = model.errors(&target, &f)?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    report.models.push(model_size("core".into(), &model));
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
    report.check(Threshold::at_most("sup_w1", sup, cfg.eps.unwrap_or(1e-6)));
    report.certified_mass = Some(1.0);
    report.metric("fit_error", model.fit_error);
    report.metric("target_diameter", target.diameter());

    // Smallest power-of-two width reaching 5% of the target diameter.
    let caps: Vec<usize> = (0..=10).map(|k| 1usize << k).collect();
    let (_, trace) = sweep_finite_map(&source, &target, &f, &caps, cfg.n_atoms, cfg.seed, 0.05 * target.diameter())?;
    let last = trace.last().expect("sweep visits at least one width");
    report.metric("sweep_capacity", last.capacity as f64);
    report.metric("sweep_sup_w1", last.sup_error);
    if model.ridge_fallback {
        report.notes.push("ridge system needed extra regularization".into());
    }
    Ok(report.finish())
}

pub fn run_graph_coloring(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (edges, n) = match &cfg.source_graph {
        Some(p) => read_graph(p)?,
        None => (grid_graph(6, 6), 36),
    };
    let pieces = match &cfg.cover {
        Some(p) => parse_cover(&read(p)?)?,
        None => vec![(0..n).collect()],
    };
    let global = verify_cover(&edges, n, &pieces)?;
    let f = match &cfg.map {
        Some(p) => parse_map(&read(p)?)?,
        None => greedy_coloring(&edges, n),
    };
    if f.len() != n {
        return Err(Error::Config(format!("colouring lists {} values for {n} vertices", f.len())));
    }
    let k = f.iter().max().map_or(1, |&c| c + 1);
    let colors = FiniteMetricSpace::from_fn(k.max(1), |i, j| if i == j { 0.0 } else { 1.0 })?;

    let mut report = ExperimentReport::new(cfg.kind, cfg.seed);
    let mut predicted = vec![usize::MAX; n];
    for (p, piece) in pieces.iter().enumerate() {
        let sub = global.subspace(piece)?;
        let fp: Vec<usize> = piece.iter().map(|&v| f[v]).collect();
        let budget = FiniteBudget {
            capacity: cfg.capacity.unwrap_or(2 * piece.len() + 8),
            n_atoms: None,
            feature_dim: None,
        };
        let model = build_finite_map(&sub, &colors, &fp, &budget, cfg.seed.wrapping_add(p as u64))?;
        report.models.push(model_size(format!("piece_{p}"), &model));
        for (local, &v) in piece.iter().enumerate() {
            if predicted[v] != usize::MAX {
                continue;
            }
            let mu = model.evaluate(local)?;
            let error = crate::measure::w1_to_dirac(&colors, &mu, f[v])?;
            predicted[v] = argmax_atom(&mu);
            report.points.push(PointRecord {
                id: v,
                error,
                certified: true,
                part: Some(p),
            });
        }
    }
    report.points.sort_by_key(|r| r.id);
    let violations = edges.iter().filter(|&&(u, v, _)| predicted[u] == predicted[v]).count();
    let input_violations = edges.iter().filter(|&&(u, v, _)| f[u] == f[v]).count();
    let sup = report.points.iter().map(|r| r.error).fold(0.0, f64::max);
    report.check(Threshold::at_most("sup_w1", sup, cfg.eps.unwrap_or(0.25).min(0.5)));
    report.check(Threshold::at_most("adjacent_same_color", violations as f64, 0.0));
    report.metric("colors", k as f64);
    report.metric("pieces", pieces.len() as f64);
    report.metric("input_violations", input_violations as f64);
    report.certified_mass = Some(1.0);
    Ok(report.finish())
}
