//! Reference implementations that share no code with the library's
//! likelihood path: Floyd-Warshall distances and plain probability products.

#![allow(dead_code)]

use linkinit::{BinaryMatrix, DirectedGraph};

pub const INF: usize = usize::MAX;

pub fn floyd_warshall(g: &DirectedGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i == j {
                *x = 0;
            } else if g.has_edge(i, j) {
                *x = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// `Pr(M(i,u) = 0)` as a literal product over sources.
pub fn p_zero(i: usize, u: usize, source: &dyn Fn(usize, usize) -> bool, d: &[Vec<usize>], alpha: f64) -> f64 {
    let mut p = 1.0;
    for (j, row) in d.iter().enumerate() {
        if !source(j, u) {
            continue;
        }
        let b = match row[i] {
            INF => 0.0,
            0 => 1.0,
            h => alpha.powi(h as i32),
        };
        p *= 1.0 - b;
    }
    p
}

/// `ln Pr(M | sources)` as the log of a product of cell probabilities.
pub fn log_lik(m: &BinaryMatrix, source: &dyn Fn(usize, usize) -> bool, d: &[Vec<usize>], alpha: f64) -> f64 {
    let mut prob = 1.0f64;
    let mut log = 0.0;
    for i in 0..m.rows() {
        for u in 0..m.cols() {
            let z = p_zero(i, u, source, d, alpha);
            let cell = if m.get(i, u) { 1.0 - z } else { z };
            prob *= cell;
            // Keep the product in range on larger inputs.
            if prob < 1e-200 {
                log += prob.ln();
                prob = 1.0;
            }
        }
    }
    log + prob.ln()
}

pub fn log_lik_single(m: &BinaryMatrix, g: &DirectedGraph, n: &BinaryMatrix, alpha: f64) -> f64 {
    let d = floyd_warshall(g);
    log_lik(m, &|j, u| n.get(j, u), &d, alpha)
}

pub fn log_lik_temporal(seq: &[BinaryMatrix], g: &DirectedGraph, inits: &[BinaryMatrix], alpha: f64) -> f64 {
    let d = floyd_warshall(g);
    let mut total = 0.0;
    for t in 0..seq.len() {
        let n = &inits[t];
        total += if t == 0 {
            log_lik(&seq[0], &|j, u| n.get(j, u), &d, alpha)
        } else {
            let prev = &seq[t - 1];
            log_lik(&seq[t], &|j, u| prev.get(j, u) || n.get(j, u), &d, alpha)
        };
    }
    total
}

/// Graph whose off-diagonal cells, in row-major order, are the bits of `code`.
pub fn graph_from_code(n: usize, code: u64) -> DirectedGraph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                if code >> bit & 1 == 1 {
                    edges.push((i, j));
                }
                bit += 1;
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}

pub fn matrix_from_code(rows: usize, cols: usize, code: u64) -> BinaryMatrix {
    BinaryMatrix::from_fn(rows, cols, |i, u| code >> (i * cols + u) & 1 == 1)
}

/// Exact posterior marginals by enumeration: `(edge probs n×n, initiator probs n×m)`.
pub fn exact_marginals(m: &BinaryMatrix, alpha: f64, c1: f64, c2: f64) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = m.shape();
    let g_bits = n * (n - 1);
    let n_bits = n * k;
    let mut weights = Vec::new();
    for gc in 0..1u64 << g_bits {
        let g = graph_from_code(n, gc);
        for nc in 0..1u64 << n_bits {
            let init = matrix_from_code(n, k, nc);
            let lp = log_lik_single(m, &g, &init, alpha)
                - c1 * g.edge_count() as f64
                - c2 * init.count_ones() as f64;
            weights.push((g.clone(), init, lp));
        }
    }
    let max = weights.iter().map(|w| w.2).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut ge = vec![0.0; n * n];
    let mut ne = vec![0.0; n * k];
    for (g, init, lp) in &weights {
        let w = (lp - max).exp();
        z += w;
        for i in 0..n {
            for j in 0..n {
                if g.has_edge(i, j) {
                    ge[i * n + j] += w;
                }
            }
            for u in 0..k {
                if init.get(i, u) {
                    ne[i * k + u] += w;
                }
            }
        }
    }
    for x in ge.iter_mut().chain(ne.iter_mut()) {
        *x /= z;
    }
    for i in 0..n {
        ge[i * n + i] = 1.0;
    }
    (ge, ne)
}
