//! Directed influence graphs and their all-pairs hop distances.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

/// Directed graph over `n` entities. Every node is implicitly connected to
/// itself; only off-diagonal cells can hold edges.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    n: usize,
    adj: Vec<u8>,
    out: Vec<Vec<u32>>,
    edge_count: usize,
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.adj == other.adj
    }
}

impl Eq for DirectedGraph {}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![0; n * n],
            out: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.insert(i, j);
                }
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(from, to) in edges {
            g.check_cell(from, to)?;
            if !g.has_edge(from, to) {
                g.insert(from, to);
            }
        }
        Ok(g)
    }

    /// Reads the off-diagonal cells of a square 0/1 matrix; the diagonal is ignored.
    pub fn from_matrix(m: &BinaryMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension(format!(
                "adjacency matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && m.get(i, j) {
                    g.insert(i, j);
                }
            }
        }
        Ok(g)
    }

    /// Adjacency with the diagonal rendered as 1.
    pub fn to_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_fn(self.n, self.n, |i, j| i == j || self.has_edge(i, j))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// |E|, off-diagonal edges only.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.n + to] != 0
    }

    pub fn out_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[node].iter().map(|&v| v as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter_map(move |j| self.has_edge(i, j).then_some((i, j)))
        })
    }

    /// Returns a copy with cell `(from, to)` flipped.
    pub fn flip_edge(&self, from: usize, to: usize) -> Result<Self> {
        let mut g = self.clone();
        g.toggle(from, to)?;
        Ok(g)
    }

    /// Flips cell `(from, to)` in place and returns whether the edge is now present.
    pub fn toggle(&mut self, from: usize, to: usize) -> Result<bool> {
        self.check_cell(from, to)?;
        if self.has_edge(from, to) {
            self.adj[from * self.n + to] = 0;
            let list = &mut self.out[from];
            let pos = list.iter().position(|&v| v as usize == to).unwrap();
            list.swap_remove(pos);
            self.edge_count -= 1;
            Ok(false)
        } else {
            self.insert(from, to);
            Ok(true)
        }
    }

    fn insert(&mut self, from: usize, to: usize) {
        self.adj[from * self.n + to] = 1;
        self.out[from].push(to as u32);
        self.edge_count += 1;
    }

    fn check_cell(&self, from: usize, to: usize) -> Result<()> {
        for v in [from, to] {
            if v >= self.n {
                return Err(Error::Index { index: v, size: self.n });
            }
        }
        if from == to {
            return Err(Error::SelfLoop(from));
        }
        Ok(())
    }
}

/// Hop distances `d(from, to)`; unreachable pairs hold a sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    /// Sentinel for unreachable pairs. Never used in arithmetic.
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn new(n: usize) -> Self {
        let mut d = Self {
            n,
            dist: vec![Self::UNREACHABLE; n * n],
        };
        for i in 0..n {
            d.dist[i * n + i] = 0;
        }
        d
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// `None` when `to` is unreachable from `from`.
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> Option<u32> {
        let d = self.dist[from * self.n + to];
        (d != Self::UNREACHABLE).then_some(d)
    }

    /// Raw hop count, [`Self::UNREACHABLE`] when there is no path.
    #[inline]
    pub fn raw(&self, from: usize, to: usize) -> u32 {
        self.dist[from * self.n + to]
    }

    /// Distances from `from` to every node.
    pub fn row(&self, from: usize) -> &[u32] {
        &self.dist[from * self.n..(from + 1) * self.n]
    }
}

/// Hop counts from `source` along edge direction; unreachable nodes get
/// [`DistanceMatrix::UNREACHABLE`].
pub fn bfs_distances_from(g: &DirectedGraph, source: usize) -> Result<Vec<u32>> {
    if source >= g.n {
        return Err(Error::Index { index: source, size: g.n });
    }
    let mut row = vec![DistanceMatrix::UNREACHABLE; g.n];
    let mut queue = VecDeque::with_capacity(g.n);
    bfs_into(g, source, &mut row, &mut queue);
    Ok(row)
}

fn bfs_into(g: &DirectedGraph, source: usize, row: &mut [u32], queue: &mut VecDeque<u32>) {
    row.fill(DistanceMatrix::UNREACHABLE);
    row[source] = 0;
    queue.clear();
    queue.push_back(source as u32);
    while let Some(v) = queue.pop_front() {
        let next = row[v as usize] + 1;
        for &w in &g.out[v as usize] {
            if row[w as usize] == DistanceMatrix::UNREACHABLE {
                row[w as usize] = next;
                queue.push_back(w);
            }
        }
    }
}

/// One BFS per node: O(n·(n + |E|)).
pub fn all_pairs_distances(g: &DirectedGraph) -> DistanceMatrix {
    let mut d = DistanceMatrix::new(g.n);
    all_pairs_distances_into(g, &mut d, &mut VecDeque::with_capacity(g.n));
    d
}

/// Recomputes `out` for `g` without allocating.
pub fn all_pairs_distances_into(g: &DirectedGraph, out: &mut DistanceMatrix, queue: &mut VecDeque<u32>) {
    let n = g.n;
    out.n = n;
    out.dist.resize(n * n, DistanceMatrix::UNREACHABLE);
    for (s, row) in out.dist.chunks_mut(n.max(1)).enumerate().take(n) {
        bfs_into(g, s, row, queue);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: u32 = DistanceMatrix::UNREACHABLE;

    fn intro_graph() -> DirectedGraph {
        // r1 -> r2, r3 -> r2
        DirectedGraph::from_edges(3, &[(0, 1), (2, 1)]).unwrap()
    }

    #[test]
    fn bfs_examples() {
        assert_eq!(bfs_distances_from(&intro_graph(), 0).unwrap(), [0, 1, INF]);
        assert_eq!(bfs_distances_from(&DirectedGraph::empty(3), 1).unwrap(), [INF, 0, INF]);
        assert_eq!(bfs_distances_from(&DirectedGraph::complete(4), 0).unwrap(), [0, 1, 1, 1]);
        assert!(matches!(
            bfs_distances_from(&DirectedGraph::empty(3), 3),
            Err(Error::Index { index: 3, size: 3 })
        ));
    }

    #[test]
    fn apsp_examples() {
        let d = all_pairs_distances(&DirectedGraph::empty(3));
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(d.get(a, b), (a == b).then_some(0));
            }
        }

        let d = all_pairs_distances(&intro_graph());
        assert_eq!(d.get(0, 1), Some(1));
        assert_eq!(d.get(2, 1), Some(1));
        assert_eq!(d.get(1, 0), None);
        assert_eq!(d.get(1, 2), None);
        assert_eq!(d.get(0, 2), None);
        assert_eq!(d.get(2, 0), None);

        let chain = DirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(all_pairs_distances(&chain).get(0, 2), Some(2));
    }

    #[test]
    fn flip_examples() {
        let g = DirectedGraph::empty(2).flip_edge(0, 1).unwrap();
        assert!(g.has_edge(0, 1));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.flip_edge(0, 1).unwrap(), DirectedGraph::empty(2));
        assert!(matches!(g.flip_edge(0, 0), Err(Error::SelfLoop(0))));
    }

    #[test]
    fn matrix_form_has_unit_diagonal() {
        let m = intro_graph().to_matrix();
        assert_eq!(m.to_text(), "1,1,0\n0,1,0\n0,1,1\n");
        assert_eq!(DirectedGraph::from_matrix(&m).unwrap(), intro_graph());
    }
}
