//! Pluggable propagation models and the model-agnostic likelihood
//! `Pr(M | G, N) ∝ exp(−c · |M − M_p|)`, where `M_p` is the expected output of
//! the model and `|·|` sums absolute entry differences.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, DirectedGraph};
use crate::matrix::{BinaryMatrix, RealMatrix};
use crate::sp::{prob_entry_zero, SpParams};

/// A (possibly random) map from `(G, N)` to an observation matrix.
///
/// Implementations must keep every initiator active: each 1-entry of `N` is a
/// 1-entry of every realization.
pub trait PropagationModel: fmt::Debug + Send + Sync {
    fn realize(&self, g: &DirectedGraph, initiators: &BinaryMatrix, rng: &mut dyn RngCore) -> BinaryMatrix;

    /// True when `realize` ignores its randomness source.
    fn is_deterministic(&self) -> bool {
        false
    }

    /// Closed-form `E[P(G, N)]`, when the model has one.
    fn exact_expectation(&self, _g: &DirectedGraph, _initiators: &BinaryMatrix) -> Option<RealMatrix> {
        None
    }
}

/// The SP model read generatively: each cell is an independent Bernoulli draw.
#[derive(Debug, Clone, Copy)]
pub struct ShortestPath(pub SpParams);

impl PropagationModel for ShortestPath {
    fn realize(&self, g: &DirectedGraph, initiators: &BinaryMatrix, rng: &mut dyn RngCore) -> BinaryMatrix {
        sp_forward(g, initiators, self.0, rng)
    }

    fn is_deterministic(&self) -> bool {
        let a = self.0.alpha();
        a == 0.0 || a == 1.0
    }

    fn exact_expectation(&self, g: &DirectedGraph, initiators: &BinaryMatrix) -> Option<RealMatrix> {
        let d = all_pairs_distances(g);
        Some(RealMatrix::from_fn(initiators.rows(), initiators.cols(), |i, u| {
            1.0 - prob_entry_zero(i, u, initiators, &d, self.0)
        }))
    }
}

/// Independent cascade: a newly activated node gets one chance to activate
/// each out-neighbor, with a fixed probability, separately per signal.
#[derive(Debug, Clone, Copy)]
pub struct IndependentCascade {
    edge_prob: f64,
}

impl IndependentCascade {
    pub fn new(edge_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::Config(format!(
                "edge probability must lie in [0, 1], got {edge_prob}"
            )));
        }
        Ok(Self { edge_prob })
    }

    pub fn edge_prob(&self) -> f64 {
        self.edge_prob
    }
}

impl PropagationModel for IndependentCascade {
    fn realize(&self, g: &DirectedGraph, initiators: &BinaryMatrix, rng: &mut dyn RngCore) -> BinaryMatrix {
        ic_forward(g, initiators, self.edge_prob, rng)
    }

    fn is_deterministic(&self) -> bool {
        self.edge_prob == 0.0 || self.edge_prob == 1.0
    }
}

/// Draws `M` cell by cell with `Pr(M(i,u) = 1) = 1 − Pr(M(i,u) = 0 | G, N)`.
pub fn sp_forward<R: RngCore + ?Sized>(
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    p: SpParams,
    rng: &mut R,
) -> BinaryMatrix {
    let d = all_pairs_distances(g);
    let mut out = initiators.clone();
    for i in 0..initiators.rows() {
        for u in 0..initiators.cols() {
            if initiators.get(i, u) {
                continue;
            }
            let p_one = 1.0 - prob_entry_zero(i, u, initiators, &d, p);
            if p_one > 0.0 && rng.random::<f64>() < p_one {
                out.set(i, u, true);
            }
        }
    }
    out
}

/// One independent-cascade realization per signal.
pub fn ic_forward<R: RngCore + ?Sized>(
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    edge_prob: f64,
    rng: &mut R,
) -> BinaryMatrix {
    let mut out = initiators.clone();
    let mut queue = VecDeque::new();
    for u in 0..initiators.cols() {
        queue.clear();
        queue.extend((0..initiators.rows()).filter(|&i| initiators.get(i, u)));
        while let Some(v) = queue.pop_front() {
            for w in g.out_neighbors(v) {
                if out.get(w, u) {
                    continue;
                }
                let fires = edge_prob >= 1.0 || (edge_prob > 0.0 && rng.random::<f64>() < edge_prob);
                if fires {
                    out.set(w, u, true);
                    queue.push_back(w);
                }
            }
        }
    }
    out
}

/// Penalty coefficient `c` and Monte Carlo sample count for [`generic_log_likelihood`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericLikelihoodParams {
    c: f64,
    mc_samples: usize,
}

impl GenericLikelihoodParams {
    pub const DEFAULT_MC_SAMPLES: usize = 100;

    pub fn new(c: f64, mc_samples: usize) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("penalty c must be finite and >= 0, got {c}")));
        }
        if mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        Ok(Self { c, mc_samples })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }
}

/// `M_p = E[P(G, N)]`.
///
/// Deterministic models are realized once; models with a closed form use it;
/// otherwise this is the mean of `mc_samples` realizations.
pub fn expected_matrix(
    model: &dyn PropagationModel,
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    params: GenericLikelihoodParams,
    rng: &mut dyn RngCore,
) -> RealMatrix {
    if model.is_deterministic() {
        return model.realize(g, initiators, rng).to_real();
    }
    if let Some(exact) = model.exact_expectation(g, initiators) {
        return exact;
    }
    let (n, m) = initiators.shape();
    let mut counts = vec![0u32; n * m];
    for _ in 0..params.mc_samples {
        let draw = model.realize(g, initiators, rng);
        for (c, &b) in counts.iter_mut().zip(draw.as_bytes()) {
            *c += b as u32;
        }
    }
    let k = params.mc_samples as f64;
    RealMatrix::from_vec(n, m, counts.into_iter().map(|c| c as f64 / k).collect())
}

/// `−c · Σ |M(i,u) − M_p(i,u)|`, the unnormalized log-likelihood.
pub fn generic_log_likelihood(
    observed: &BinaryMatrix,
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    model: &dyn PropagationModel,
    params: GenericLikelihoodParams,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    crate::matrix::check_same_shape(observed, initiators)?;
    if g.node_count() != observed.rows() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes, matrix has {} rows",
            g.node_count(),
            observed.rows()
        )));
    }
    let expected = expected_matrix(model, g, initiators, params, rng);
    Ok(0.0 - params.c * l1_distance(observed, &expected))
}

pub(crate) fn l1_distance(observed: &BinaryMatrix, expected: &RealMatrix) -> f64 {
    observed
        .as_bytes()
        .iter()
        .zip(expected.values())
        .map(|(&b, &e)| (b as f64 - e).abs())
        .sum()
}
