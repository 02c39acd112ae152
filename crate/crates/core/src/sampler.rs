//! Metropolis-Hastings over graph/initiator pairs.
//!
//! A state is a directed graph `G` plus one initiator matrix (or one per
//! timestep). A local move flips a single cell: with probability 1/2 an
//! off-diagonal cell of `G`, otherwise a cell of one initiator matrix. Every
//! state has the same number of neighbors, so the proposal is symmetric and
//! accepting with probability `min{1, π'/π}` targets
//!
//! ```text
//! π(G, N | M) ∝ Pr(M | G, N) · exp(−c1·|E|) · exp(−c2·|N|)
//! ```
//!
//! The normalizing constant cancels in every ratio and is never computed.
//!
//! Initiator flips update the per-cell likelihood cache in O(n). Edge flips
//! recompute distances and the cache into scratch buffers that are swapped in
//! only when the move is accepted.
//!
//! Each step draws from the chain's generator in a fixed order: move kind,
//! cell indices, any model simulation, then the acceptance uniform.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, all_pairs_distances_into, DirectedGraph, DistanceMatrix};
use crate::matrix::{BinaryMatrix, ObservationSequence, RealMatrix};
use crate::propagation::{generic_log_likelihood, GenericLikelihoodParams, PropagationModel};
use crate::sp::{step_log_likelihood, InfluenceTable, LikelihoodCache, LogLikelihood, SpParams};

/// Sparsity penalties: `Pr(G) ∝ exp(−c1·|E|)`, `Pr(N) ∝ exp(−c2·|N|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    c1: f64,
    c2: f64,
}

impl Priors {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {c}")));
            }
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    fn log_prior_counts(&self, edges: usize, initiators: usize) -> f64 {
        -(self.c1 * edges as f64) - self.c2 * initiators as f64
    }
}

impl Default for Priors {
    /// An initiator costs more than an edge: c1 = 2, c2 = 9.
    fn default() -> Self {
        Self { c1: 2.0, c2: 9.0 }
    }
}

/// Unnormalized `ln Pr(G) + Σ_t ln Pr(N_t)`.
pub fn log_prior(g: &DirectedGraph, initiators: &[BinaryMatrix], p: &Priors) -> f64 {
    let ones: usize = initiators.iter().map(BinaryMatrix::count_ones).sum();
    p.log_prior_counts(g.edge_count(), ones)
}

/// How snapshot averages are formed after burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Each snapshot averages its own disjoint block of samples.
    #[default]
    Blockwise,
    /// Each snapshot averages every sample since the end of burn-in.
    Cumulative,
}

/// Which likelihood the chain targets.
#[derive(Debug, Clone, Default)]
pub enum LikelihoodModel {
    /// Exact SP likelihood with the incremental cache.
    #[default]
    ShortestPath,
    /// `exp(−c·|M − E[P(G,N)]|)` for an arbitrary propagation model. The
    /// expectation is re-estimated for every proposal, so for random models
    /// acceptance decisions carry Monte Carlo noise. Single-matrix only.
    Generic {
        model: Arc<dyn PropagationModel>,
        params: GenericLikelihoodParams,
    },
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub total_steps: u64,
    pub burnin_steps: u64,
    pub snapshot_every: u64,
    pub seed: u64,
    pub alpha: SpParams,
    pub priors: Priors,
    pub averaging: Averaging,
    pub likelihood: LikelihoodModel,
}

impl ChainConfig {
    /// 2·10^5 steps, the first 10^5 discarded, a snapshot every 10^4 samples,
    /// c1 = 2, c2 = 9, seed 0.
    pub fn new(alpha: SpParams) -> Self {
        Self {
            total_steps: 200_000,
            burnin_steps: 100_000,
            snapshot_every: 10_000,
            seed: 0,
            alpha,
            priors: Priors::default(),
            averaging: Averaging::Blockwise,
            likelihood: LikelihoodModel::ShortestPath,
        }
    }

    pub fn steps(mut self, total: u64, burnin: u64, snapshot_every: u64) -> Self {
        self.total_steps = total;
        self.burnin_steps = burnin;
        self.snapshot_every = snapshot_every;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn priors(mut self, priors: Priors) -> Self {
        self.priors = priors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.snapshot_every == 0 {
            return Err(Error::Config("steps and snapshot interval must be positive".into()));
        }
        if self.burnin_steps >= self.total_steps {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the total step count ({})",
                self.burnin_steps, self.total_steps
            )));
        }
        if !(self.total_steps - self.burnin_steps).is_multiple_of(self.snapshot_every) {
            return Err(Error::Config(format!(
                "sampling steps ({}) must be a multiple of the snapshot interval ({})",
                self.total_steps - self.burnin_steps,
                self.snapshot_every
            )));
        }
        Ok(())
    }

    /// Number of snapshots the run produces.
    pub fn blocks(&self) -> u64 {
        (self.total_steps - self.burnin_steps) / self.snapshot_every
    }
}

/// Input data: one observation matrix or a monotone sequence of them.
#[derive(Debug, Clone)]
pub enum Observations {
    Single(BinaryMatrix),
    Temporal(ObservationSequence),
}

impl Observations {
    pub fn timesteps(&self) -> usize {
        match self {
            Observations::Single(_) => 1,
            Observations::Temporal(seq) => seq.len(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Observations::Single(m) => m.shape(),
            Observations::Temporal(seq) => seq.shape(),
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Observations::Temporal(_))
    }

    fn matrices(&self) -> &[BinaryMatrix] {
        match self {
            Observations::Single(m) => std::slice::from_ref(m),
            Observations::Temporal(seq) => seq.matrices(),
        }
    }

    /// The prescribed starting initiators: `N_1 = M_1`, `N_t = M_t \ M_{t-1}`.
    pub fn start_initiators(&self) -> Vec<BinaryMatrix> {
        let ms = self.matrices();
        let mut out = vec![ms[0].clone()];
        for w in ms.windows(2) {
            out.push(w[1].difference(&w[0]).expect("sequence shapes agree"));
        }
        out
    }
}

impl From<BinaryMatrix> for Observations {
    fn from(m: BinaryMatrix) -> Self {
        Observations::Single(m)
    }
}

impl From<ObservationSequence> for Observations {
    fn from(seq: ObservationSequence) -> Self {
        Observations::Temporal(seq)
    }
}

/// A single-cell change of the chain state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveProposal {
    Edge { from: usize, to: usize },
    /// Flip `N_t(row, col)`; `t` is 0 in single-matrix mode.
    Initiator { t: usize, row: usize, col: usize },
}

/// The current graph, distances and initiators with their log-posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    graph: DirectedGraph,
    distances: DistanceMatrix,
    initiators: Vec<BinaryMatrix>,
    log_likelihood: f64,
    log_posterior: f64,
}

impl SamplerState {
    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn initiators(&self) -> &[BinaryMatrix] {
        &self.initiators
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Unnormalized log-posterior.
    pub fn log_posterior(&self) -> f64 {
        self.log_posterior
    }

    fn initiator_count(&self) -> usize {
        self.initiators.iter().map(BinaryMatrix::count_ones).sum()
    }
}

/// Draws a local move: a uniform off-diagonal graph cell with probability
/// 1/2, otherwise a uniform timestep and then a uniform initiator cell.
pub fn propose_local_move<R: Rng + ?Sized>(state: &SamplerState, rng: &mut R) -> MoveProposal {
    let n = state.graph.node_count();
    let (_, m) = state.initiators[0].shape();
    propose(n, m, state.initiators.len(), rng)
}

fn propose<R: Rng + ?Sized>(n: usize, m: usize, timesteps: usize, rng: &mut R) -> MoveProposal {
    let edge = n >= 2 && rng.random_bool(0.5);
    if edge {
        let from = rng.random_range(0..n);
        let mut to = rng.random_range(0..n - 1);
        if to >= from {
            to += 1;
        }
        MoveProposal::Edge { from, to }
    } else {
        let t = if timesteps > 1 { rng.random_range(0..timesteps) } else { 0 };
        MoveProposal::Initiator {
            t,
            row: rng.random_range(0..n),
            col: rng.random_range(0..m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AcceptRule {
    Metropolis,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub proposal: MoveProposal,
    pub accepted: bool,
    /// Proposed minus current log-posterior (`±inf` across impossible states).
    pub delta: f64,
}

#[derive(Debug, Clone)]
enum Backend {
    Sp {
        table: InfluenceTable,
        caches: Vec<LikelihoodCache>,
        scratch_caches: Vec<LikelihoodCache>,
        scratch_dist: DistanceMatrix,
        queue: VecDeque<u32>,
        total: LogLikelihood,
    },
    Generic {
        model: Arc<dyn PropagationModel>,
        params: GenericLikelihoodParams,
    },
}

/// A running chain. Owns its state, caches and random generator.
#[derive(Debug, Clone)]
pub struct Chain {
    observed: Vec<BinaryMatrix>,
    temporal: bool,
    priors: Priors,
    alpha: SpParams,
    rule: AcceptRule,
    backend: Backend,
    state: SamplerState,
    rng: ChaCha8Rng,
    steps: u64,
    accepted: u64,
}

impl Chain {
    /// Metropolis-Hastings chain from the prescribed start: empty graph,
    /// `N_1 = M_1` and `N_t = M_t \ M_{t-1}`.
    pub fn new(data: &Observations, cfg: &ChainConfig) -> Result<Self> {
        let inits = data.start_initiators();
        let n = data.shape().0;
        Self::build(data, cfg, DirectedGraph::empty(n), inits, AcceptRule::Metropolis)
    }

    /// Chain from a caller-supplied state.
    pub fn with_state(
        data: &Observations,
        cfg: &ChainConfig,
        graph: DirectedGraph,
        initiators: Vec<BinaryMatrix>,
    ) -> Result<Self> {
        Self::build(data, cfg, graph, initiators, AcceptRule::Metropolis)
    }

    /// Chain that accepts every proposal; its stationary law is uniform.
    pub fn naive(data: &Observations, cfg: &ChainConfig) -> Result<Self> {
        let inits = data.start_initiators();
        let n = data.shape().0;
        Self::build(data, cfg, DirectedGraph::empty(n), inits, AcceptRule::Always)
    }

    fn build(
        data: &Observations,
        cfg: &ChainConfig,
        graph: DirectedGraph,
        initiators: Vec<BinaryMatrix>,
        rule: AcceptRule,
    ) -> Result<Self> {
        let (n, m) = data.shape();
        if n == 0 || m == 0 {
            return Err(Error::Dimension("observation matrix must be non-empty".into()));
        }
        if graph.node_count() != n {
            return Err(Error::Dimension(format!(
                "graph has {} nodes, data has {n} rows",
                graph.node_count()
            )));
        }
        if initiators.len() != data.timesteps() || initiators.iter().any(|x| x.shape() != (n, m)) {
            return Err(Error::Dimension("initiator matrices do not match the data".into()));
        }
        let observed = data.matrices().to_vec();
        let distances = all_pairs_distances(&graph);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let (backend, log_likelihood) = match &cfg.likelihood {
            LikelihoodModel::ShortestPath => {
                let table = InfluenceTable::new(cfg.alpha, n);
                let caches: Vec<_> = (0..observed.len())
                    .map(|t| {
                        let prev = (t > 0).then(|| &observed[t - 1]);
                        let init = &initiators[t];
                        LikelihoodCache::build(
                            &observed[t],
                            |j, u| init.get(j, u) || prev.is_some_and(|p| p.get(j, u)),
                            &distances,
                            &table,
                        )
                    })
                    .collect();
                let total: LogLikelihood = caches.iter().map(LikelihoodCache::log_likelihood).sum();
                let backend = Backend::Sp {
                    table,
                    scratch_caches: caches.clone(),
                    caches,
                    scratch_dist: distances.clone(),
                    queue: VecDeque::with_capacity(n),
                    total,
                };
                (backend, total.value())
            }
            LikelihoodModel::Generic { model, params } => {
                if data.is_temporal() {
                    return Err(Error::Config(
                        "the generic likelihood supports a single observation matrix only".into(),
                    ));
                }
                let ll = generic_log_likelihood(
                    &observed[0],
                    &graph,
                    &initiators[0],
                    model.as_ref(),
                    *params,
                    &mut rng,
                )?;
                let backend = Backend::Generic {
                    model: Arc::clone(model),
                    params: *params,
                };
                (backend, ll)
            }
        };

        let ones: usize = initiators.iter().map(BinaryMatrix::count_ones).sum();
        let log_posterior = log_likelihood + cfg.priors.log_prior_counts(graph.edge_count(), ones);
        if rule == AcceptRule::Metropolis && log_posterior == f64::NEG_INFINITY {
            return Err(Error::StartState);
        }
        Ok(Self {
            observed,
            temporal: data.is_temporal(),
            priors: cfg.priors,
            alpha: cfg.alpha,
            rule,
            backend,
            state: SamplerState {
                graph,
                distances,
                initiators,
                log_likelihood,
                log_posterior,
            },
            rng,
            steps: 0,
            accepted: 0,
        })
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn log_posterior(&self) -> f64 {
        self.state.log_posterior
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    /// One Metropolis-Hastings (or naive) step.
    pub fn step(&mut self) -> StepOutcome {
        let (n, m) = self.observed[0].shape();
        let proposal = propose(n, m, self.observed.len(), &mut self.rng);
        self.evaluate(proposal)
    }

    /// Runs one step with a fixed proposal instead of a random one.
    pub fn step_with(&mut self, proposal: MoveProposal) -> Result<StepOutcome> {
        let (n, m) = self.observed[0].shape();
        match proposal {
            MoveProposal::Edge { from, to } => {
                for v in [from, to] {
                    if v >= n {
                        return Err(Error::Index { index: v, size: n });
                    }
                }
                if from == to {
                    return Err(Error::SelfLoop(from));
                }
            }
            MoveProposal::Initiator { t, row, col } => {
                for (v, size) in [(t, self.observed.len()), (row, n), (col, m)] {
                    if v >= size {
                        return Err(Error::Index { index: v, size });
                    }
                }
            }
        }
        Ok(self.evaluate(proposal))
    }

    fn evaluate(&mut self, proposal: MoveProposal) -> StepOutcome {
        let (accepted, delta) = match &mut self.backend {
            Backend::Sp { .. } => self.evaluate_sp(proposal),
            Backend::Generic { .. } => self.evaluate_generic(proposal),
        };
        self.steps += 1;
        self.accepted += accepted as u64;
        StepOutcome {
            proposal,
            accepted,
            delta,
        }
    }

    fn decide(&mut self, delta: f64) -> bool {
        let u: f64 = self.rng.random();
        match self.rule {
            AcceptRule::Always => true,
            AcceptRule::Metropolis => delta >= 0.0 || u.ln() < delta,
        }
    }

    fn prior_delta(&self, proposal: MoveProposal, now_on: bool) -> f64 {
        let c = match proposal {
            MoveProposal::Edge { .. } => self.priors.c1,
            MoveProposal::Initiator { .. } => self.priors.c2,
        };
        if now_on {
            -c
        } else {
            c
        }
    }

    fn evaluate_sp(&mut self, proposal: MoveProposal) -> (bool, f64) {
        let Backend::Sp {
            table,
            caches,
            scratch_caches,
            scratch_dist,
            queue,
            total,
        } = &mut self.backend
        else {
            unreachable!()
        };
        let state = &mut self.state;
        match proposal {
            MoveProposal::Edge { from, to } => {
                let now_on = state.graph.toggle(from, to).expect("proposal is off-diagonal");
                all_pairs_distances_into(&state.graph, scratch_dist, queue);
                for (t, cache) in scratch_caches.iter_mut().enumerate() {
                    let prev = (t > 0).then(|| &self.observed[t - 1]);
                    let init = &state.initiators[t];
                    cache.rebuild(
                        |j, u| init.get(j, u) || prev.is_some_and(|p| p.get(j, u)),
                        scratch_dist,
                        table,
                    );
                }
                let proposed: LogLikelihood =
                    scratch_caches.iter().map(LikelihoodCache::log_likelihood).sum();
                let c = if now_on { -self.priors.c1 } else { self.priors.c1 };
                let delta = proposed.delta_from(total) + c;
                let u: f64 = self.rng.random();
                let accept = match self.rule {
                    AcceptRule::Always => true,
                    AcceptRule::Metropolis => delta >= 0.0 || u.ln() < delta,
                };
                if accept {
                    std::mem::swap(&mut state.distances, scratch_dist);
                    std::mem::swap(caches, scratch_caches);
                    *total = proposed;
                    state.log_likelihood = proposed.value();
                    state.log_posterior = state.log_likelihood
                        + self
                            .priors
                            .log_prior_counts(state.graph.edge_count(), state.initiator_count());
                } else {
                    state.graph.toggle(from, to).expect("proposal is off-diagonal");
                }
                (accept, delta)
            }
            MoveProposal::Initiator { t, row, col } => {
                let now_on = state.initiators[t].toggle(row, col);
                let carried = t > 0 && self.observed[t - 1].get(row, col);
                let proposed = if carried {
                    *total
                } else {
                    let out = caches[t].apply_initiator_flip(row, col, now_on, &state.distances, table);
                    *total + out.after - out.before
                };
                let c = if now_on { -self.priors.c2 } else { self.priors.c2 };
                let delta = proposed.delta_from(total) + c;
                let u: f64 = self.rng.random();
                let accept = match self.rule {
                    AcceptRule::Always => true,
                    AcceptRule::Metropolis => delta >= 0.0 || u.ln() < delta,
                };
                if accept {
                    *total = proposed;
                    state.log_likelihood = proposed.value();
                    state.log_posterior = state.log_likelihood
                        + self
                            .priors
                            .log_prior_counts(state.graph.edge_count(), state.initiator_count());
                } else {
                    state.initiators[t].toggle(row, col);
                    if !carried {
                        caches[t].apply_initiator_flip(row, col, !now_on, &state.distances, table);
                    }
                }
                (accept, delta)
            }
        }
    }

    fn evaluate_generic(&mut self, proposal: MoveProposal) -> (bool, f64) {
        let Backend::Generic { model, params } = &self.backend else {
            unreachable!()
        };
        let (model, params) = (Arc::clone(model), *params);
        let now_on = self.toggle_state(proposal);
        let proposed = generic_log_likelihood(
            &self.observed[0],
            &self.state.graph,
            &self.state.initiators[0],
            model.as_ref(),
            params,
            &mut self.rng,
        )
        .expect("shapes were validated at construction");
        let delta = proposed - self.state.log_likelihood + self.prior_delta(proposal, now_on);
        let accept = self.decide(delta);
        if accept {
            if matches!(proposal, MoveProposal::Edge { .. }) {
                self.state.distances = all_pairs_distances(&self.state.graph);
            }
            self.state.log_likelihood = proposed;
            self.state.log_posterior = proposed
                + self.priors.log_prior_counts(
                    self.state.graph.edge_count(),
                    self.state.initiator_count(),
                );
        } else {
            self.toggle_state(proposal);
        }
        (accept, delta)
    }

    fn toggle_state(&mut self, proposal: MoveProposal) -> bool {
        match proposal {
            MoveProposal::Edge { from, to } => {
                self.state.graph.toggle(from, to).expect("proposal is off-diagonal")
            }
            MoveProposal::Initiator { t, row, col } => self.state.initiators[t].toggle(row, col),
        }
    }

    /// Log-posterior of the current state recomputed from scratch, without
    /// the cache or stored distances.
    pub fn recompute_log_posterior(&self) -> f64 {
        let s = &self.state;
        let prior = log_prior(&s.graph, &s.initiators, &self.priors);
        match &self.backend {
            Backend::Sp { .. } => {
                let d = all_pairs_distances(&s.graph);
                let ll: f64 = (0..self.observed.len())
                    .map(|t| {
                        let prev = (t > 0).then(|| &self.observed[t - 1]);
                        step_log_likelihood(&self.observed[t], prev, &s.initiators[t], &d, self.alpha)
                    })
                    .sum();
                ll + prior
            }
            // Re-estimating would consume randomness; the stored estimate is the state.
            Backend::Generic { .. } => s.log_likelihood + prior,
        }
    }

    /// Checks distances and caches against full recomputation.
    pub fn audit(&self) -> Result<()> {
        let s = &self.state;
        if s.distances != all_pairs_distances(&s.graph) {
            return Err(Error::Config("stored distances are stale".into()));
        }
        if let Backend::Sp { table, caches, total, .. } = &self.backend {
            for (t, cache) in caches.iter().enumerate() {
                let prev = (t > 0).then(|| &self.observed[t - 1]);
                let init = &s.initiators[t];
                cache.audit(
                    |j, u| init.get(j, u) || prev.is_some_and(|p| p.get(j, u)),
                    &s.distances,
                    table,
                )?;
            }
            let sum: LogLikelihood = caches.iter().map(LikelihoodCache::log_likelihood).sum();
            if sum != *total {
                return Err(Error::CacheCorruption { row: 0, col: 0 });
            }
        }
        let fresh = self.recompute_log_posterior();
        let cached = s.log_posterior;
        let agree = if fresh.is_finite() || cached.is_finite() {
            (fresh - cached).abs() <= 1e-9
        } else {
            fresh == cached
        };
        if !agree {
            return Err(Error::CacheCorruption { row: 0, col: 0 });
        }
        Ok(())
    }

    fn is_temporal(&self) -> bool {
        self.temporal
    }
}

/// Posterior means over one block (or, in cumulative mode, since burn-in).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    /// Ĝ per snapshot, diagonal reported as 1.
    pub graph_snapshots: Vec<RealMatrix>,
    /// N̂_t per snapshot: `initiator_snapshots[b][t]`.
    pub initiator_snapshots: Vec<Vec<RealMatrix>>,
    /// Mean log-posterior over the samples of each block.
    pub block_mean_log_posterior: Vec<f64>,
    pub acceptance_rate: f64,
    /// `(step, log-posterior)` at step 0 and every `snapshot_every` steps.
    pub trace: Vec<(u64, f64)>,
    pub final_log_posterior: f64,
    pub temporal: bool,
}

impl ChainResult {
    /// Ĝ: the last snapshot.
    pub fn average_graph(&self) -> &RealMatrix {
        self.graph_snapshots.last().expect("at least one block")
    }

    /// N̂ (or N̂_1..N̂_T): the last snapshot.
    pub fn average_initiators(&self) -> &[RealMatrix] {
        self.initiator_snapshots.last().expect("at least one block")
    }

    /// Snapshots of N̂_t across blocks.
    pub fn initiator_series(&self, t: usize) -> Vec<RealMatrix> {
        self.initiator_snapshots.iter().map(|b| b[t].clone()).collect()
    }

    /// `(1/T) Σ_t N̂_t` for every block; equal to the N̂ series when `T = 1`.
    pub fn overall_initiator_snapshots(&self) -> Vec<RealMatrix> {
        self.initiator_snapshots.iter().map(|b| mean_of(b)).collect()
    }

    pub fn mean_final_block_log_posterior(&self) -> f64 {
        *self.block_mean_log_posterior.last().expect("at least one block")
    }
}

/// `N̂_all = (1/T) Σ_t N̂_t` over the last block of a temporal run.
pub fn overall_initiator_average(result: &ChainResult) -> Result<RealMatrix> {
    if !result.temporal {
        return Err(Error::Mode);
    }
    Ok(mean_of(result.average_initiators()))
}

fn mean_of(mats: &[RealMatrix]) -> RealMatrix {
    let first = &mats[0];
    let k = mats.len() as f64;
    RealMatrix::from_fn(first.rows(), first.cols(), |i, u| {
        mats.iter().map(|x| x.get(i, u)).sum::<f64>() / k
    })
    .with_labels(
        first.row_labels().map(<[String]>::to_vec),
        first.col_labels().map(<[String]>::to_vec),
    )
}

/// Lazily accumulated count of samples in which each cell was 1.
struct Occupancy {
    ones: Vec<u64>,
    since: Vec<u64>,
}

impl Occupancy {
    fn new(len: usize) -> Self {
        Self {
            ones: vec![0; len],
            since: vec![0; len],
        }
    }

    /// Cell `k` changes value from sample `s` on.
    fn change(&mut self, k: usize, now_one: bool, s: u64, window_start: u64) {
        if now_one {
            self.since[k] = s;
        } else {
            self.ones[k] += s.saturating_sub(self.since[k].max(window_start));
        }
    }

    /// Closes the window at sample `end` (inclusive).
    fn flush(&mut self, is_one: impl Fn(usize) -> bool, end: u64, window_start: u64) {
        for k in 0..self.ones.len() {
            if is_one(k) {
                self.ones[k] += (end + 1).saturating_sub(self.since[k].max(window_start));
                self.since[k] = end + 1;
            }
        }
    }

    fn means(&self, samples: u64) -> impl Iterator<Item = f64> + '_ {
        self.ones.iter().map(move |&c| c as f64 / samples as f64)
    }

    fn reset(&mut self) {
        self.ones.fill(0);
    }
}

/// Runs `cfg.total_steps` steps and averages every post-burn-in sample.
pub fn run_chain(data: &Observations, cfg: &ChainConfig) -> Result<ChainResult> {
    cfg.validate()?;
    drive(Chain::new(data, cfg)?, data, cfg)
}

/// As [`run_chain`] with every proposal accepted.
pub fn run_naive(data: &Observations, cfg: &ChainConfig) -> Result<ChainResult> {
    cfg.validate()?;
    drive(Chain::naive(data, cfg)?, data, cfg)
}

/// As [`run_chain`] from a caller-supplied start.
pub fn run_chain_from(
    data: &Observations,
    cfg: &ChainConfig,
    graph: DirectedGraph,
    initiators: Vec<BinaryMatrix>,
) -> Result<ChainResult> {
    cfg.validate()?;
    drive(Chain::with_state(data, cfg, graph, initiators)?, data, cfg)
}

fn drive(mut chain: Chain, data: &Observations, cfg: &ChainConfig) -> Result<ChainResult> {
    let (n, m) = data.shape();
    let tsteps = data.timesteps();
    let labels = data.matrices()[0].clone();
    let nodes = labels.row_labels().map(<[String]>::to_vec);
    let signals = labels.col_labels().map(<[String]>::to_vec);

    let mut g_occ = Occupancy::new(n * n);
    let mut n_occ = Occupancy::new(tsteps * n * m);
    let burnin = cfg.burnin_steps;
    let mut window_start = burnin + 1;
    let mut lp_sum = 0.0;

    let mut result = ChainResult {
        graph_snapshots: Vec::new(),
        initiator_snapshots: Vec::new(),
        block_mean_log_posterior: Vec::new(),
        acceptance_rate: 0.0,
        trace: vec![(0, chain.log_posterior())],
        final_log_posterior: 0.0,
        temporal: chain.is_temporal(),
    };

    for s in 1..=cfg.total_steps {
        let out = chain.step();
        if out.accepted {
            match out.proposal {
                MoveProposal::Edge { from, to } => {
                    let on = chain.state.graph.has_edge(from, to);
                    g_occ.change(from * n + to, on, s, window_start);
                }
                MoveProposal::Initiator { t, row, col } => {
                    let on = chain.state.initiators[t].get(row, col);
                    n_occ.change(t * n * m + row * m + col, on, s, window_start);
                }
            }
        }
        if s > burnin {
            lp_sum += chain.log_posterior();
        }
        if s % cfg.snapshot_every == 0 {
            result.trace.push((s, chain.log_posterior()));
        }
        if s > burnin && (s - burnin).is_multiple_of(cfg.snapshot_every) {
            let state = &chain.state;
            g_occ.flush(|k| state.graph.has_edge(k / n, k % n), s, window_start);
            n_occ.flush(
                |k| state.initiators[k / (n * m)].get((k % (n * m)) / m, k % m),
                s,
                window_start,
            );
            let samples = s + 1 - window_start;
            let mut g_avg = RealMatrix::from_vec(n, n, g_occ.means(samples).collect());
            for i in 0..n {
                g_avg.set(i, i, 1.0);
            }
            result
                .graph_snapshots
                .push(g_avg.with_labels(nodes.clone(), nodes.clone()));
            let means: Vec<f64> = n_occ.means(samples).collect();
            result.initiator_snapshots.push(
                means
                    .chunks(n * m)
                    .map(|c| {
                        RealMatrix::from_vec(n, m, c.to_vec()).with_labels(nodes.clone(), signals.clone())
                    })
                    .collect(),
            );
            result
                .block_mean_log_posterior
                .push(lp_sum / cfg.snapshot_every as f64);
            lp_sum = 0.0;
            if cfg.averaging == Averaging::Blockwise {
                g_occ.reset();
                n_occ.reset();
                window_start = s + 1;
            }
        }
    }
    result.acceptance_rate = chain.acceptance_rate();
    result.final_log_posterior = chain.log_posterior();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(a: f64) -> SpParams {
        SpParams::new(a).unwrap()
    }

    fn intro_m() -> BinaryMatrix {
        BinaryMatrix::parse("1,1,1,0,0,0\n1,1,1,1,1,1\n0,0,0,1,1,1\n").unwrap()
    }

    #[test]
    fn log_prior_examples() {
        let p = Priors::default();
        assert_eq!(log_prior(&DirectedGraph::empty(3), &[BinaryMatrix::zeros(3, 2)], &p), 0.0);
        let g = DirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(log_prior(&g, &[BinaryMatrix::zeros(3, 2)], &p), -4.0);
        let mut n1 = BinaryMatrix::zeros(2, 2);
        n1.set(0, 0, true);
        let n2 = BinaryMatrix::parse("1,0\n0,1\n").unwrap();
        assert_eq!(log_prior(&DirectedGraph::empty(2), &[n1, n2], &p), -27.0);
    }

    #[test]
    fn config_validation() {
        let base = ChainConfig::new(sp(0.9));
        assert!(base.validate().is_ok());
        assert_eq!(base.blocks(), 10);
        assert!(base.clone().steps(200_000, 200_000, 10_000).validate().is_err());
        assert!(base.clone().steps(200_000, 100_000, 30_000).validate().is_err());
        assert!(base.clone().steps(10, 0, 0).validate().is_err());
        assert!(Priors::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn start_initiators_use_observation_differences() {
        let m1 = BinaryMatrix::parse("1,0\n0,0\n").unwrap();
        let m2 = BinaryMatrix::parse("1,1\n0,0\n").unwrap();
        let m3 = BinaryMatrix::parse("1,1\n1,1\n").unwrap();
        let seq = ObservationSequence::new(vec![m1.clone(), m2, m3]).unwrap();
        let inits = Observations::from(seq).start_initiators();
        assert_eq!(inits[0], m1);
        assert_eq!(inits[1].to_text(), "0,1\n0,0\n");
        assert_eq!(inits[2].to_text(), "0,0\n1,1\n");
    }

    #[test]
    fn proposals_are_deterministic_and_off_diagonal() {
        let data = Observations::from(intro_m());
        let cfg = ChainConfig::new(sp(0.9)).seed(5);
        let chain = Chain::new(&data, &cfg).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let p = propose_local_move(chain.state(), &mut a);
            assert_eq!(p, propose_local_move(chain.state(), &mut b));
            if let MoveProposal::Edge { from, to } = p {
                assert_ne!(from, to);
            }
        }
    }

    #[test]
    fn impossible_proposal_is_never_accepted() {
        // M(1,0) = 1 with no way to explain it except an initiator.
        let m = BinaryMatrix::parse("0,1\n1,0\n").unwrap();
        let data = Observations::from(m);
        let cfg = ChainConfig::new(sp(0.5));
        for seed in 0..200 {
            let mut chain = Chain::new(&data, &cfg.clone().seed(seed)).unwrap();
            let out = chain
                .step_with(MoveProposal::Initiator { t: 0, row: 0, col: 0 })
                .unwrap();
            assert_eq!(out.delta, f64::NEG_INFINITY);
            assert!(!out.accepted);
        }
    }

    #[test]
    fn non_negative_delta_is_always_accepted() {
        // Removing an edge from a graph that explains nothing raises the posterior by c1.
        let m = BinaryMatrix::parse("1,0\n0,1\n").unwrap();
        let data = Observations::from(m.clone());
        let g = DirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        let cfg = ChainConfig::new(sp(0.0)).priors(Priors::new(2.0, 9.0).unwrap());
        let mut chain = Chain::with_state(&data, &cfg, g, vec![m.clone()]).unwrap();
        let out = chain.step_with(MoveProposal::Edge { from: 0, to: 1 }).unwrap();
        assert_eq!(out.delta, 2.0);
        assert!(out.accepted);

        // With all priors zero and α = 0, edge flips leave π unchanged.
        let cfg = ChainConfig::new(sp(0.0)).priors(Priors::new(0.0, 0.0).unwrap());
        for seed in 0..100 {
            let mut chain = Chain::new(&data, &cfg.clone().seed(seed)).unwrap();
            let out = chain.step_with(MoveProposal::Edge { from: 1, to: 0 }).unwrap();
            assert_eq!(out.delta, 0.0);
            assert!(out.accepted);
        }
    }

    #[test]
    fn rejection_leaves_state_bit_identical() {
        let data = Observations::from(intro_m());
        let cfg = ChainConfig::new(sp(0.9)).seed(1);
        let mut chain = Chain::new(&data, &cfg).unwrap();
        let mut rejected = 0;
        for _ in 0..5_000 {
            let before_state = chain.state.clone();
            let before_backend = match &chain.backend {
                Backend::Sp { caches, total, .. } => (caches.clone(), *total),
                _ => unreachable!(),
            };
            let out = chain.step();
            if !out.accepted {
                rejected += 1;
                assert_eq!(chain.state, before_state);
                match &chain.backend {
                    Backend::Sp { caches, total, .. } => {
                        assert_eq!((caches.clone(), *total), before_backend)
                    }
                    _ => unreachable!(),
                }
            }
        }
        assert!(rejected > 100);
    }

    #[test]
    fn start_state_error_for_impossible_warm_start() {
        let m = BinaryMatrix::parse("1,0\n0,1\n").unwrap();
        let data = Observations::from(m);
        let cfg = ChainConfig::new(sp(0.5));
        let err = Chain::with_state(&data, &cfg, DirectedGraph::empty(2), vec![BinaryMatrix::zeros(2, 2)]);
        assert!(matches!(err, Err(Error::StartState)));
    }

    #[test]
    fn single_cell_chain_concentrates_on_the_initiator() {
        let data = Observations::from(BinaryMatrix::ones(1, 1));
        let cfg = ChainConfig::new(sp(0.5))
            .priors(Priors::new(0.0, 0.0).unwrap())
            .steps(1_000_000, 0, 1_000_000);
        let res = run_chain(&data, &cfg).unwrap();
        assert_eq!(res.average_initiators()[0].get(0, 0), 1.0);
        assert_eq!(res.average_graph().get(0, 0), 1.0);
    }

    #[test]
    fn runs_are_reproducible() {
        let data = Observations::from(intro_m());
        let cfg = ChainConfig::new(sp(0.9)).steps(20_000, 10_000, 1_000).seed(42);
        assert_eq!(run_chain(&data, &cfg).unwrap(), run_chain(&data, &cfg).unwrap());
        assert_eq!(run_naive(&data, &cfg).unwrap(), run_naive(&data, &cfg).unwrap());
    }

    #[test]
    fn lazy_accumulation_matches_per_step_sums() {
        let data = Observations::from(intro_m());
        for averaging in [Averaging::Blockwise, Averaging::Cumulative] {
            let mut cfg = ChainConfig::new(sp(0.7)).steps(3_000, 1_000, 500).seed(3);
            cfg.averaging = averaging;
            let res = run_chain(&data, &cfg).unwrap();

            let mut chain = Chain::new(&data, &cfg).unwrap();
            let (n, m) = (3, 6);
            let mut g_sum = vec![0u64; n * n];
            let mut n_sum = vec![0u64; n * m];
            let mut count = 0u64;
            let mut block = 0;
            for s in 1..=cfg.total_steps {
                chain.step();
                if s <= cfg.burnin_steps {
                    continue;
                }
                count += 1;
                for i in 0..n {
                    for j in 0..n {
                        g_sum[i * n + j] += chain.state().graph().has_edge(i, j) as u64;
                    }
                    for u in 0..m {
                        n_sum[i * m + u] += chain.state().initiators()[0].get(i, u) as u64;
                    }
                }
                if (s - cfg.burnin_steps).is_multiple_of(cfg.snapshot_every) {
                    for i in 0..n {
                        for j in 0..n {
                            let expect = if i == j { 1.0 } else { g_sum[i * n + j] as f64 / count as f64 };
                            assert_eq!(res.graph_snapshots[block].get(i, j), expect);
                        }
                        for u in 0..m {
                            let expect = n_sum[i * m + u] as f64 / count as f64;
                            assert_eq!(res.initiator_snapshots[block][0].get(i, u), expect);
                        }
                    }
                    block += 1;
                    if averaging == Averaging::Blockwise {
                        g_sum.fill(0);
                        n_sum.fill(0);
                        count = 0;
                    }
                }
            }
            assert_eq!(block, 4);
        }
    }

    #[test]
    fn overall_average_examples() {
        let data = Observations::from(intro_m());
        let cfg = ChainConfig::new(sp(0.9)).steps(2_000, 1_000, 500);
        let single = run_chain(&data, &cfg).unwrap();
        assert!(matches!(overall_initiator_average(&single), Err(Error::Mode)));

        let seq = ObservationSequence::new(vec![intro_m()]).unwrap();
        let res = run_chain(&Observations::from(seq), &cfg).unwrap();
        assert_eq!(overall_initiator_average(&res).unwrap(), res.average_initiators()[0]);

        let mut fake = res.clone();
        fake.initiator_snapshots = vec![vec![RealMatrix::zeros(2, 2), RealMatrix::from_vec(2, 2, vec![1.0; 4])]];
        assert_eq!(
            overall_initiator_average(&fake).unwrap(),
            RealMatrix::from_vec(2, 2, vec![0.5; 4])
        );
    }

    #[test]
    fn temporal_single_step_matches_single_matrix_run() {
        let cfg = ChainConfig::new(sp(0.9)).steps(20_000, 10_000, 1_000).seed(8);
        let single = run_chain(&Observations::from(intro_m()), &cfg).unwrap();
        let seq = ObservationSequence::new(vec![intro_m()]).unwrap();
        let temporal = run_chain(&Observations::from(seq), &cfg).unwrap();
        assert_eq!(single.graph_snapshots, temporal.graph_snapshots);
        assert_eq!(single.initiator_snapshots, temporal.initiator_snapshots);
        assert_eq!(single.trace, temporal.trace);
    }

    #[test]
    fn cached_posterior_tracks_full_recompute() {
        let m1 = BinaryMatrix::parse("1,0,0\n0,0,1\n0,0,0\n0,1,0\n").unwrap();
        let m2 = BinaryMatrix::parse("1,1,0\n1,0,1\n0,0,0\n0,1,1\n").unwrap();
        let m3 = BinaryMatrix::parse("1,1,1\n1,0,1\n1,1,0\n0,1,1\n").unwrap();
        let seq = ObservationSequence::new(vec![m1, m2, m3]).unwrap();
        let data = Observations::from(seq);
        let cfg = ChainConfig::new(sp(0.6)).priors(Priors::new(0.5, 1.0).unwrap()).seed(2);
        for mut chain in [Chain::new(&data, &cfg).unwrap(), Chain::naive(&data, &cfg).unwrap()] {
            for _ in 0..3_000 {
                chain.step();
                chain.audit().unwrap();
            }
        }
    }
}
