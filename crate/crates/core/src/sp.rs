//! Shortest-path (SP) propagation likelihood.
//!
//! An initiator `j` of signal `u` reaches entity `i` with probability
//! `α^d(j,i)`, where `d` is the directed hop distance in the influence graph
//! (unreachable means probability 0, and `d(i,i) = 0` means an initiator
//! always keeps its own signal). Sources fail independently, so
//!
//! ```text
//! Pr(M(i,u) = 0 | G, N) = ∏_j (1 − N(j,u) · α^d(j,i))
//! ```
//!
//! and `Pr(M(i,u) = 1) = 1 − Pr(M(i,u) = 0)`. The temporal variant replaces
//! `N(j,u)` with `M_{t-1}(j,u) OR N_t(j,u)`: anything already observed keeps
//! spreading.
//!
//! [`LikelihoodCache`] keeps, for every cell, the count of factors that are
//! exactly zero and the sum of the remaining `ln(1 − α^d)` terms. Both are
//! integers (the log-sum is fixed point with 64 fractional bits), so adding
//! and removing a source is exact and an initiator flip costs O(n).

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, DirectedGraph, DistanceMatrix};
use crate::matrix::{check_same_shape, validate_sequence, BinaryMatrix, ObservationSequence};

/// Decay parameter `α ∈ [0, 1]` of the SP model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpParams {
    alpha: f64,
}

impl SpParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α^d` with `0^0 = 1` and unreachable mapped to 0.
    #[inline]
    pub fn decay(&self, hops: Option<u32>) -> f64 {
        match hops {
            None => 0.0,
            Some(0) => 1.0,
            Some(d) => self.alpha.powi(d.min(i32::MAX as u32) as i32),
        }
    }
}

/// The α grid used for parameter selection: 0.1, 0.2, …, 0.9.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// Influence of `from` on `to`: `α^d(from, to)`.
pub fn influence(from: usize, to: usize, d: &DistanceMatrix, p: SpParams) -> f64 {
    p.decay(d.get(from, to))
}

/// `Pr(M(i,u) = 0 | G, N)` as the plain product over all rows of `N`.
pub fn prob_entry_zero(
    row: usize,
    col: usize,
    initiators: &BinaryMatrix,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    (0..initiators.rows())
        .filter(|&j| initiators.get(j, col))
        .map(|j| 1.0 - influence(j, row, d, p))
        .product()
}

/// Temporal step: `Pr(M_t(i,u) = 0 | G, M_{t-1}, N_t)`, where every row
/// holding the signal at `t-1` or initiating it at `t` is a source.
pub fn step_prob_zero(
    row: usize,
    col: usize,
    previous: &BinaryMatrix,
    initiators: &BinaryMatrix,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    (0..initiators.rows())
        .filter(|&j| previous.get(j, col) || initiators.get(j, col))
        .map(|j| 1.0 - influence(j, row, d, p))
        .product()
}

/// Contribution of one active source to `ln Pr(cell = 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    /// `α^d` is 0 or too small to move `1 − α^d` off 1.0.
    Neutral,
    /// `α^d = 1`: the cell is certainly 1.
    Zero,
    /// `ln(1 − α^d)` in fixed point.
    Finite(i128),
}

const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[inline]
fn to_fixed(x: f64) -> i128 {
    (x * FIXED_SCALE).round() as i128
}

#[inline]
fn from_fixed(x: i128) -> f64 {
    x as f64 / FIXED_SCALE
}

/// `ln(1 − b)` when the factor is strictly between 0 and 1, classified the
/// same way by the cached and the direct evaluators.
#[inline]
fn log_factor(b: f64) -> Option<f64> {
    if b >= 1.0 || 1.0 - b == 1.0 {
        None
    } else {
        Some((-b).ln_1p())
    }
}

/// Per-distance factor classification for one α, indexed by hop count.
#[derive(Debug, Clone)]
pub struct InfluenceTable {
    params: SpParams,
    by_hops: Vec<Factor>,
}

impl InfluenceTable {
    /// Covers hop counts `0..n`, which bounds every finite distance in an
    /// `n`-node graph.
    pub fn new(params: SpParams, n: usize) -> Self {
        let by_hops = (0..n.max(1))
            .map(|d| {
                let b = params.decay(Some(d as u32));
                if b >= 1.0 {
                    Factor::Zero
                } else {
                    log_factor(b).map_or(Factor::Neutral, |l| Factor::Finite(to_fixed(l)))
                }
            })
            .collect();
        Self { params, by_hops }
    }

    pub fn params(&self) -> SpParams {
        self.params
    }

    #[inline]
    fn factor(&self, raw_hops: u32) -> Factor {
        match self.by_hops.get(raw_hops as usize) {
            Some(&f) => f,
            None if raw_hops == DistanceMatrix::UNREACHABLE => Factor::Neutral,
            None => {
                let b = self.params.decay(Some(raw_hops));
                log_factor(b).map_or(Factor::Neutral, |l| Factor::Finite(to_fixed(l)))
            }
        }
    }
}

/// Log-likelihood as an extended real: a count of impossible cells plus the
/// fixed-point sum over all possible cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LogLikelihood {
    impossible: usize,
    fixed: i128,
}

impl LogLikelihood {
    pub fn is_impossible(&self) -> bool {
        self.impossible > 0
    }

    /// Cells with probability zero under the model.
    pub fn impossible_cells(&self) -> usize {
        self.impossible
    }

    /// The log-likelihood, `-inf` when any cell is impossible.
    pub fn value(&self) -> f64 {
        if self.impossible > 0 {
            f64::NEG_INFINITY
        } else {
            from_fixed(self.fixed)
        }
    }

    /// `self − before`. Entering an impossible state gives `-inf`, leaving one
    /// `+inf`; between two impossible states the difference is undefined (NaN).
    pub fn delta_from(&self, before: &LogLikelihood) -> f64 {
        match (before.is_impossible(), self.is_impossible()) {
            (false, false) => from_fixed(self.fixed - before.fixed),
            (false, true) => f64::NEG_INFINITY,
            (true, false) => f64::INFINITY,
            (true, true) => f64::NAN,
        }
    }
}

impl std::ops::Add for LogLikelihood {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            impossible: self.impossible + rhs.impossible,
            fixed: self.fixed + rhs.fixed,
        }
    }
}

impl std::ops::Sub for LogLikelihood {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            impossible: self.impossible - rhs.impossible,
            fixed: self.fixed - rhs.fixed,
        }
    }
}

impl std::iter::Sum for LogLikelihood {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Result of [`LikelihoodCache::apply_initiator_flip`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipOutcome {
    pub before: LogLikelihood,
    pub after: LogLikelihood,
}

impl FlipOutcome {
    pub fn delta(&self) -> f64 {
        self.after.delta_from(&self.before)
    }
}

const IMPOSSIBLE: i128 = i128::MIN;

/// Per-cell decomposition of `ln Pr(M(i,u) = 0)` for one observation matrix.
///
/// Storage is column-major so that an initiator flip touches one contiguous
/// column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LikelihoodCache {
    n: usize,
    m: usize,
    observed: Vec<u8>,
    zero_count: Vec<u32>,
    log_sum: Vec<i128>,
    cell: Vec<i128>,
    total: LogLikelihood,
}

impl LikelihoodCache {
    /// Builds the cache from scratch. `is_source(j, u)` tells whether row `j`
    /// spreads signal `u` (the initiators, or `M_{t-1} OR N_t` in a temporal step).
    pub fn build(
        observed: &BinaryMatrix,
        is_source: impl Fn(usize, usize) -> bool,
        d: &DistanceMatrix,
        table: &InfluenceTable,
    ) -> Self {
        let (n, m) = observed.shape();
        let mut cache = Self {
            n,
            m,
            observed: vec![0; n * m],
            zero_count: vec![0; n * m],
            log_sum: vec![0; n * m],
            cell: vec![0; n * m],
            total: LogLikelihood::default(),
        };
        for i in 0..n {
            for u in 0..m {
                cache.observed[u * n + i] = observed.get(i, u) as u8;
            }
        }
        cache.rebuild(is_source, d, table);
        cache
    }

    /// Recomputes every cell for new sources or distances, reusing buffers.
    pub fn rebuild(
        &mut self,
        is_source: impl Fn(usize, usize) -> bool,
        d: &DistanceMatrix,
        table: &InfluenceTable,
    ) {
        let n = self.n;
        self.zero_count.fill(0);
        self.log_sum.fill(0);
        for u in 0..self.m {
            let zc = &mut self.zero_count[u * n..(u + 1) * n];
            let ls = &mut self.log_sum[u * n..(u + 1) * n];
            for j in (0..n).filter(|&j| is_source(j, u)) {
                for (i, &hops) in d.row(j).iter().enumerate() {
                    match table.factor(hops) {
                        Factor::Neutral => {}
                        Factor::Zero => zc[i] += 1,
                        Factor::Finite(l) => ls[i] += l,
                    }
                }
            }
        }
        let mut total = LogLikelihood::default();
        for k in 0..n * self.m {
            let v = self.cell_value(k);
            self.cell[k] = v;
            accumulate(&mut total, v, 1);
        }
        self.total = total;
    }

    /// Adds (`on = true`) or removes source `row` for signal `col` and
    /// updates the affected column in O(n).
    ///
    /// The caller must pass the bit the source is changing to; flipping a
    /// source to the value it already has corrupts the cache.
    pub fn apply_initiator_flip(
        &mut self,
        row: usize,
        col: usize,
        on: bool,
        d: &DistanceMatrix,
        table: &InfluenceTable,
    ) -> FlipOutcome {
        let before = self.total;
        let n = self.n;
        let base = col * n;
        for (i, &hops) in d.row(row).iter().enumerate() {
            let k = base + i;
            match table.factor(hops) {
                Factor::Neutral => continue,
                Factor::Zero => {
                    if on {
                        self.zero_count[k] += 1;
                    } else {
                        self.zero_count[k] -= 1;
                    }
                }
                Factor::Finite(l) => {
                    if on {
                        self.log_sum[k] += l;
                    } else {
                        self.log_sum[k] -= l;
                    }
                }
            }
            let new = self.cell_value(k);
            let old = std::mem::replace(&mut self.cell[k], new);
            if old != new {
                accumulate(&mut self.total, old, -1);
                accumulate(&mut self.total, new, 1);
            }
        }
        FlipOutcome {
            before,
            after: self.total,
        }
    }

    pub fn log_likelihood(&self) -> LogLikelihood {
        self.total
    }

    /// `ln Pr(M(i,u) | G, N)` for one cell.
    pub fn cell_log_prob(&self, row: usize, col: usize) -> f64 {
        match self.cell[col * self.n + row] {
            IMPOSSIBLE => f64::NEG_INFINITY,
            v => from_fixed(v),
        }
    }

    /// Number of exactly-zero factors in `Pr(M(i,u) = 0)`.
    pub fn zero_factor_count(&self, row: usize, col: usize) -> u32 {
        self.zero_count[col * self.n + row]
    }

    /// `Σ ln(1 − α^d)` over the non-degenerate factors of one cell.
    pub fn finite_log_sum(&self, row: usize, col: usize) -> f64 {
        from_fixed(self.log_sum[col * self.n + row])
    }

    /// Compares against a rebuild from scratch.
    pub fn audit(
        &self,
        is_source: impl Fn(usize, usize) -> bool,
        d: &DistanceMatrix,
        table: &InfluenceTable,
    ) -> Result<()> {
        let mut fresh = self.clone();
        fresh.rebuild(is_source, d, table);
        for k in 0..self.n * self.m {
            if fresh.zero_count[k] != self.zero_count[k]
                || fresh.log_sum[k] != self.log_sum[k]
                || fresh.cell[k] != self.cell[k]
            {
                return Err(Error::CacheCorruption {
                    row: k % self.n,
                    col: k / self.n,
                });
            }
        }
        if fresh.total != self.total {
            return Err(Error::CacheCorruption { row: 0, col: 0 });
        }
        Ok(())
    }

    #[inline]
    fn cell_value(&self, k: usize) -> i128 {
        let certain_one = self.zero_count[k] > 0;
        match (self.observed[k] != 0, certain_one) {
            (false, true) => IMPOSSIBLE,
            (true, true) => 0,
            (false, false) => self.log_sum[k],
            (true, false) => {
                if self.log_sum[k] == 0 {
                    IMPOSSIBLE
                } else {
                    to_fixed((-(from_fixed(self.log_sum[k]).exp_m1())).ln())
                }
            }
        }
    }
}

#[inline]
fn accumulate(total: &mut LogLikelihood, cell: i128, sign: i32) {
    if cell == IMPOSSIBLE {
        if sign > 0 {
            total.impossible += 1;
        } else {
            total.impossible -= 1;
        }
    } else if sign > 0 {
        total.fixed += cell;
    } else {
        total.fixed -= cell;
    }
}

/// Direct floating-point evaluation of one cell, independent of the cache.
fn cell_log_prob_direct(
    observed: bool,
    row: usize,
    col: usize,
    is_source: &impl Fn(usize, usize) -> bool,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    let mut log_zero = 0.0;
    let mut any_term = false;
    for j in (0..d.node_count()).filter(|&j| is_source(j, col)) {
        let b = influence(j, row, d, p);
        if b >= 1.0 {
            return if observed { 0.0 } else { f64::NEG_INFINITY };
        }
        if let Some(l) = log_factor(b) {
            log_zero += l;
            any_term = true;
        }
    }
    match (observed, any_term) {
        (false, _) => log_zero,
        (true, false) => f64::NEG_INFINITY,
        (true, true) => (-log_zero.exp_m1()).ln(),
    }
}

fn log_likelihood_direct(
    observed: &BinaryMatrix,
    is_source: impl Fn(usize, usize) -> bool,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    let mut total = 0.0;
    for i in 0..observed.rows() {
        for u in 0..observed.cols() {
            total += cell_log_prob_direct(observed.get(i, u), i, u, &is_source, d, p);
            if total == f64::NEG_INFINITY {
                return total;
            }
        }
    }
    total
}

fn check_graph(g: &DirectedGraph, rows: usize) -> Result<()> {
    if g.node_count() != rows {
        return Err(Error::Dimension(format!(
            "graph has {} nodes, matrix has {rows} rows",
            g.node_count()
        )));
    }
    Ok(())
}

/// `ln Pr(M | G, N)`; `-inf` when some cell has probability zero.
pub fn log_likelihood(
    observed: &BinaryMatrix,
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    p: SpParams,
) -> Result<f64> {
    check_same_shape(observed, initiators)?;
    check_graph(g, observed.rows())?;
    let d = all_pairs_distances(g);
    Ok(log_likelihood_with_distances(observed, initiators, &d, p))
}

/// As [`log_likelihood`] with precomputed distances.
pub fn log_likelihood_with_distances(
    observed: &BinaryMatrix,
    initiators: &BinaryMatrix,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    log_likelihood_direct(observed, |j, u| initiators.get(j, u), d, p)
}

/// `ln Pr(M_t | G, M_{t-1}, N_t)`, one factor of the temporal likelihood.
/// With `previous = None` this is the first-step term `ln Pr(M_1 | G, N_1)`.
pub fn step_log_likelihood(
    observed: &BinaryMatrix,
    previous: Option<&BinaryMatrix>,
    initiators: &BinaryMatrix,
    d: &DistanceMatrix,
    p: SpParams,
) -> f64 {
    match previous {
        Some(prev) => log_likelihood_direct(
            observed,
            |j, u| prev.get(j, u) || initiators.get(j, u),
            d,
            p,
        ),
        None => log_likelihood_with_distances(observed, initiators, d, p),
    }
}

/// `ln Pr(M_1..M_T | G, N_1..N_T)` as the sum of per-step terms.
pub fn log_likelihood_temporal(
    seq: &ObservationSequence,
    g: &DirectedGraph,
    initiators: &[BinaryMatrix],
    p: SpParams,
) -> Result<f64> {
    validate_sequence(seq.matrices())?;
    if initiators.len() != seq.len() {
        return Err(Error::Dimension(format!(
            "{} initiator matrices for {} observations",
            initiators.len(),
            seq.len()
        )));
    }
    for n_t in initiators {
        check_same_shape(seq.get(0), n_t)?;
    }
    check_graph(g, seq.shape().0)?;
    let d = all_pairs_distances(g);
    let mut total = 0.0;
    for (t, n_t) in initiators.iter().enumerate() {
        let prev = (t > 0).then(|| seq.get(t - 1));
        total += step_log_likelihood(seq.get(t), prev, n_t, &d, p);
    }
    Ok(total)
}

/// Likelihood of `(G, N)` for each α of a grid and the maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    pub best_alpha: f64,
    pub log_likelihoods: Vec<(f64, f64)>,
}

/// Picks the grid value maximizing `ln Pr(M | G, N)`. Ties go to the smaller α.
pub fn fit_alpha(
    observed: &BinaryMatrix,
    g: &DirectedGraph,
    initiators: &BinaryMatrix,
    grid: &[f64],
) -> Result<AlphaFit> {
    if grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    check_same_shape(observed, initiators)?;
    check_graph(g, observed.rows())?;
    let d = all_pairs_distances(g);
    let log_likelihoods = grid
        .iter()
        .map(|&a| {
            let p = SpParams::new(a)?;
            Ok((a, log_likelihood_with_distances(observed, initiators, &d, p)))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_alpha = argmax_prefer_smaller(&log_likelihoods);
    Ok(AlphaFit {
        best_alpha,
        log_likelihoods,
    })
}

/// Maximizes the second component; ties (and all `-inf`) resolve to the smallest key.
pub(crate) fn argmax_prefer_smaller(pairs: &[(f64, f64)]) -> f64 {
    let mut best = pairs[0];
    for &(a, v) in &pairs[1..] {
        if v > best.1 || (v == best.1 && a < best.0) {
            best = (a, v);
        }
    }
    best.0
}
