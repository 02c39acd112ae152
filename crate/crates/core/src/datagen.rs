//! Planted instances with known ground truth, and temporal thinning.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::matrix::{BinaryMatrix, ObservationSequence};
use crate::propagation::sp_forward;
use crate::sp::SpParams;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub true_graph: DirectedGraph,
    pub true_initiators: BinaryMatrix,
    pub observed: BinaryMatrix,
    pub params: SpParams,
    pub seed: u64,
}

/// Draws `edge_count` distinct off-diagonal edges, `initiators_per_signal`
/// distinct initiator rows per column, and propagates with the SP model.
pub fn synth_planted(
    n: usize,
    m: usize,
    edge_count: usize,
    initiators_per_signal: usize,
    p: SpParams,
    seed: u64,
) -> Result<PlantedInstance> {
    if edge_count > n * n.saturating_sub(1) {
        return Err(Error::Config(format!(
            "{edge_count} edges do not fit in a graph on {n} nodes"
        )));
    }
    if initiators_per_signal == 0 || initiators_per_signal > n {
        return Err(Error::Config(format!(
            "initiators per signal must be in 1..={n}, got {initiators_per_signal}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut g = DirectedGraph::empty(n);
    while g.edge_count() < edge_count {
        let from = rng.random_range(0..n);
        let to = rng.random_range(0..n);
        if from != to && !g.has_edge(from, to) {
            g.toggle(from, to)?;
        }
    }

    let mut inits = BinaryMatrix::zeros(n, m);
    for u in 0..m {
        for i in sample(&mut rng, n, initiators_per_signal) {
            inits.set(i, u, true);
        }
    }

    let observed = sp_forward(&g, &inits, p, &mut rng);
    Ok(PlantedInstance {
        true_graph: g,
        true_initiators: inits,
        observed,
        params: p,
        seed,
    })
}

/// `M_T = m`; each earlier `M_t` drops every 1 of `M_{t+1}` independently
/// with probability `1/T`.
pub fn degrade_temporal(m: &BinaryMatrix, t_steps: usize, seed: u64) -> Result<ObservationSequence> {
    if t_steps == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drop = 1.0 / t_steps as f64;
    let mut seq = vec![m.clone()];
    for _ in 1..t_steps {
        let next = seq.last().unwrap();
        let mut cur = next.clone();
        for i in 0..cur.rows() {
            for u in 0..cur.cols() {
                if next.get(i, u) && rng.random_bool(drop) {
                    cur.set(i, u, false);
                }
            }
        }
        seq.push(cur);
    }
    seq.reverse();
    ObservationSequence::new(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(a: f64) -> SpParams {
        SpParams::new(a).unwrap()
    }

    #[test]
    fn planted_edge_cases() {
        let inst = synth_planted(6, 10, 0, 2, sp(0.9), 1).unwrap();
        assert_eq!(inst.observed, inst.true_initiators);
        assert_eq!(inst.true_initiators.count_ones(), 20);

        let inst = synth_planted(5, 7, 4, 5, sp(0.3), 2).unwrap();
        assert_eq!(inst.observed, BinaryMatrix::ones(5, 7));
        assert_eq!(inst.true_graph.edge_count(), 4);

        assert!(synth_planted(3, 2, 7, 1, sp(0.5), 0).is_err());
        assert!(synth_planted(3, 2, 6, 1, sp(0.5), 0).is_ok());
        assert!(synth_planted(3, 2, 0, 0, sp(0.5), 0).is_err());
        assert!(synth_planted(3, 2, 0, 4, sp(0.5), 0).is_err());
    }

    #[test]
    fn planted_instance_is_reproducible_and_propagates() {
        let a = synth_planted(15, 40, 20, 1, sp(0.9), 7).unwrap();
        assert_eq!(a, synth_planted(15, 40, 20, 1, sp(0.9), 7).unwrap());
        assert!(a.true_initiators.is_subset_of(&a.observed));
        let (dn, dm) = (a.true_initiators.count_ones(), a.observed.count_ones());
        assert!(dn < dm && dm < 15 * 40, "{dn} {dm}");
    }

    #[test]
    fn degrade_examples() {
        let m = BinaryMatrix::parse("1,0,1\n1,1,0\n").unwrap();
        let one = degrade_temporal(&m, 1, 3).unwrap();
        assert_eq!(one.matrices(), std::slice::from_ref(&m));

        let z = BinaryMatrix::zeros(3, 4);
        let seq = degrade_temporal(&z, 5, 3).unwrap();
        assert!(seq.matrices().iter().all(|x| *x == z));

        let seq = degrade_temporal(&m, 4, 11).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq.last(), &m);
        assert!(degrade_temporal(&m, 0, 0).is_err());
    }
}
