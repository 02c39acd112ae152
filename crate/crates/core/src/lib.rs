//! Bayesian inference of influence graphs and signal initiators from binary
//! occurrence data.
//!
//! Given an `n × m` matrix `M` where `M(i,u) = 1` means signal `u` was seen at
//! entity `i`, the crate samples directed graphs `G` and initiator matrices
//! `N` from their posterior under a shortest-path propagation model, and
//! reports posterior edge and initiator probabilities.
//!
//! ```
//! use linkinit::{run_chain, BinaryMatrix, ChainConfig, Observations, SpParams};
//!
//! let m = BinaryMatrix::parse("1,1,1,0,0,0\n1,1,1,1,1,1\n0,0,0,1,1,1\n").unwrap();
//! let cfg = ChainConfig::new(SpParams::new(0.9).unwrap()).steps(20_000, 10_000, 1_000);
//! let result = run_chain(&Observations::from(m), &cfg).unwrap();
//!
//! let g = result.average_graph();
//! assert_eq!(g.shape(), (3, 3));
//! assert!(g.values().iter().all(|p| (0.0..=1.0).contains(p)));
//! ```

pub mod datagen;
pub mod diagnostics;
mod error;
pub mod graph;
pub mod matrix;
pub mod propagation;
pub mod sampler;
pub mod sp;

pub use datagen::{degrade_temporal, synth_planted, PlantedInstance};
pub use diagnostics::{alpha_scan, hamming_similarity, pearson_matrix, roc_auc, AlphaScan, CorrelationReport};
pub use error::{Error, Result};
pub use graph::{all_pairs_distances, bfs_distances_from, DirectedGraph, DistanceMatrix};
pub use matrix::{load_matrix, validate_sequence, BinaryMatrix, ObservationSequence, RealMatrix};
pub use propagation::{
    expected_matrix, generic_log_likelihood, ic_forward, sp_forward, GenericLikelihoodParams,
    IndependentCascade, PropagationModel, ShortestPath,
};
pub use sampler::{
    log_prior, overall_initiator_average, propose_local_move, run_chain, run_chain_from, run_naive,
    Averaging, Chain, ChainConfig, ChainResult, LikelihoodModel, MoveProposal, Observations, Priors,
    SamplerState, StepOutcome,
};
pub use sp::{
    default_alpha_grid, fit_alpha, influence, log_likelihood, log_likelihood_temporal, prob_entry_zero,
    step_prob_zero, LikelihoodCache, LogLikelihood, SpParams,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/matrices.md")]
    mod matrices {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/temporal.md")]
    mod temporal {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/generic.md")]
    mod generic {}
    #[doc = include_str!("../../../book/src/datagen.md")]
    mod datagen {}
}
