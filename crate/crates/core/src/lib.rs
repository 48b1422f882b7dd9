//! Bayesian classification of probe/gallery identity pairs.
//!
//! Every pair of one probe identity and one gallery identity forms a complete
//! graph whose vertices are images and whose edges carry matcher scores in
//! `[0, 1]`. Given histogram estimates of the matcher's match and non-match
//! score densities, the crate computes the log-likelihood of each of seven
//! ground-truth hypotheses (no fraud, multi-ID, probe/gallery mismatch,
//! probe/gallery mixed-ID, crossed ID), turns them into a decision with an
//! ML, MAP or MMS rule, and scores the decision for ranking.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, ingestion,
//! parallel batch evaluation and the command line tool live in the `idfraud`
//! crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod decision;
pub mod density;
mod error;
pub mod fixtures;
pub mod graph;
pub mod likelihood;
pub mod oracle;
pub mod simulation;
pub mod subsets;

pub use decision::{
    decide, decide_among, decide_map, decide_ml, decide_mms, fraud_score, rank_pairs, DecisionRule,
    PairDecision, PriorVector,
};
pub use density::{build_histogram, HistogramDensity, ScoreLabel, ScoreSamples};
pub use error::{Error, ErrorKind, Result};
pub use graph::{build_pair_graph, term_match_edges, total_edge_count, EdgeSet, Hypothesis, IdPairGraph};
pub use likelihood::{
    hypothesis_log_likelihoods, log_match_likelihood, DensityPair, HypothesisLogLikelihoods,
    LikelihoodEngine, Normalization,
};
pub use oracle::oracle_hypothesis_likelihoods;
pub use subsets::{build_fraud_set_table, reduced_power_set_size, FraudSetTable, TableSet, VertexSet};
