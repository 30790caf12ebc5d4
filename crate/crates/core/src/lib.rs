//! Online bipartite matching experiments.
//!
//! The crate implements the Ranking and Balance online algorithms, the exact
//! expected size of Ranking on the nested ("monotone") hard instance, the
//! derangement-based counting identities behind it, a price-based
//! revenue/utility view of Ranking, and an adaptive adversary for
//! deterministic algorithms. Every closed form is paired with an independent
//! brute-force oracle.

pub mod adversary;
pub mod balance;
pub mod combinatorics;
pub mod constants;
pub mod graph;
pub mod matching;
pub mod permutation;
pub mod precision;
pub mod pricing;
pub mod ranking;
pub mod rng;
pub mod scalar;
mod serde_big;
pub mod stats;
pub mod verify;

pub use graph::{make_monotone_graph, max_matching_size, sample_dn, BipartiteGraph, GraphError};
pub use matching::{validate_fractional, FractionalMatching, IntegralMatching, Violation};
pub use permutation::Permutation;
pub use ranking::run_ranking;
pub use scalar::{Exact, Scalar};
