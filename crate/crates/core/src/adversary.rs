//! Adaptive adversary for deterministic online matching algorithms.
//!
//! The first `n/2` arrivals see every offline vertex; the remaining `n/2`
//! see only the set `S` the algorithm matched so far. A greedy algorithm
//! therefore ends with exactly `n/2` pairs while the graph has a perfect
//! matching.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{BipartiteGraph, GraphError};
use crate::matching::IntegralMatching;
use crate::permutation::Permutation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("the adversary needs an even positive n (got {0})")]
    OddSize(usize),
    #[error("{algorithm} chose v{offline} for u{online}, which is not an exposed neighbor")]
    InvalidDecision {
        algorithm: String,
        online: usize,
        offline: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// What an online algorithm sees when `u_online` arrives.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalView<'a> {
    pub n: usize,
    pub online: usize,
    /// Neighbor sets of all arrivals so far, the current one last.
    pub revealed: &'a [Vec<usize>],
    /// Earlier decisions.
    pub decisions: &'a [Option<usize>],
    pub taken: &'a [bool],
}

impl<'a> ArrivalView<'a> {
    pub fn neighbors(&self) -> &'a [usize] {
        &self.revealed[self.online]
    }

    pub fn exposed_neighbors(&self) -> impl Iterator<Item = usize> + 'a {
        let taken = self.taken;
        self.neighbors().iter().copied().filter(move |&v| !taken[v])
    }
}

/// A deterministic online matching algorithm.
pub trait OnlineAlgorithm: Sync {
    fn name(&self) -> String;

    /// The exposed neighbor to match, or `None` to leave the arrival exposed.
    fn decide(&self, view: &ArrivalView<'_>) -> Option<usize>;
}

/// Matches the exposed neighbor with the smallest index.
pub struct LowestIndex;

/// Matches the exposed neighbor with the largest index.
pub struct HighestIndex;

/// Matches the exposed neighbor that appeared in the fewest neighbor sets so
/// far (ties to the smallest index).
pub struct LowestDegreeSeen;

/// Ranking with a fixed, publicly known permutation.
pub struct FixedRanking(pub Permutation);

impl OnlineAlgorithm for LowestIndex {
    fn name(&self) -> String {
        "lowest".into()
    }

    fn decide(&self, view: &ArrivalView<'_>) -> Option<usize> {
        view.exposed_neighbors().min()
    }
}

impl OnlineAlgorithm for HighestIndex {
    fn name(&self) -> String {
        "highest".into()
    }

    fn decide(&self, view: &ArrivalView<'_>) -> Option<usize> {
        view.exposed_neighbors().max()
    }
}

impl OnlineAlgorithm for LowestDegreeSeen {
    fn name(&self) -> String {
        "lowest-degree".into()
    }

    fn decide(&self, view: &ArrivalView<'_>) -> Option<usize> {
        let mut seen = vec![0usize; view.n];
        for set in view.revealed {
            for &v in set {
                seen[v] += 1;
            }
        }
        view.exposed_neighbors().min_by_key(|&v| (seen[v], v))
    }
}

impl OnlineAlgorithm for FixedRanking {
    fn name(&self) -> String {
        "ranking-fixed-pi".into()
    }

    fn decide(&self, view: &ArrivalView<'_>) -> Option<usize> {
        view.exposed_neighbors().min_by_key(|&v| self.0.rank_of(v))
    }
}

/// One arrival of the game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryStep {
    #[serde(serialize_with = "crate::serde_big::one_based")]
    pub online: usize,
    /// Revealed neighbor set, 1-based.
    pub revealed: Vec<usize>,
    /// Chosen offline vertex, 1-based.
    pub decision: Option<usize>,
    /// The algorithm left the arrival exposed although a neighbor was free.
    pub skipped_with_exposed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryTranscript {
    pub algorithm: String,
    pub n: usize,
    pub graph: BipartiteGraph,
    pub steps: Vec<AdversaryStep>,
    pub matching: IntegralMatching,
    pub matching_size: usize,
    /// Offline vertices exposed to the second half (1-based).
    pub second_half_set: Vec<usize>,
    /// Perfect matching built from the transcript and checked against the graph.
    pub certificate: IntegralMatching,
    pub max_matching_size: usize,
    pub greedy: bool,
    /// Replaying the revealed sets reproduced every decision.
    pub replay_consistent: bool,
}

/// Plays the adversary against `alg` on `n` online and `n` offline vertices.
pub fn run_adaptive_adversary(
    alg: &dyn OnlineAlgorithm,
    n: usize,
) -> Result<AdversaryTranscript, AdversaryError> {
    if n == 0 || n % 2 == 1 {
        return Err(AdversaryError::OddSize(n));
    }
    let half = n / 2;
    let mut revealed: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut decisions: Vec<Option<usize>> = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    let mut second_half_set = Vec::new();
    let mut steps = Vec::with_capacity(n);
    for j in 0..n {
        if j == half {
            second_half_set = padded_set(&taken, half);
        }
        let neighbors = if j < half {
            (0..n).collect()
        } else {
            second_half_set.clone()
        };
        revealed.push(neighbors);
        let view = ArrivalView {
            n,
            online: j,
            revealed: &revealed,
            decisions: &decisions,
            taken: &taken,
        };
        let decision = alg.decide(&view);
        let any_exposed = view.exposed_neighbors().next().is_some();
        if let Some(v) = decision {
            if v >= n || taken[v] || !revealed[j].contains(&v) {
                return Err(AdversaryError::InvalidDecision {
                    algorithm: alg.name(),
                    online: j,
                    offline: v,
                });
            }
            taken[v] = true;
        }
        steps.push(AdversaryStep {
            online: j,
            revealed: revealed[j].iter().map(|v| v + 1).collect(),
            decision: decision.map(|v| v + 1),
            skipped_with_exposed: decision.is_none() && any_exposed,
        });
        decisions.push(decision);
    }
    let graph = BipartiteGraph::new(n, revealed.clone())?;
    let mut matching = IntegralMatching::empty(n);
    for (j, d) in decisions.iter().enumerate() {
        if let Some(v) = *d {
            matching.insert(j, v)?;
        }
    }
    matching.validate_against(&graph)?;
    let certificate = certificate(&graph, &second_half_set)?;
    Ok(AdversaryTranscript {
        algorithm: alg.name(),
        n,
        matching_size: matching.size(),
        max_matching_size: graph.max_matching_size(),
        greedy: steps.iter().all(|s| !s.skipped_with_exposed),
        replay_consistent: replay(alg, &revealed, &decisions),
        second_half_set: second_half_set.iter().map(|v| v + 1).collect(),
        graph,
        steps,
        matching,
        certificate,
    })
}

/// Offline vertices matched so far, padded with the lowest-index unmatched
/// ones up to `half`.
fn padded_set(taken: &[bool], half: usize) -> Vec<usize> {
    let mut set: Vec<usize> = (0..taken.len()).filter(|&v| taken[v]).collect();
    set.extend(
        (0..taken.len())
            .filter(|&v| !taken[v])
            .take(half.saturating_sub(set.len())),
    );
    set.sort_unstable();
    set
}

/// Second-half arrivals take `S` in order, first-half arrivals take the
/// complement in order.
fn certificate(g: &BipartiteGraph, set: &[usize]) -> Result<IntegralMatching, GraphError> {
    let n = g.n();
    let half = n / 2;
    let mut in_set = vec![false; n];
    for &v in set {
        in_set[v] = true;
    }
    let rest = (0..n).filter(|&v| !in_set[v]);
    let mut m = IntegralMatching::empty(n);
    for (j, v) in (0..half).zip(rest) {
        m.insert(j, v)?;
    }
    for (j, &v) in (half..n).zip(set) {
        m.insert(j, v)?;
    }
    m.validate_against(g)?;
    if !m.is_perfect() {
        return Err(GraphError::NotPerfect {
            max_matching: m.size(),
            n,
        });
    }
    Ok(m)
}

fn replay(alg: &dyn OnlineAlgorithm, revealed: &[Vec<usize>], decisions: &[Option<usize>]) -> bool {
    let n = revealed.len();
    let mut taken = vec![false; n];
    for j in 0..n {
        let view = ArrivalView {
            n,
            online: j,
            revealed: &revealed[..=j],
            decisions: &decisions[..j],
            taken: &taken,
        };
        let again = alg.decide(&view);
        if again != decisions[j] {
            return false;
        }
        if let Some(v) = again {
            taken[v] = true;
        }
    }
    true
}

/// Built-in algorithm by CLI name.
pub fn builtin(name: &str, pi: Option<Permutation>) -> Option<Box<dyn OnlineAlgorithm>> {
    match name {
        "lowest" => Some(Box::new(LowestIndex)),
        "highest" => Some(Box::new(HighestIndex)),
        "lowest-degree" => Some(Box::new(LowestDegreeSeen)),
        "ranking-fixed-pi" => pi.map(|p| Box::new(FixedRanking(p)) as Box<dyn OnlineAlgorithm>),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["lowest", "highest", "lowest-degree", "ranking-fixed-pi"];
