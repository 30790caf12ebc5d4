//! The Ranking algorithm: exact enumeration and Monte Carlo estimation.
//!
//! Ranking fixes a permutation of the offline vertices and matches every
//! arriving vertex to its exposed neighbor of lowest rank.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::combinatorics::factorial;
use crate::constants;
use crate::graph::{BipartiteGraph, GraphError};
use crate::matching::IntegralMatching;
use crate::permutation::{for_each_permutation_starting_with, Permutation};
use crate::rng::trial_rng;
use crate::stats::{run_trials, Moments};

/// Largest `n` accepted by the full `n!` enumeration.
pub const ENUMERATION_CAP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankingError {
    #[error("permutation has length {found}, graph has n = {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("exact enumeration is capped at n = {cap} (got n = {n}); use the Monte Carlo estimator instead")]
    EnumerationTooLarge { n: usize, cap: usize },
    #[error("Monte Carlo estimation needs at least 2 trials (got {0})")]
    TooFewTrials(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The outcome of one Ranking execution.
#[derive(Debug, Clone)]
pub struct RankingRun<'g> {
    graph: &'g BipartiteGraph,
    permutation: Permutation,
    matching: IntegralMatching,
    matched_ranks: Vec<bool>,
}

impl<'g> RankingRun<'g> {
    pub fn graph(&self) -> &'g BipartiteGraph {
        self.graph
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn matching(&self) -> &IntegralMatching {
        &self.matching
    }

    pub fn size(&self) -> usize {
        self.matching.size()
    }

    /// `matched_ranks()[r]` is `true` iff the item of rank `r` is matched.
    pub fn matched_ranks(&self) -> &[bool] {
        &self.matched_ranks
    }

    /// Replays the run and confirms each arrival took its lowest-ranked
    /// exposed neighbor, and stayed unmatched only when none was exposed.
    pub fn greedy_certificate_holds(&self) -> bool {
        let g = self.graph;
        let n = g.n();
        if self.matching.validate_against(g).is_err() {
            return false;
        }
        let mut taken = vec![false; n];
        for j in 0..n {
            let best = g
                .neighbors(j)
                .iter()
                .copied()
                .filter(|&v| !taken[v])
                .min_by_key(|&v| self.permutation.rank_of(v));
            if best != self.matching.partner_of_online(j) {
                return false;
            }
            if let Some(v) = best {
                taken[v] = true;
            }
        }
        true
    }

    /// Matched online vertices form a prefix `u_0, …, u_{k-1}`.
    pub fn matched_online_prefix(&self) -> bool {
        let n = self.graph.n();
        (1..n)
            .all(|j| !self.matching.is_online_matched(j) || self.matching.is_online_matched(j - 1))
    }

    /// Matched offline vertices are claimed in increasing rank order.
    pub fn claims_follow_rank_order(&self) -> bool {
        let ranks: Vec<usize> = self
            .matching
            .pairs()
            .map(|(_, v)| self.permutation.rank_of(v))
            .collect();
        ranks.windows(2).all(|w| w[0] < w[1])
    }
}

/// Runs Ranking on `g` with ranking `pi`.
pub fn run_ranking<'g>(
    g: &'g BipartiteGraph,
    pi: &Permutation,
) -> Result<RankingRun<'g>, RankingError> {
    let n = g.n();
    if pi.len() != n {
        return Err(RankingError::LengthMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    let mut matching = IntegralMatching::empty(n);
    let mut taken = vec![false; n];
    greedy(g, pi.ranks(), &mut taken, |online, offline| {
        matching
            .insert(online, offline)
            .expect("greedy only takes exposed vertices");
    });
    let matched_ranks = (0..n)
        .map(|r| matching.is_offline_matched(pi.item_at(r)))
        .collect();
    Ok(RankingRun {
        graph: g,
        permutation: pi.clone(),
        matching,
        matched_ranks,
    })
}

/// Allocation-free greedy kernel: `taken` must be all `false` on entry.
/// Returns the matching size.
pub(crate) fn greedy(
    g: &BipartiteGraph,
    ranks: &[usize],
    taken: &mut [bool],
    mut on_match: impl FnMut(usize, usize),
) -> usize {
    let mut size = 0;
    for j in 0..g.n() {
        let mut best: Option<(usize, usize)> = None;
        for &v in g.neighbors(j) {
            if !taken[v] && best.is_none_or(|(r, _)| ranks[v] < r) {
                best = Some((ranks[v], v));
            }
        }
        if let Some((_, v)) = best {
            taken[v] = true;
            on_match(j, v);
            size += 1;
        }
    }
    size
}

/// Exact expectation of Ranking on MonotoneG.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactEnumeration {
    pub n: usize,
    /// `a(n)`: total matching size over all `n!` rankings.
    #[serde(serialize_with = "crate::serde_big::uint")]
    pub sum_of_sizes: BigUint,
    #[serde(serialize_with = "crate::serde_big::uint")]
    pub permutations: BigUint,
    #[serde(serialize_with = "crate::serde_big::rational")]
    pub expectation: BigRational,
}

struct BlockTally {
    size_sum: u64,
    matched_at_rank: Vec<u64>,
}

/// Enumerates all rankings of MonotoneG(n), one parallel block per first item.
fn tally_monotone(n: usize) -> Result<BlockTally, RankingError> {
    if n > ENUMERATION_CAP {
        return Err(RankingError::EnumerationTooLarge {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let g = BipartiteGraph::monotone(n)?;
    let blocks: Vec<BlockTally> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut tally = BlockTally {
                size_sum: 0,
                matched_at_rank: vec![0; n],
            };
            let mut ranks = vec![0; n];
            let mut taken = vec![false; n];
            for_each_permutation_starting_with(n, first, |items| {
                for (r, &v) in items.iter().enumerate() {
                    ranks[v] = r;
                }
                taken.fill(false);
                tally.size_sum += greedy(&g, &ranks, &mut taken, |_, _| {}) as u64;
                for (r, &v) in items.iter().enumerate() {
                    if taken[v] {
                        tally.matched_at_rank[r] += 1;
                    }
                }
            });
            tally
        })
        .collect();
    let mut total = BlockTally {
        size_sum: 0,
        matched_at_rank: vec![0; n],
    };
    for block in blocks {
        total.size_sum += block.size_sum;
        for (acc, c) in total.matched_at_rank.iter_mut().zip(block.matched_at_rank) {
            *acc += c;
        }
    }
    Ok(total)
}

/// Sums Ranking's matching size over every ranking of MonotoneG(n).
pub fn enumerate_ranking_exact(n: usize) -> Result<ExactEnumeration, RankingError> {
    let tally = tally_monotone(n)?;
    let sum_of_sizes = BigUint::from(tally.size_sum);
    let permutations = factorial(n);
    let expectation = BigRational::new(sum_of_sizes.clone().into(), permutations.clone().into());
    Ok(ExactEnumeration {
        n,
        sum_of_sizes,
        permutations,
        expectation,
    })
}

/// `a(n, i)` for `i = 1..=n` (returned 0-based by rank): the number of
/// rankings of MonotoneG(n) under which the item of rank `i` is matched.
pub fn matched_at_rank_counts(n: usize) -> Result<Vec<BigUint>, RankingError> {
    Ok(tally_monotone(n)?
        .matched_at_rank
        .into_iter()
        .map(BigUint::from)
        .collect())
}

/// Monte Carlo estimate of Ranking's expected matching size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `(1 - 1/e) n`, valid for every graph with a perfect matching.
    pub lower_bound_theory: f64,
    /// `(1 - 1/e) n + 1/e`, reported only for MonotoneG.
    pub upper_bound_theory: Option<f64>,
    pub seed: u64,
}

pub fn ranking_monte_carlo(
    g: &BipartiteGraph,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport, RankingError> {
    if trials < 2 {
        return Err(RankingError::TooFewTrials(trials));
    }
    let n = g.n();
    let moments = run_trials(
        trials,
        || (Moments::default(), vec![0usize; n], vec![false; n]),
        |(m, ranks, taken), t| {
            let pi = Permutation::random(n, &mut trial_rng(seed, t));
            ranks.copy_from_slice(pi.ranks());
            taken.fill(false);
            m.push(greedy(g, ranks, taken, |_, _| {}) as f64);
        },
        |acc, part| acc.0.merge(&part.0),
    )
    .0;
    let summary = moments.summary();
    let lower = constants::ONE_MINUS_INV_E * n as f64;
    Ok(EstimateReport {
        n,
        trials,
        mean: summary.mean,
        stderr: summary.stderr,
        lower_bound_theory: lower,
        upper_bound_theory: g.is_monotone().then_some(lower + constants::INV_E),
        seed,
    })
}

impl ExactEnumeration {
    pub fn expectation_f64(&self) -> f64 {
        self.expectation.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_monotone_graph;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn items(v: &[usize]) -> Permutation {
        Permutation::from_items(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_ranking_matches_diagonal() {
        let g = make_monotone_graph(3).unwrap();
        let run = run_ranking(&g, &Permutation::identity(3)).unwrap();
        assert_eq!(run.size(), 3);
        assert_eq!(
            run.matching().pairs().collect::<Vec<_>>(),
            vec![(0, 0), (1, 1), (2, 2)]
        );
    }

    #[test]
    fn hand_replay_of_rank_order_v3_v1_v2() {
        // Rank order (v3, v1, v2): u1 takes v3, u2 takes v2, u3 finds v3 gone.
        let g = make_monotone_graph(3).unwrap();
        let run = run_ranking(&g, &items(&[2, 0, 1])).unwrap();
        assert_eq!(
            run.matching().pairs().collect::<Vec<_>>(),
            vec![(0, 2), (1, 1)]
        );
        assert_eq!(run.size(), 2);
        assert!(!run.matching().is_online_matched(2));
        assert_eq!(run.matched_ranks(), &[true, false, true]);
    }

    #[test]
    fn both_rankings_of_monotone_two() {
        let g = make_monotone_graph(2).unwrap();
        let a = run_ranking(&g, &items(&[0, 1])).unwrap().size();
        let b = run_ranking(&g, &items(&[1, 0])).unwrap().size();
        let mut sizes = [a, b];
        sizes.sort();
        assert_eq!(sizes, [1, 2]);
        assert_eq!(a + b, 3);
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = make_monotone_graph(3).unwrap();
        assert_eq!(
            run_ranking(&g, &Permutation::identity(2)).unwrap_err(),
            RankingError::LengthMismatch {
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn exact_small_values() {
        let e1 = enumerate_ranking_exact(1).unwrap();
        assert_eq!(e1.sum_of_sizes, BigUint::from(1u32));
        assert_eq!(e1.expectation, BigRational::from_integer(1.into()));
        let e3 = enumerate_ranking_exact(3).unwrap();
        assert_eq!(e3.sum_of_sizes, BigUint::from(13u32));
        assert_eq!(e3.expectation, BigRational::new(13.into(), 6.into()));
        assert_eq!(
            enumerate_ranking_exact(6).unwrap().sum_of_sizes,
            BigUint::from(2921u32)
        );
    }

    #[test]
    fn enumeration_cap_enforced() {
        let err = enumerate_ranking_exact(11).unwrap_err();
        assert!(err.to_string().contains("Monte Carlo"));
        assert!(matched_at_rank_counts(11).is_err());
    }

    #[test]
    fn rank_counts_small_rows() {
        let row3: Vec<u32> = matched_at_rank_counts(3)
            .unwrap()
            .iter()
            .map(|c| c.to_u32().unwrap())
            .collect();
        assert_eq!(row3, vec![6, 4, 3]);
        let row4 = matched_at_rank_counts(4).unwrap();
        assert_eq!(row4.iter().sum::<BigUint>(), BigUint::from(67u32));
        for n in 1..=7 {
            let row = matched_at_rank_counts(n).unwrap();
            assert_eq!(row[0], factorial(n));
            assert!(row.windows(2).all(|w| w[0] >= w[1]), "n={n}");
        }
    }

    /// Straight-line oracle: enumerate with `run_ranking` itself.
    #[test]
    fn kernel_agrees_with_public_run() {
        for n in 1..=6 {
            let g = make_monotone_graph(n).unwrap();
            let mut total = 0;
            crate::permutation::for_each_permutation(n, |p| {
                total += run_ranking(&g, &items(p)).unwrap().size();
            });
            assert_eq!(
                BigUint::from(total),
                enumerate_ranking_exact(n).unwrap().sum_of_sizes
            );
        }
    }

    #[test]
    fn complete_graph_is_always_perfect() {
        let g = BipartiteGraph::complete(5).unwrap();
        let r = ranking_monte_carlo(&g, 1000, 3).unwrap();
        assert_eq!(r.mean, 5.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.upper_bound_theory, None);
    }

    #[test]
    fn monte_carlo_on_monotone_three() {
        let g = make_monotone_graph(3).unwrap();
        let r = ranking_monte_carlo(&g, 100_000, 0).unwrap();
        assert!((r.mean - 13.0 / 6.0).abs() <= 4.0 * r.stderr, "{r:?}");
        assert!(r.upper_bound_theory.is_some());
        assert_eq!(ranking_monte_carlo(&g, 100_000, 0).unwrap(), r);
        assert_eq!(
            ranking_monte_carlo(&g, 1, 0),
            Err(RankingError::TooFewTrials(1))
        );
    }

    fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
        (1usize..9).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(0..n, 0..n + 1), n)
                .prop_map(move |adj| BipartiteGraph::new(n, adj).unwrap())
        })
    }

    proptest! {
        #[test]
        fn greedy_certificate_on_any_graph(g in arb_graph(), seed in any::<u64>()) {
            let pi = Permutation::random(g.n(), &mut rng_from_seed(seed));
            let run = run_ranking(&g, &pi).unwrap();
            prop_assert!(run.greedy_certificate_holds());
            prop_assert!(2 * run.size() >= g.max_matching_size());
        }

        #[test]
        fn monotone_structure(n in 1usize..30, seed in any::<u64>()) {
            let g = make_monotone_graph(n).unwrap();
            let pi = Permutation::random(n, &mut rng_from_seed(seed));
            let run = run_ranking(&g, &pi).unwrap();
            prop_assert!(run.matched_online_prefix());
            prop_assert!(run.claims_follow_rank_order());
            prop_assert!(run.greedy_certificate_holds());
        }
    }
}
