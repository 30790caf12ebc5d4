//! The Balance fractional algorithm (water-filling), its closed form on
//! MonotoneG, backward-edge stripping and the averaging process.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{BipartiteGraph, GraphError};
use crate::matching::FractionalMatching;
use crate::permutation::Permutation;
use crate::scalar::{sum, Scalar};
use crate::serde_big::{display, display_opt, display_seq, one_based, one_based_opt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BalanceError {
    #[error("diagonal edge (u{0}, v{0}) is missing; relabel the graph first")]
    MissingDiagonal(usize),
    #[error("backward edge (u{online}, v{offline}); strip backward edges first")]
    BackwardEdge { online: usize, offline: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Weight added to one offline vertex during a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Raise<S: Scalar> {
    #[serde(serialize_with = "one_based")]
    pub offline: usize,
    #[serde(serialize_with = "display")]
    pub added: S,
}

/// One arrival of Balance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct WaterFillStep<S: Scalar> {
    #[serde(serialize_with = "one_based")]
    pub online: usize,
    /// `max(0, min(1, Σ (1 - load)))` over the neighbors.
    #[serde(serialize_with = "display")]
    pub budget: S,
    /// Common post-step load of the raised neighbors; `None` when nothing
    /// could be added.
    #[serde(serialize_with = "display_opt")]
    pub threshold: Option<S>,
    /// Raised neighbors in ascending offline index.
    pub raised: Vec<Raise<S>>,
}

impl<S: Scalar> WaterFillStep<S> {
    pub fn added_total(&self) -> S {
        self.raised
            .iter()
            .fold(S::zero(), |acc, r| acc + r.added.clone())
    }
}

/// Spends one arrival's budget on the lowest-loaded neighbors so that they
/// all end at a common threshold.
pub fn water_fill<S: Scalar>(online: usize, neighbors: &[usize], loads: &[S]) -> WaterFillStep<S> {
    let one = S::one();
    let room = neighbors
        .iter()
        .fold(S::zero(), |acc, &v| acc + one.clone() - loads[v].clone());
    let budget = S::max_of(S::zero(), S::min_of(one, room));
    if !budget.exceeds(&S::zero()) {
        return WaterFillStep {
            online,
            budget,
            threshold: None,
            raised: Vec::new(),
        };
    }
    let mut order = neighbors.to_vec();
    order.sort_by(|&a, &b| {
        loads[a]
            .partial_cmp(&loads[b])
            .expect("loads are comparable")
            .then(a.cmp(&b))
    });
    let mut prefix = S::zero();
    let mut threshold = S::zero();
    let mut active = 0;
    for c in 1..=order.len() {
        prefix = prefix + loads[order[c - 1]].clone();
        let t = (budget.clone() + prefix.clone()) / S::from_usize(c);
        if c == order.len() || t <= loads[order[c]] {
            threshold = t;
            active = c;
            break;
        }
    }
    let mut raised: Vec<Raise<S>> = order[..active]
        .iter()
        .filter(|&&v| loads[v] < threshold)
        .map(|&v| Raise {
            offline: v,
            added: threshold.clone() - loads[v].clone(),
        })
        .collect();
    raised.sort_by_key(|r| r.offline);
    WaterFillStep {
        online,
        budget,
        threshold: Some(threshold),
        raised,
    }
}

/// Runs Balance over the arrivals of `g` in order.
pub fn run_balance<S: Scalar>(
    g: &BipartiteGraph,
) -> (FractionalMatching<S>, Vec<WaterFillStep<S>>) {
    let mut f = FractionalMatching::<S>::empty(g.n());
    let mut steps = Vec::with_capacity(g.n());
    for j in 0..g.n() {
        let step = water_fill(j, g.neighbors(j), f.loads_offline());
        for r in &step.raised {
            f.add_weight(j, r.offline, r.added.clone());
        }
        steps.push(step);
    }
    (f, steps)
}

/// Balance's size on MonotoneG(n): with `k` the largest integer such that
/// `Σ_{i=1..k} 1/(n-i+1) <= 1`, the size is `k + (n-k)(1 - that sum)`.
pub fn balance_monotone_closed_form<S: Scalar>(n: usize) -> Result<(usize, S), BalanceError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph.into());
    }
    let one = S::one();
    let mut k = 0;
    let mut gap = S::zero();
    while k < n {
        let next = gap.clone() + S::ratio(1, (n - k) as u64);
        if next > one {
            break;
        }
        gap = next;
        k += 1;
    }
    let size = S::from_usize(k) + S::from_usize(n - k) * (one - gap);
    Ok((k, size))
}

/// Removes every backward edge `(u_j, v_i)` with `i < j`.
pub fn strip_backward_edges(g: &BipartiteGraph) -> Result<BipartiteGraph, BalanceError> {
    require_diagonal(g)?;
    let adjacency = (0..g.n())
        .map(|j| g.neighbors(j).iter().copied().filter(|&i| i >= j).collect())
        .collect();
    Ok(BipartiteGraph::new(g.n(), adjacency)?)
}

/// Relabels offline vertices so that a maximum matching found by the oracle
/// becomes the diagonal. Returns the relabeled graph and the relabeling
/// (`v` becomes `relabel.rank_of(v)`).
pub fn relabel_to_diagonal(
    g: &BipartiteGraph,
) -> Result<(BipartiteGraph, Permutation), BalanceError> {
    let matching = g.certify_perfect()?;
    let partners = (0..g.n())
        .map(|j| matching.partner_of_online(j).expect("perfect matching"))
        .collect();
    let relabel = Permutation::from_items(partners).expect("perfect matching is a bijection");
    Ok((g.relabel_offline(&relabel)?, relabel))
}

fn require_diagonal(g: &BipartiteGraph) -> Result<(), BalanceError> {
    match (0..g.n()).find(|&j| !g.has_edge(j, j)) {
        Some(j) => Err(BalanceError::MissingDiagonal(j)),
        None => Ok(()),
    }
}

/// Per-round record of the averaging process replayed on Balance's loads.
///
/// `m_i(j)` is the load of `v_j` after round `i`. Round `i` earns the average
/// of `m_i(j)` over `j >= i`, plus an even share of the slackness left by
/// earlier rounds; the process stops at the first round whose credit reaches
/// one and credits every later round with one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct AveragingTrace<S: Scalar> {
    pub n: usize,
    /// Credited value of each round, after the stop rule.
    #[serde(serialize_with = "display_seq")]
    pub credits: Vec<S>,
    #[serde(serialize_with = "display_seq")]
    pub averages: Vec<S>,
    /// `max_{j >= i} m_i(j)`.
    #[serde(serialize_with = "display_seq")]
    pub maxima: Vec<S>,
    /// `s(i) = maxima[i] - averages[i]`.
    #[serde(serialize_with = "display_seq")]
    pub slackness: Vec<S>,
    /// First round whose credit reaches one.
    #[serde(serialize_with = "one_based_opt")]
    pub stop_round: Option<usize>,
    /// `m'`: sum of the credits.
    #[serde(serialize_with = "display")]
    pub total: S,
    /// `m`: size of Balance on the same graph.
    #[serde(serialize_with = "display")]
    pub balance_total: S,
    /// Online-side count at the stop round: `t' - 1` fully matched arrivals plus
    /// the weight placed by `u_{t'}`.
    #[serde(serialize_with = "display_opt")]
    pub u_side_total: Option<S>,
    /// Before the stop round, every `v_i` carried the largest load among
    /// `v_i..` and every `u_i` was fully matched.
    pub normalized: bool,
    /// Rounds before the stop round credited exactly `Σ_{k<=i} 1/(n-k+1)`.
    pub harmonic_rounds: bool,
}

/// Replays Balance on `g` and runs the averaging process over its loads.
/// `g` must contain the diagonal and no backward edges.
pub fn averaging_process<S: Scalar>(g: &BipartiteGraph) -> Result<AveragingTrace<S>, BalanceError> {
    require_diagonal(g)?;
    for j in 0..g.n() {
        if let Some(&i) = g.neighbors(j).iter().find(|&&i| i < j) {
            return Err(BalanceError::BackwardEdge {
                online: j,
                offline: i,
            });
        }
    }
    let n = g.n();
    let one = S::one();
    let (matching, steps) = run_balance::<S>(g);
    let mut loads = vec![S::zero(); n];
    let mut credits = Vec::with_capacity(n);
    let mut averages = Vec::with_capacity(n);
    let mut maxima = Vec::with_capacity(n);
    let mut slackness = Vec::with_capacity(n);
    let mut carried = S::zero();
    let mut harmonic = S::zero();
    let mut stop_round = None;
    let mut u_side_total = None;
    let mut normalized = true;
    let mut harmonic_rounds = true;
    for (i, step) in steps.iter().enumerate() {
        for r in &step.raised {
            loads[r.offline] = loads[r.offline].clone() + r.added.clone();
        }
        let tail = &loads[i..];
        let average = sum(tail) / S::from_usize(n - i);
        let maximum = tail.iter().cloned().fold(S::zero(), S::max_of);
        let s = maximum.clone() - average.clone();
        harmonic = harmonic + S::ratio(1, (n - i) as u64);
        if stop_round.is_some() {
            credits.push(one.clone());
        } else {
            let credit = average.clone() + carried.clone();
            if credit >= one || (!S::EXACT && credit.close_to(&one)) {
                stop_round = Some(i);
                u_side_total = Some(S::from_usize(i) + matching.loads_online()[i].clone());
                credits.push(one.clone());
            } else {
                if !credit.close_to(&harmonic) {
                    harmonic_rounds = false;
                }
                if !loads[i].close_to(&maximum) || !matching.loads_online()[i].close_to(&one) {
                    normalized = false;
                }
                credits.push(credit);
            }
        }
        if i + 1 < n {
            carried = carried + s.clone() / S::from_usize(n - i - 1);
        }
        averages.push(average);
        maxima.push(maximum);
        slackness.push(s);
    }
    Ok(AveragingTrace {
        n,
        total: sum(&credits),
        balance_total: matching.size(),
        credits,
        averages,
        maxima,
        slackness,
        stop_round,
        u_side_total,
        normalized,
        harmonic_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_diagonal_graph, random_forward_graph, random_graph};
    use crate::matching::validate_fractional;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = BigRational;

    fn q(num: i64, den: i64) -> Q {
        Q::new(num.into(), den.into())
    }

    /// Independent Balance: raise the minimum-load neighbors in tiny
    /// increments. Only used to cross-check the threshold computation in f64.
    fn balance_by_increments(g: &BipartiteGraph, quantum: f64) -> f64 {
        let mut loads = vec![0.0f64; g.n()];
        let mut total = 0.0;
        for j in 0..g.n() {
            let mut left = 1.0;
            while left > quantum / 2.0 {
                let Some(&v) = g
                    .neighbors(j)
                    .iter()
                    .filter(|&&v| loads[v] < 1.0 - quantum / 2.0)
                    .min_by(|&&a, &&b| loads[a].partial_cmp(&loads[b]).unwrap())
                else {
                    break;
                };
                loads[v] += quantum;
                left -= quantum;
                total += quantum;
            }
        }
        total
    }

    #[test]
    fn monotone_two_by_hand() {
        let g = BipartiteGraph::monotone(2).unwrap();
        let (f, steps) = run_balance::<Q>(&g);
        assert_eq!(steps[0].threshold, Some(q(1, 2)));
        assert_eq!(steps[0].raised.len(), 2);
        assert_eq!(steps[1].threshold, Some(q(1, 1)));
        assert_eq!(
            steps[1].raised,
            vec![Raise {
                offline: 1,
                added: q(1, 2)
            }]
        );
        assert_eq!(f.size(), q(3, 2));
        assert_eq!(balance_monotone_closed_form::<Q>(2).unwrap(), (1, q(3, 2)));
    }

    #[test]
    fn monotone_six() {
        let (f, _) = run_balance::<Q>(&BipartiteGraph::monotone(6).unwrap());
        assert_eq!(f.size(), q(41, 10));
        assert_eq!(
            balance_monotone_closed_form::<Q>(6).unwrap(),
            (4, q(41, 10))
        );
    }

    #[test]
    fn symmetric_split() {
        let g = BipartiteGraph::new(2, vec![vec![0, 1], vec![]]).unwrap();
        let (f, steps) = run_balance::<Q>(&g);
        assert_eq!(steps[0].threshold, Some(q(1, 2)));
        assert_eq!(f.loads_offline(), &[q(1, 2), q(1, 2)]);
        assert_eq!(steps[1].threshold, None);
        assert_eq!(steps[1].budget, q(0, 1));
    }

    #[test]
    fn saturated_neighbors_emit_empty_step() {
        let g = BipartiteGraph::new(2, vec![vec![0], vec![0]]).unwrap();
        let (f, steps) = run_balance::<Q>(&g);
        assert!(steps[1].raised.is_empty());
        assert_eq!(steps[1].threshold, None);
        assert_eq!(f.size(), q(1, 1));
    }

    #[test]
    fn closed_form_matches_run_up_to_64() {
        for n in 1..=64 {
            let (f, _) = run_balance::<Q>(&BipartiteGraph::monotone(n).unwrap());
            assert_eq!(
                f.size(),
                balance_monotone_closed_form::<Q>(n).unwrap().1,
                "n={n}"
            );
        }
    }

    #[test]
    fn float_closed_form_tracks_exact() {
        for n in [1, 7, 30, 64] {
            let exact = balance_monotone_closed_form::<Q>(n).unwrap();
            let float = balance_monotone_closed_form::<f64>(n).unwrap();
            assert_eq!(exact.0, float.0);
            assert!((exact.1.to_f64() - float.1).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_loads_follow_harmonic_tail() {
        let n = 12;
        let (k, _) = balance_monotone_closed_form::<Q>(n).unwrap();
        let g = BipartiteGraph::monotone(n).unwrap();
        let mut loads = vec![q(0, 1); n];
        let mut expected = q(0, 1);
        for (j, step) in run_balance::<Q>(&g).1.iter().enumerate().take(k) {
            for r in &step.raised {
                loads[r.offline] += &r.added;
            }
            expected += q(1, (n - j) as i64);
            assert!(loads[j..].iter().all(|l| *l == expected), "round {j}");
        }
    }

    #[test]
    fn increments_oracle_agrees() {
        for seed in 0..20 {
            let g = random_graph(6, 0.5, seed).unwrap();
            let (f, _) = run_balance::<f64>(&g);
            assert!(
                (f.size() - balance_by_increments(&g, 1e-4)).abs() < 1e-2,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn stripping() {
        let g = BipartiteGraph::monotone(5).unwrap();
        assert_eq!(strip_backward_edges(&g).unwrap(), g);
        let mut adjacency = BipartiteGraph::monotone(3).unwrap().adjacency().to_vec();
        adjacency[2].push(0);
        let extra = BipartiteGraph::new(3, adjacency).unwrap();
        assert_eq!(
            strip_backward_edges(&extra).unwrap(),
            BipartiteGraph::monotone(3).unwrap()
        );
        let missing = BipartiteGraph::new(2, vec![vec![1], vec![0]]).unwrap();
        assert_eq!(
            strip_backward_edges(&missing),
            Err(BalanceError::MissingDiagonal(0))
        );
    }

    #[test]
    fn relabel_puts_matching_on_diagonal() {
        let g = BipartiteGraph::new(3, vec![vec![2], vec![0, 2], vec![1]]).unwrap();
        let (h, _) = relabel_to_diagonal(&g).unwrap();
        assert!(h.has_diagonal());
        assert_eq!(h.edge_count(), g.edge_count());
        let imperfect = BipartiteGraph::new(2, vec![vec![0], vec![0]]).unwrap();
        assert!(matches!(
            relabel_to_diagonal(&imperfect),
            Err(BalanceError::Graph(GraphError::NotPerfect { .. }))
        ));
    }

    #[test]
    fn averaging_on_monotone_is_balance() {
        for n in 1..=20 {
            let t = averaging_process::<Q>(&BipartiteGraph::monotone(n).unwrap()).unwrap();
            assert!(t.slackness.iter().all(|s| *s == q(0, 1)), "n={n}");
            assert_eq!(t.total, t.balance_total, "n={n}");
            assert!(t.harmonic_rounds && t.normalized, "n={n}");
            assert_eq!(t.u_side_total.as_ref(), Some(&t.total), "n={n}");
        }
        let t = averaging_process::<Q>(&BipartiteGraph::monotone(5).unwrap()).unwrap();
        let stop = t.stop_round.unwrap();
        let mut h = q(0, 1);
        for i in 0..stop {
            h += q(1, (5 - i) as i64);
            assert_eq!(t.credits[i], h);
        }
        assert!(t.credits[stop..].iter().all(|c| *c == q(1, 1)));
    }

    #[test]
    fn averaging_known_value() {
        let t = averaging_process::<Q>(&BipartiteGraph::monotone(8).unwrap()).unwrap();
        assert_eq!(t.total, q(1497, 280));
        assert_eq!(t.stop_round, Some(5));
    }

    #[test]
    fn averaging_preconditions() {
        let backward = BipartiteGraph::new(2, vec![vec![0], vec![0, 1]]).unwrap();
        assert_eq!(
            averaging_process::<Q>(&backward),
            Err(BalanceError::BackwardEdge {
                online: 1,
                offline: 0
            })
        );
        let no_diag = BipartiteGraph::new(2, vec![vec![1], vec![1]]).unwrap();
        assert!(averaging_process::<Q>(&no_diag).is_err());
    }

    #[test]
    fn averaging_chain_on_random_stripped_graphs() {
        let mono = averaging_process::<Q>(&BipartiteGraph::monotone(8).unwrap()).unwrap();
        for seed in 0..200 {
            let g = random_forward_graph(8, 0.4, seed).unwrap();
            let t = averaging_process::<Q>(&g).unwrap();
            assert!(t.balance_total >= t.total, "seed {seed}");
            assert!(t.balance_total >= mono.balance_total, "seed {seed}");
            assert!(t.slackness.iter().all(|s| *s >= q(0, 1)));
            if t.normalized {
                assert!(t.harmonic_rounds, "seed {seed}");
                assert!(t.total >= mono.total, "seed {seed}");
            }
        }
    }

    proptest! {
        #[test]
        fn steps_respect_invariants(n in 1usize..9, p in 0.1f64..0.9, seed in any::<u64>()) {
            let g = random_graph(n, p, seed).unwrap();
            let (f, steps) = run_balance::<Q>(&g);
            prop_assert!(validate_fractional(&g, &f).is_valid());
            let mut loads = vec![q(0, 1); n];
            for step in &steps {
                let room: Q = g.neighbors(step.online).iter().map(|&v| q(1, 1) - &loads[v]).sum();
                if let Some(t) = &step.threshold {
                    prop_assert!(*t <= q(1, 1));
                    for r in &step.raised {
                        prop_assert!(r.added > q(0, 1));
                        prop_assert_eq!(&(&loads[r.offline] + &r.added), t);
                    }
                    prop_assert_eq!(step.added_total(), step.budget.clone());
                    for &v in g.neighbors(step.online) {
                        if !step.raised.iter().any(|r| r.offline == v) {
                            prop_assert!(loads[v] >= *t);
                        }
                    }
                } else {
                    prop_assert_eq!(room, q(0, 1));
                }
                for r in &step.raised {
                    loads[r.offline] += &r.added;
                }
            }
            let doubled = f.size() * q(2, 1);
            prop_assert!(doubled >= q(g.max_matching_size() as i64, 1));
        }

        #[test]
        fn stripping_never_increases_balance(seed in any::<u64>()) {
            let g = random_diagonal_graph(8, 0.35, seed).unwrap();
            let stripped = strip_backward_edges(&g).unwrap();
            prop_assert!(run_balance::<Q>(&stripped).0.size() <= run_balance::<Q>(&g).0.size());
        }
    }
}
