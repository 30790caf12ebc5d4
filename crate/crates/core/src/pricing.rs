//! Ranking as a market: items carry random weights `w` and prices
//! `p = e^(w-1)`, buyers arrive in order and buy their cheapest exposed
//! desired item. A sale earns revenue `p` and gives the buyer utility `1 - p`.
//!
//! Money is tracked exactly in units of `2^-54`: every price lies in
//! `[1/e, 1]`, so its binary64 value is an integer multiple of `2^-54` and
//! revenue plus utility sums to the matching size with no rounding.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{INV_E, ONE_MINUS_INV_E};
use crate::graph::{BipartiteGraph, GraphError};
use crate::matching::IntegralMatching;
use crate::permutation::Permutation;
use crate::rng::trial_rng;
use crate::stats::{run_trials, MeanStderr, Moments};

/// Money units per unit of currency.
pub const MONEY_SCALE: u64 = 1 << 54;

/// Flag threshold for Monte Carlo checks, in standard errors.
pub const STDERR_MULTIPLIER: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("expected {expected} weights, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("weight {weight} of v{index} is outside [0, 1]")]
    WeightOutOfRange { index: usize, weight: f64 },
    #[error("this analysis requires MonotoneG")]
    NotMonotone,
    #[error("online index {j} outside 0..{n}")]
    IndexOutOfRange { j: usize, n: usize },
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `e^(w-1)`.
pub fn price_of(weight: f64) -> f64 {
    (weight - 1.0).exp()
}

/// Exact money units of a price in `[1/4, 1]`.
pub fn money_units(price: f64) -> u64 {
    let units = price * MONEY_SCALE as f64;
    debug_assert!(units.fract() == 0.0 && (0.25..=1.0).contains(&price));
    units as u64
}

fn validate_weights(n: usize, weights: &[f64]) -> Result<(), PricingError> {
    if weights.len() != n {
        return Err(PricingError::LengthMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    match weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
        Some(index) => Err(PricingError::WeightOutOfRange {
            index,
            weight: weights[index],
        }),
        None => Ok(()),
    }
}

/// Ranking permutation induced by prices: ascending price, ties to the lower
/// index.
pub fn price_permutation(prices: &[f64]) -> Permutation {
    let mut items: Vec<usize> = (0..prices.len()).collect();
    items.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
    Permutation::from_items(items).expect("sorted indices form a permutation")
}

/// Cheapest-exposed greedy. `removed` items are never sold. Returns the item
/// bought by each buyer.
fn cheapest_exposed(
    g: &BipartiteGraph,
    prices: &[f64],
    removed: Option<usize>,
) -> Vec<Option<usize>> {
    let mut sold = vec![false; g.n()];
    if let Some(v) = removed {
        sold[v] = true;
    }
    (0..g.n())
        .map(|j| {
            let pick = g
                .neighbors(j)
                .iter()
                .copied()
                .filter(|&v| !sold[v])
                .min_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
            if let Some(v) = pick {
                sold[v] = true;
            }
            pick
        })
        .collect()
}

/// Utility of each buyer in money units.
fn utilities_units(purchases: &[Option<usize>], prices: &[f64]) -> Vec<u64> {
    purchases
        .iter()
        .map(|p| p.map_or(0, |v| MONEY_SCALE - money_units(prices[v])))
        .collect()
}

/// One priced execution of Ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricedRun {
    pub weights: Vec<f64>,
    pub prices: Vec<f64>,
    pub matching: IntegralMatching,
    /// Revenue per item; zero for unsold items.
    pub revenue: Vec<f64>,
    /// Utility per buyer; zero for unmatched buyers.
    pub utility: Vec<f64>,
    pub total_revenue: f64,
    pub total_utility: f64,
    pub revenue_units: u128,
    pub utility_units: u128,
}

impl PricedRun {
    pub fn size(&self) -> usize {
        self.matching.size()
    }

    /// Revenue plus utility equals the matching size, in exact units.
    pub fn identity_holds(&self) -> bool {
        self.revenue_units + self.utility_units == self.size() as u128 * MONEY_SCALE as u128
    }
}

pub fn run_priced_ranking(g: &BipartiteGraph, weights: &[f64]) -> Result<PricedRun, PricingError> {
    validate_weights(g.n(), weights)?;
    let n = g.n();
    let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
    let purchases = cheapest_exposed(g, &prices, None);
    let mut matching = IntegralMatching::empty(n);
    let mut revenue = vec![0.0; n];
    let mut utility = vec![0.0; n];
    let mut revenue_units = 0u128;
    let mut utility_units = 0u128;
    for (j, purchase) in purchases.iter().enumerate() {
        if let Some(v) = *purchase {
            matching.insert(j, v)?;
            let units = money_units(prices[v]);
            revenue[v] = prices[v];
            utility[j] = (MONEY_SCALE - units) as f64 / MONEY_SCALE as f64;
            revenue_units += units as u128;
            utility_units += (MONEY_SCALE - units) as u128;
        }
    }
    Ok(PricedRun {
        weights: weights.to_vec(),
        prices,
        matching,
        revenue,
        utility,
        total_revenue: revenue_units as f64 / MONEY_SCALE as f64,
        total_utility: utility_units as f64 / MONEY_SCALE as f64,
        revenue_units,
        utility_units,
    })
}

fn sample_weights<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// Per-item estimates of `E[r(v_i) + y(M(v_i))]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerEdgeReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Items whose `mean + 4 stderr` falls below `1 - 1/e` (1-based).
    pub flagged: Vec<usize>,
    /// Sum over items, i.e. the matching size.
    pub total: MeanStderr,
    /// Revenue plus utility equalled the size in every trial.
    pub identity_violations: u64,
    pub bound: f64,
}

pub fn per_edge_bound_mc(
    g: &BipartiteGraph,
    m: &IntegralMatching,
    trials: u64,
    seed: u64,
) -> Result<PerEdgeReport, PricingError> {
    if trials < 2 {
        return Err(PricingError::TooFewTrials(trials));
    }
    m.validate_against(g)?;
    if !m.is_perfect() {
        return Err(GraphError::NotPerfect {
            max_matching: m.size(),
            n: g.n(),
        }
        .into());
    }
    let n = g.n();
    let buyer_of: Vec<usize> = (0..n)
        .map(|v| m.partner_of_offline(v).expect("perfect"))
        .collect();
    let (per_item, total, violations) = run_trials(
        trials,
        || (vec![Moments::default(); n], Moments::default(), 0u64),
        |(per_item, total, violations), t| {
            let weights = sample_weights(n, &mut trial_rng(seed, t));
            let run = run_priced_ranking(g, &weights).expect("sampled weights are valid");
            if !run.identity_holds() {
                *violations += 1;
            }
            for v in 0..n {
                per_item[v].push(run.revenue[v] + run.utility[buyer_of[v]]);
            }
            total.push(run.size() as f64);
        },
        |acc, part| {
            for (a, b) in acc.0.iter_mut().zip(&part.0) {
                a.merge(b);
            }
            acc.1.merge(&part.1);
            acc.2 += part.2;
        },
    );
    let summaries: Vec<MeanStderr> = per_item.iter().map(Moments::summary).collect();
    let flagged = summaries
        .iter()
        .enumerate()
        .filter(|(_, s)| s.mean + STDERR_MULTIPLIER * s.stderr < ONE_MINUS_INV_E)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(PerEdgeReport {
        n,
        trials,
        seed,
        means: summaries.iter().map(|s| s.mean).collect(),
        stderrs: summaries.iter().map(|s| s.stderr).collect(),
        flagged,
        total: total.summary(),
        identity_violations: violations,
        bound: ONE_MINUS_INV_E,
    })
}

/// Per-buyer slackness against removal of the last item on MonotoneG.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessRecord {
    pub n: usize,
    /// `y(u) - y_{-v_n}(u)` per buyer.
    pub slackness: Vec<f64>,
    pub sum: f64,
    /// `1 - p_n`.
    pub bound: f64,
    /// `sum <= bound`, decided in exact units.
    pub holds: bool,
}

pub fn slackness_realization(n: usize, weights: &[f64]) -> Result<SlacknessRecord, PricingError> {
    let g = BipartiteGraph::monotone(n)?;
    slackness_on(&g, weights)
}

/// As [`slackness_realization`] for an explicit graph, which must be MonotoneG.
pub fn slackness_on(g: &BipartiteGraph, weights: &[f64]) -> Result<SlacknessRecord, PricingError> {
    if !g.is_monotone() {
        return Err(PricingError::NotMonotone);
    }
    validate_weights(g.n(), weights)?;
    let n = g.n();
    let last = n - 1;
    let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
    let full = utilities_units(&cheapest_exposed(g, &prices, None), &prices);
    let without = utilities_units(&cheapest_exposed(g, &prices, Some(last)), &prices);
    let diffs: Vec<i128> = full
        .iter()
        .zip(&without)
        .map(|(&a, &b)| a as i128 - b as i128)
        .collect();
    let sum: i128 = diffs.iter().sum();
    let bound = (MONEY_SCALE - money_units(prices[last])) as i128;
    let scale = MONEY_SCALE as f64;
    Ok(SlacknessRecord {
        n,
        slackness: diffs.iter().map(|&d| d as f64 / scale).collect(),
        sum: sum as f64 / scale,
        bound: bound as f64 / scale,
        holds: sum <= bound,
    })
}

/// Monte Carlo summary of slackness on MonotoneG(n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// `Σ_u s(u)` per realization.
    pub slackness_sum: MeanStderr,
    /// Realizations with `Σ s(u) > 1 - p_n`.
    pub violations: u64,
    /// Matching size per realization.
    pub size: MeanStderr,
    /// `(1 - 1/e) n + 1/e`.
    pub upper_bound: f64,
    /// `1/e`, the bound on the expected slackness sum.
    pub slackness_bound: f64,
}

pub fn slackness_mc(n: usize, trials: u64, seed: u64) -> Result<SlacknessReport, PricingError> {
    if trials < 2 {
        return Err(PricingError::TooFewTrials(trials));
    }
    let g = BipartiteGraph::monotone(n)?;
    let (sums, sizes, violations) = run_trials(
        trials,
        || (Moments::default(), Moments::default(), 0u64),
        |(sums, sizes, violations), t| {
            let weights = sample_weights(n, &mut trial_rng(seed, t));
            let record = slackness_on(&g, &weights).expect("monotone graph, valid weights");
            if !record.holds {
                *violations += 1;
            }
            sums.push(record.sum);
            let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
            let size = cheapest_exposed(&g, &prices, None).iter().flatten().count();
            sizes.push(size as f64);
        },
        |acc, part| {
            acc.0.merge(&part.0);
            acc.1.merge(&part.1);
            acc.2 += part.2;
        },
    );
    Ok(SlacknessReport {
        n,
        trials,
        seed,
        slackness_sum: sums.summary(),
        violations,
        size: sizes.summary(),
        upper_bound: ONE_MINUS_INV_E * n as f64 + INV_E,
        slackness_bound: INV_E,
    })
}

/// Buyer `u_j`'s utility with `v_j` removed versus with the last item
/// removed, on MonotoneG(n) under common weights. `j` is 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalComparison {
    pub n: usize,
    pub j: usize,
    pub trials: u64,
    pub seed: u64,
    pub without_own: MeanStderr,
    pub without_last: MeanStderr,
    /// Paired difference `without_own - without_last`.
    pub difference: MeanStderr,
}

pub fn removal_equality_check(
    n: usize,
    j: usize,
    trials: u64,
    seed: u64,
) -> Result<RemovalComparison, PricingError> {
    if trials < 2 {
        return Err(PricingError::TooFewTrials(trials));
    }
    if j >= n {
        return Err(PricingError::IndexOutOfRange { j, n });
    }
    let g = BipartiteGraph::monotone(n)?;
    let scale = MONEY_SCALE as f64;
    let (own, last, diff) = run_trials(
        trials,
        || (Moments::default(), Moments::default(), Moments::default()),
        |(own, last, diff), t| {
            let weights = sample_weights(n, &mut trial_rng(seed, t));
            let (a, b) = removal_utilities(&g, &weights, j);
            own.push(a as f64 / scale);
            last.push(b as f64 / scale);
            diff.push((a as i128 - b as i128) as f64 / scale);
        },
        |acc, part| {
            acc.0.merge(&part.0);
            acc.1.merge(&part.1);
            acc.2.merge(&part.2);
        },
    );
    Ok(RemovalComparison {
        n,
        j,
        trials,
        seed,
        without_own: own.summary(),
        without_last: last.summary(),
        difference: diff.summary(),
    })
}

/// `(y_{-v_j}(u_j), y_{-v_last}(u_j))` in money units.
fn removal_utilities(g: &BipartiteGraph, weights: &[f64], j: usize) -> (u64, u64) {
    let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
    let own = utilities_units(&cheapest_exposed(g, &prices, Some(j)), &prices)[j];
    let last = utilities_units(&cheapest_exposed(g, &prices, Some(g.n() - 1)), &prices)[j];
    (own, last)
}

/// `y_{-v_j}(u_j)` and `y_{-v_last}(u_j)` for one weight vector on MonotoneG.
pub fn removal_utilities_once(
    n: usize,
    j: usize,
    weights: &[f64],
) -> Result<(f64, f64), PricingError> {
    if j >= n {
        return Err(PricingError::IndexOutOfRange { j, n });
    }
    validate_weights(n, weights)?;
    let g = BipartiteGraph::monotone(n)?;
    let (a, b) = removal_utilities(&g, weights, j);
    Ok((a as f64 / MONEY_SCALE as f64, b as f64 / MONEY_SCALE as f64))
}

/// Monte Carlo mean of `e^(w-1)` for uniform `w`.
pub fn expected_price_mc(trials: u64, seed: u64) -> Result<MeanStderr, PricingError> {
    if trials < 2 {
        return Err(PricingError::TooFewTrials(trials));
    }
    let m = run_trials(
        trials,
        Moments::default,
        |m, t| m.push(price_of(trial_rng(seed, t).gen::<f64>())),
        |acc, part| acc.merge(&part),
    );
    Ok(m.summary())
}

/// Adding back item `v` never lowers any buyer's utility.
pub fn removal_never_helps(
    g: &BipartiteGraph,
    weights: &[f64],
    v: usize,
) -> Result<bool, PricingError> {
    validate_weights(g.n(), weights)?;
    let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
    let full = utilities_units(&cheapest_exposed(g, &prices, None), &prices);
    let without = utilities_units(&cheapest_exposed(g, &prices, Some(v)), &prices);
    Ok(full.iter().zip(&without).all(|(a, b)| a >= b))
}

/// On MonotoneG: `v_i` is sold iff `p_i < p`, where `p` is the price `u_i`
/// pays once `v_i` is removed (1 if it buys nothing). Checked for every `i`.
pub fn first_claim_converse_holds(n: usize, weights: &[f64]) -> Result<bool, PricingError> {
    validate_weights(n, weights)?;
    let g = BipartiteGraph::monotone(n)?;
    let prices: Vec<f64> = weights.iter().map(|&w| price_of(w)).collect();
    let full = cheapest_exposed(&g, &prices, None);
    let mut sold = vec![false; n];
    for v in full.iter().flatten() {
        sold[*v] = true;
    }
    Ok((0..n).all(|i| {
        let p = cheapest_exposed(&g, &prices, Some(i))[i].map_or(1.0, |v| prices[v]);
        sold[i] == (prices[i] < p)
    }))
}
