//! The verification battery behind `matchlab verify`.
//!
//! Each check records what was measured, what was expected and the
//! tolerance used. Scale follows [`VerifyConfig`]: `n_max` caps every
//! enumeration; below the enumeration cap the Monte Carlo and exact Balance
//! instances shrink with it as well.

use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

use crate::adversary::{
    run_adaptive_adversary, FixedRanking, HighestIndex, LowestDegreeSeen, LowestIndex,
    OnlineAlgorithm,
};
use crate::balance::{averaging_process, balance_monotone_closed_form, run_balance};
use crate::combinatorics::{
    a_exact, audit_bijection, d_triangle, derangements, factorial,
    fixpoint_prefix_count_bruteforce, rho_ranking_monotone, CountTriangle, FIXPOINT_BRUTEFORCE_CAP,
};
use crate::constants::{self, HALF_MINUS_HALF_INV_E, ONE_MINUS_INV_E, ONE_MINUS_TWO_INV_E};
use crate::graph::{random_forward_graph, BipartiteGraph};
use crate::permutation::Permutation;
use crate::pricing::{expected_price_mc, per_edge_bound_mc, slackness_mc, STDERR_MULTIPLIER};
use crate::ranking::{
    enumerate_ranking_exact, matched_at_rank_counts, ranking_monte_carlo, ENUMERATION_CAP,
};
use crate::rng::rng_from_seed;

pub const SCHEMA: &str = "matchlab/1";

/// Published `a(1..=7)`.
pub const A_TABLE: [u64; 7] = [1, 3, 13, 67, 411, 2921, 23633];
/// Published `d(1..=8)`.
pub const D_TABLE: [u64; 8] = [0, 1, 2, 9, 44, 265, 1854, 14833];
/// Published row `d(6, 1..=6)`.
pub const D6_ROW: [u64; 6] = [309, 362, 426, 504, 600, 720];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub n_max: usize,
    pub trials: u64,
    pub seed: u64,
    /// Replaces the computed `d(n, i)` triangle in the table checks.
    #[serde(skip)]
    pub triangle: Option<CountTriangle>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_max: ENUMERATION_CAP,
            trials: 100_000,
            seed: 0,
            triangle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
    pub tolerance: String,
    /// Wall-clock time; kept out of JSON so reports stay byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub config: VerifyConfig,
    pub triangle_override: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} (measured {}, expected {}) [{:.3}s]\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.expected,
                c.seconds
            ));
        }
        let failed = self.failures().count();
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            failed
        ));
        out
    }
}

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn run(
        &mut self,
        name: impl Into<String>,
        anchor: &str,
        tolerance: &str,
        body: impl FnOnce() -> (bool, String, String),
    ) {
        let start = Instant::now();
        let (passed, measured, expected) = body();
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            passed,
            measured,
            expected,
            tolerance: tolerance.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn run_verify(config: &VerifyConfig) -> VerifyReport {
    let n_max = config.n_max.max(1);
    let mut b = Battery { checks: Vec::new() };
    let exact = "exact";

    b.run(
        "constants self-test",
        "constants built from e",
        "1e-50",
        || {
            let failing = constants::self_test();
            (failing.is_empty(), join(&failing), String::new())
        },
    );

    for n in 1..=n_max.min(A_TABLE.len()) {
        let expected = A_TABLE[n - 1];
        b.run(format!("a({n}) = {expected}"), "a(n) table", exact, || {
            let a = a_exact(n).expect("n >= 1");
            (
                a == BigUint::from(expected),
                a.to_string(),
                expected.to_string(),
            )
        });
    }
    for n in 1..=n_max.min(D_TABLE.len()) {
        let expected = D_TABLE[n - 1];
        b.run(
            format!("d({n}) = {expected}"),
            "derangement table",
            exact,
            || {
                let d = derangements(n);
                (
                    d == BigUint::from(expected),
                    d.to_string(),
                    expected.to_string(),
                )
            },
        );
    }

    let triangle_rows = n_max.min(FIXPOINT_BRUTEFORCE_CAP);
    let triangle = config
        .triangle
        .clone()
        .unwrap_or_else(|| d_triangle(triangle_rows).expect("n_max >= 1"));
    if n_max >= 6 {
        b.run("d(6, 1..6) row", "d(n,i) triangle", exact, || {
            let measured = if triangle.n_max() >= 6 {
                join(triangle.row(6))
            } else {
                "missing".into()
            };
            (measured == join(&D6_ROW), measured, join(&D6_ROW))
        });
    }
    b.run("triangle-vs-bruteforce", "d(n,i) triangle", exact, || {
        let mut mismatches = Vec::new();
        if triangle.n_max() < triangle_rows {
            mismatches.push(format!("rows 1..{} only", triangle.n_max()));
        }
        for n in 1..=triangle_rows.min(triangle.n_max()) {
            for i in 1..=n {
                let brute = fixpoint_prefix_count_bruteforce(n, i).expect("in range");
                if *triangle.d(n, i) != brute {
                    mismatches.push(format!("d({n},{i})={} vs {brute}", triangle.d(n, i)));
                }
            }
        }
        (
            mismatches.is_empty(),
            if mismatches.is_empty() {
                format!("rows 1..{triangle_rows} agree")
            } else {
                mismatches.join("; ")
            },
            format!("brute-force fixpoint counts, rows 1..{triangle_rows}"),
        )
    });
    b.run("triangle recurrence", "d(n,i) recurrence", exact, || {
        let violation = triangle.first_recurrence_violation();
        (
            violation.is_none(),
            violation.map_or("none".into(), |(n, i)| format!("({n},{i})")),
            "none".into(),
        )
    });

    let enum_max = n_max.min(ENUMERATION_CAP);
    b.run(
        format!("enumeration = (n+1)! - d(n+1) - d(n), n <= {enum_max}"),
        "exact expectation of Ranking on MonotoneG",
        exact,
        || {
            let mut bad = Vec::new();
            for n in 1..=enum_max {
                let e = enumerate_ranking_exact(n).expect("within cap");
                if e.sum_of_sizes != a_exact(n).expect("n >= 1") {
                    bad.push(n);
                }
            }
            (
                bad.is_empty(),
                format!("mismatches at {bad:?}"),
                "none".into(),
            )
        },
    );
    let rank_max = n_max.min(FIXPOINT_BRUTEFORCE_CAP);
    b.run(
        format!("matched-at-rank counts = d(n, n+1-i), n <= {rank_max}"),
        "a(n,i) = d(n,n+1-i)",
        exact,
        || {
            let t = d_triangle(rank_max).expect("n >= 1");
            let bad: Vec<usize> = (1..=rank_max)
                .filter(|&n| {
                    let counts = matched_at_rank_counts(n).expect("within cap");
                    (1..=n).any(|i| counts[i - 1] != *t.a(n, i))
                })
                .collect();
            (
                bad.is_empty(),
                format!("mismatches at {bad:?}"),
                "none".into(),
            )
        },
    );
    b.run(
        "|nu(n)| < 1/n!, n <= 20",
        "error term of the exact expectation",
        "1/n!",
        || {
            let bad: Vec<usize> = (1..=20)
                .filter(|&n| {
                    !rho_ranking_monotone(n)
                        .expect("n >= 1")
                        .within_factorial_bound()
                })
                .collect();
            let nu4 = rho_ranking_monotone(4).expect("n >= 1").nu;
            (
                bad.is_empty(),
                format!("violations {bad:?}; nu(4) = {}", &nu4[..14]),
                "none".into(),
            )
        },
    );

    let balance_max = (8 * n_max).min(64);
    b.run(
        format!("balance closed form, n <= {balance_max}"),
        "Balance on MonotoneG",
        exact,
        || {
            let bad: Vec<usize> = (1..=balance_max)
                .filter(|&n| {
                    let g = BipartiteGraph::monotone(n).expect("n >= 1");
                    let (f, _) = run_balance::<BigRational>(&g);
                    f.size()
                        != balance_monotone_closed_form::<BigRational>(n)
                            .expect("n >= 1")
                            .1
                })
                .collect();
            (
                bad.is_empty(),
                format!("mismatches at {bad:?}"),
                "none".into(),
            )
        },
    );
    b.run(
        "balance deviation -> 1/2 - 1/(2e)",
        "Balance on MonotoneG, additive constant",
        "0.02, shrinking",
        || {
            let devs: Vec<f64> = [1_000usize, 10_000, 100_000]
                .iter()
                .map(|&n| {
                    let (_, size) = balance_monotone_closed_form::<f64>(n).expect("n >= 1");
                    size - ONE_MINUS_INV_E * n as f64
                })
                .collect();
            let gaps: Vec<f64> = devs
                .iter()
                .map(|d| (d - HALF_MINUS_HALF_INV_E).abs())
                .collect();
            let ok = gaps.iter().all(|g| *g < 0.02) && gaps.windows(2).all(|w| w[1] < w[0]);
            (
                ok,
                devs.iter()
                    .map(|d| format!("{d:.7}"))
                    .collect::<Vec<_>>()
                    .join(","),
                format!("{HALF_MINUS_HALF_INV_E:.7}"),
            )
        },
    );
    let graphs = if n_max >= 8 { 1000 } else { 100 };
    b.run(
        format!("averaging chain over {graphs} graphs, n = 8"),
        "averaging process",
        exact,
        || {
            let mono =
                averaging_process::<BigRational>(&BipartiteGraph::monotone(8).expect("n >= 1"))
                    .expect("MonotoneG satisfies the preconditions");
            let mut bad = 0;
            for k in 0..graphs {
                let g = random_forward_graph(8, 0.4, config.seed.wrapping_add(k)).expect("n >= 1");
                let t = averaging_process::<BigRational>(&g).expect("forward graph");
                if t.balance_total < t.total || (t.normalized && t.total < mono.total) {
                    bad += 1;
                }
            }
            let mono_ok = mono.total == mono.balance_total && mono.harmonic_rounds;
            (
                bad == 0 && mono_ok,
                format!("{bad} violations; m'(MonotoneG) = {}", mono.total),
                format!("0 violations; m(MonotoneG) = {}", mono.balance_total),
            )
        },
    );

    let full_scale = n_max >= ENUMERATION_CAP;
    let mc_n = if full_scale { 100 } else { 4 * n_max };
    let trials = config.trials.max(2);
    b.run(
        format!("ranking sandwich on MonotoneG({mc_n})"),
        "Ranking on MonotoneG, upper and lower bounds",
        "4 stderr",
        || {
            let g = BipartiteGraph::monotone(mc_n).expect("n >= 1");
            let r = ranking_monte_carlo(&g, trials, config.seed).expect("trials >= 2");
            let lower = ONE_MINUS_INV_E * mc_n as f64;
            let target = lower + ONE_MINUS_TWO_INV_E;
            let k = STDERR_MULTIPLIER * r.stderr;
            let ok = (r.mean - target).abs() <= k
                && r.mean - k > lower
                && r.mean + k < lower + constants::INV_E;
            (
                ok,
                format!("{:.5} ± {:.5}", r.mean, r.stderr),
                format!("{target:.5}"),
            )
        },
    );
    let price_n = if full_scale { 50 } else { 2 * n_max };
    b.run(
        format!("revenue + utility = size and per-edge bound, MonotoneG({price_n})"),
        "price-based analysis of Ranking",
        "exact; 4 stderr",
        || {
            let g = BipartiteGraph::monotone(price_n).expect("n >= 1");
            let m = g.certify_perfect().expect("MonotoneG is perfect");
            let r = per_edge_bound_mc(&g, &m, trials, config.seed).expect("perfect matching");
            let min = r.means.iter().copied().fold(f64::INFINITY, f64::min);
            (
                r.identity_violations == 0 && r.flagged.is_empty(),
                format!(
                    "{} identity violations; min edge mean {min:.5}; flagged {:?}",
                    r.identity_violations, r.flagged
                ),
                format!("0; >= {ONE_MINUS_INV_E:.5}"),
            )
        },
    );
    b.run("mean price = 1 - 1/e", "expected price", "4 stderr", || {
        let s = expected_price_mc(trials, config.seed).expect("trials >= 2");
        (
            s.within(ONE_MINUS_INV_E, STDERR_MULTIPLIER),
            format!("{:.6} ± {:.6}", s.mean, s.stderr),
            format!("{ONE_MINUS_INV_E:.6}"),
        )
    });
    let slack_trials = (trials / 10).max(2);
    b.run(
        format!("slackness sum <= 1 - p_n in {slack_trials} realizations, n = 6"),
        "slackness of the price analysis",
        "exact",
        || {
            let r = slackness_mc(6, slack_trials, config.seed).expect("trials >= 2");
            let mean_ok = r.slackness_sum.mean
                <= constants::INV_E + STDERR_MULTIPLIER * r.slackness_sum.stderr
                && r.slackness_sum.mean >= 0.0;
            (
                r.violations == 0 && mean_ok,
                format!(
                    "{} violations; mean sum {:.5}",
                    r.violations, r.slackness_sum.mean
                ),
                format!("0; mean <= {:.5}", constants::INV_E),
            )
        },
    );

    let bij_max = n_max.min(6);
    b.run(
        format!("bijection, n <= {bij_max}"),
        "bijection between rankings",
        exact,
        || {
            let t = d_triangle(bij_max + 1).expect("n >= 1");
            let bad: Vec<usize> = (1..=bij_max)
                .filter(|&n| {
                    let audit = audit_bijection(n).expect("within cap");
                    !(audit.is_bijective()
                        && audit.case_failures == 0
                        && BigUint::from(audit.last_unmatched)
                            == factorial(n + 1) - t.a(n + 1, n + 1))
                })
                .collect();
            (
                bad.is_empty(),
                format!("failures at {bad:?}"),
                "none".into(),
            )
        },
    );

    b.run(
        "adversary holds greedy algorithms to n/2",
        "deterministic lower bound",
        exact,
        || {
            let mut bad = Vec::new();
            for n in [2usize, 4, 6, 10, 100] {
                let pi = Permutation::random(n, &mut rng_from_seed(config.seed));
                let algs: [Box<dyn OnlineAlgorithm>; 4] = [
                    Box::new(LowestIndex),
                    Box::new(HighestIndex),
                    Box::new(LowestDegreeSeen),
                    Box::new(FixedRanking(pi)),
                ];
                for alg in &algs {
                    let t = run_adaptive_adversary(alg.as_ref(), n).expect("even n");
                    if t.matching_size != n / 2 || t.max_matching_size != n || !t.replay_consistent
                    {
                        bad.push(format!("{} n={n}", alg.name()));
                    }
                }
            }
            (bad.is_empty(), format!("failures {bad:?}"), "none".into())
        },
    );

    let passed = b.checks.iter().all(|c| c.passed);
    VerifyReport {
        schema: SCHEMA,
        config: config.clone(),
        triangle_override: config.triangle.is_some(),
        checks: b.checks,
        passed,
    }
}
