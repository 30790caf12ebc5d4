//! Exact counting sequences behind Ranking on MonotoneG.
//!
//! * `d(n)`: derangements of `[n]`.
//! * `d(n, i)`: permutations of `[n]` whose fixed points (if any) all lie
//!   among the first `i` items. `d(n, n) = n!` and
//!   `d(n, i+1) = d(n, i) + d(n-1, i)`.
//! * `a(n, i) = d(n, n+1-i)`: rankings of MonotoneG(n) under which the item
//!   of rank `i` is matched; `a(n) = Σ_i a(n, i) = (n+1)! - d(n+1) - d(n)`.
//!
//! Triangle indices `n` and `i` are 1-based, as in the tables they mirror.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::BipartiteGraph;
use crate::permutation::{for_each_permutation, for_each_permutation_starting_with, Permutation};
use crate::precision::{decimal, Interval};
use crate::ranking::run_ranking;

/// Largest `n` for the brute-force fixpoint oracle.
pub const FIXPOINT_BRUTEFORCE_CAP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatoricsError {
    #[error("n must be at least 1")]
    ZeroSize,
    #[error("index i = {i} outside 1..={n}")]
    IndexOutOfRange { n: usize, i: usize },
    #[error("brute force is capped at n = {cap} (got n = {n})")]
    TooLarge { n: usize, cap: usize },
    #[error("triangle row {row} has {found} entries, expected {row}")]
    RaggedRow { row: usize, found: usize },
    #[error("triangle entry {0:?} is not a nonnegative integer")]
    BadEntry(String),
    #[error("permutation over {found} items, expected {expected}")]
    WrongLength { expected: usize, found: usize },
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Derangement numbers by Euler's recurrence `d(n) = n d(n-1) + (-1)^n`.
pub fn derangements(n: usize) -> BigUint {
    derangement_sequence(n)
        .pop()
        .expect("sequence has n + 1 entries")
}

/// `d(0), …, d(n_max)`.
pub fn derangement_sequence(n_max: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut d = BigInt::one();
    out.push(BigUint::one());
    for n in 1..=n_max {
        d = d * BigInt::from(n)
            + if n % 2 == 0 {
                BigInt::one()
            } else {
                -BigInt::one()
            };
        out.push(d.to_biguint().expect("derangement counts are nonnegative"));
    }
    out
}

/// The ragged table of `d(n, i)`, `1 <= i <= n <= n_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TriangleFile", into = "TriangleFile")]
pub struct CountTriangle {
    rows: Vec<Vec<BigUint>>,
}

/// JSON form: `{"rows": [["1"], ["1", "2"], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleFile {
    pub rows: Vec<Vec<String>>,
}

impl CountTriangle {
    /// Wraps externally supplied rows, checking only the triangular shape.
    pub fn from_rows(rows: Vec<Vec<BigUint>>) -> Result<Self, CombinatoricsError> {
        if rows.is_empty() {
            return Err(CombinatoricsError::ZeroSize);
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(CombinatoricsError::RaggedRow {
                    row: k + 1,
                    found: row.len(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// Row `n`: `d(n, 1), …, d(n, n)`.
    pub fn row(&self, n: usize) -> &[BigUint] {
        &self.rows[n - 1]
    }

    pub fn d(&self, n: usize, i: usize) -> &BigUint {
        &self.rows[n - 1][i - 1]
    }

    /// `a(n, i) = d(n, n+1-i)`.
    pub fn a(&self, n: usize, i: usize) -> &BigUint {
        self.d(n, n + 1 - i)
    }

    /// `a(n, 1), …, a(n, n)`.
    pub fn a_row(&self, n: usize) -> Vec<BigUint> {
        self.row(n).iter().rev().cloned().collect()
    }

    pub fn row_sum(&self, n: usize) -> BigUint {
        self.row(n).iter().sum()
    }

    /// First `(n, i)` violating `d(n,n) = n!` or the recurrence, if any.
    pub fn first_recurrence_violation(&self) -> Option<(usize, usize)> {
        for n in 1..=self.n_max() {
            if *self.d(n, n) != factorial(n) {
                return Some((n, n));
            }
            if n > 1 {
                for i in 1..n {
                    if *self.d(n, i + 1) != self.d(n, i) + self.d(n - 1, i) {
                        return Some((n, i));
                    }
                }
            }
        }
        None
    }
}

impl TryFrom<TriangleFile> for CountTriangle {
    type Error = CombinatoricsError;

    fn try_from(file: TriangleFile) -> Result<Self, Self::Error> {
        let rows = file
            .rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|s| {
                        s.parse::<BigUint>()
                            .map_err(|_| CombinatoricsError::BadEntry(s))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }
}

impl From<CountTriangle> for TriangleFile {
    fn from(t: CountTriangle) -> Self {
        TriangleFile {
            rows: t
                .rows
                .iter()
                .map(|row| row.iter().map(ToString::to_string).collect())
                .collect(),
        }
    }
}

/// Builds `d(n, i)` for `n <= n_max`: the diagonal holds `n!` and each row is
/// filled right to left by `d(n, i) = d(n, i+1) - d(n-1, i)`.
pub fn d_triangle(n_max: usize) -> Result<CountTriangle, CombinatoricsError> {
    if n_max == 0 {
        return Err(CombinatoricsError::ZeroSize);
    }
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut row = vec![BigUint::zero(); n];
        row[n - 1] = factorial(n);
        for i in (1..n).rev() {
            // 1-based d(n, i) lives at row[i - 1].
            row[i - 1] = &row[i] - &rows[n - 2][i - 1];
        }
        rows.push(row);
    }
    CountTriangle::from_rows(rows)
}

/// Counts permutations of `[n]` whose fixed points all lie among the first `i`
/// items, by listing all `n!` permutations.
pub fn fixpoint_prefix_count_bruteforce(n: usize, i: usize) -> Result<BigUint, CombinatoricsError> {
    if n == 0 {
        return Err(CombinatoricsError::ZeroSize);
    }
    if n > FIXPOINT_BRUTEFORCE_CAP {
        return Err(CombinatoricsError::TooLarge {
            n,
            cap: FIXPOINT_BRUTEFORCE_CAP,
        });
    }
    if i == 0 || i > n {
        return Err(CombinatoricsError::IndexOutOfRange { n, i });
    }
    let mut count = 0u64;
    for_each_permutation(n, |p| {
        if p.iter().enumerate().all(|(k, &v)| k != v || k < i) {
            count += 1;
        }
    });
    Ok(BigUint::from(count))
}

/// `a(n) = (n+1)! - d(n+1) - d(n)`.
pub fn a_exact(n: usize) -> Result<BigUint, CombinatoricsError> {
    if n == 0 {
        return Err(CombinatoricsError::ZeroSize);
    }
    let d = derangement_sequence(n + 1);
    Ok(factorial(n + 1) - &d[n + 1] - &d[n])
}

/// Row sums `a(1), …, a(n_max)` of the `a(n, i)` triangle.
pub fn a_row_sums(n_max: usize) -> Result<Vec<BigUint>, CombinatoricsError> {
    let t = d_triangle(n_max)?;
    Ok((1..=n_max).map(|n| t.row_sum(n)).collect())
}

/// Ranking's exact expected size on MonotoneG(n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactRho {
    pub n: usize,
    #[serde(serialize_with = "crate::serde_big::uint")]
    pub a_n: BigUint,
    /// `a(n) / n!`.
    #[serde(serialize_with = "crate::serde_big::rational")]
    pub rho: BigRational,
    /// `rho - ((1 - 1/e) n + 1 - 2/e)` to 50 decimal places (truncated).
    pub nu: String,
    pub nu_f64: f64,
    #[serde(skip)]
    pub nu_enclosure: Interval,
}

impl ExactRho {
    /// Decides `|nu(n)| < 1/n!` exactly on the enclosure of `nu`.
    pub fn within_factorial_bound(&self) -> bool {
        let bound = BigRational::new(BigInt::one(), factorial(self.n).into());
        self.nu_enclosure.abs_strictly_below(&bound)
    }
}

pub fn rho_ranking_monotone(n: usize) -> Result<ExactRho, CombinatoricsError> {
    let a_n = a_exact(n)?;
    let rho = BigRational::new(a_n.clone().into(), factorial(n).into());
    // (1 - 1/e) n + 1 - 2/e = (n + 1) - (n + 2)/e
    let baseline = Interval::integer(n as i64 + 1)
        .sub(&Interval::inv_e().scale(&BigRational::from_integer((n as i64 + 2).into())));
    let nu_enclosure = Interval::point(rho.clone()).sub(&baseline);
    Ok(ExactRho {
        n,
        a_n,
        rho,
        nu: decimal(&nu_enclosure.midpoint(), 50),
        nu_f64: nu_enclosure.to_f64(),
        nu_enclosure,
    })
}

/// `|d(n) - n!/e| < 1/2`, decided on an exact enclosure.
pub fn derangement_rounds_from_factorial_over_e(n: usize) -> bool {
    let target = Interval::inv_e().scale(&BigRational::from_integer(factorial(n).into()));
    let d = BigRational::from_integer(derangements(n).into());
    target.within(&d, &BigRational::new(1.into(), 2.into()))
}

/// Maps `(pi, i)` with `pi` over `n` items and `i` in `0..=n` to a
/// permutation over `n + 1` items. The new item `n` is appended when `i == n`;
/// otherwise it takes the location item `i` held and item `i` moves to the
/// last location.
pub fn bijection_b(pi: &Permutation, i: usize) -> Result<Permutation, CombinatoricsError> {
    let n = pi.len();
    if i > n {
        return Err(CombinatoricsError::IndexOutOfRange { n: n + 1, i: i + 1 });
    }
    let mut items = pi.items().to_vec();
    items.push(n);
    if i < n {
        let location = pi.rank_of(i);
        items.swap(location, n);
    }
    Ok(Permutation::from_items(items).expect("swap of a permutation"))
}

/// Inverse of [`bijection_b`]: recovers `(pi, i)` by locating item `n`.
pub fn bijection_b_inverse(
    pi_next: &Permutation,
) -> Result<(Permutation, usize), CombinatoricsError> {
    if pi_next.is_empty() {
        return Err(CombinatoricsError::ZeroSize);
    }
    let n = pi_next.len() - 1;
    let mut items = pi_next.items().to_vec();
    let location = pi_next.rank_of(n);
    let i = if location == n {
        n
    } else {
        let moved = items[n];
        items[location] = moved;
        moved
    };
    items.pop();
    let pi = Permutation::from_items(items).expect("inverse swap of a permutation");
    Ok((pi, i))
}

/// Exhaustive audit of [`bijection_b`] for one `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BijectionAudit {
    pub n: usize,
    pub inputs: u64,
    pub distinct_images: u64,
    pub round_trips: bool,
    /// Inputs violating "last item unmatched on MonotoneG(n+1) iff `u_i` is
    /// matched on MonotoneG(n)" (with `u_n` taken as unmatched).
    pub case_failures: u64,
    /// Permutations of `n + 1` items leaving the last-ranked item unmatched.
    pub last_unmatched: u64,
}

impl BijectionAudit {
    pub fn is_bijective(&self) -> bool {
        let total = factorial(self.n + 1);
        self.round_trips
            && BigUint::from(self.inputs) == total
            && BigUint::from(self.distinct_images) == total
    }
}

pub fn audit_bijection(n: usize) -> Result<BijectionAudit, CombinatoricsError> {
    if n == 0 || n > FIXPOINT_BRUTEFORCE_CAP {
        return Err(CombinatoricsError::TooLarge {
            n,
            cap: FIXPOINT_BRUTEFORCE_CAP,
        });
    }
    let small = BipartiteGraph::monotone(n).expect("n >= 1");
    let large = BipartiteGraph::monotone(n + 1).expect("n >= 1");
    let total = (1..=n + 1).product::<usize>();
    let mut image_seen = vec![false; total];
    let mut inputs = 0u64;
    let mut round_trips = true;
    let mut case_failures = 0u64;
    for_each_permutation(n, |p| {
        let pi = Permutation::from_items(p.to_vec()).expect("enumerated permutation");
        let run = run_ranking(&small, &pi).expect("lengths agree");
        for i in 0..=n {
            inputs += 1;
            let image = bijection_b(&pi, i).expect("i <= n");
            image_seen[lehmer_index(image.items())] = true;
            if bijection_b_inverse(&image).ok() != Some((pi.clone(), i)) {
                round_trips = false;
            }
            let last = image.item_at(n);
            let last_unmatched = !run_ranking(&large, &image)
                .expect("lengths agree")
                .matching()
                .is_offline_matched(last);
            let u_i_matched = i < n && run.matching().is_online_matched(i);
            if last_unmatched != u_i_matched {
                case_failures += 1;
            }
        }
    });
    // Independent count over Π_{n+1}, split by first item.
    let last_unmatched: u64 = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut count = 0u64;
            for_each_permutation_starting_with(n + 1, first, |p| {
                let pi = Permutation::from_items(p.to_vec()).expect("enumerated permutation");
                let run = run_ranking(&large, &pi).expect("lengths agree");
                if !run.matching().is_offline_matched(pi.item_at(n)) {
                    count += 1;
                }
            });
            count
        })
        .sum();
    Ok(BijectionAudit {
        n,
        inputs,
        distinct_images: image_seen.iter().filter(|&&s| s).count() as u64,
        round_trips,
        case_failures,
        last_unmatched,
    })
}

/// Rank of a permutation of `0..k` in lexicographic order.
fn lehmer_index(items: &[usize]) -> usize {
    let k = items.len();
    let mut index = 0;
    for (pos, &v) in items.iter().enumerate() {
        let smaller_later = items[pos + 1..].iter().filter(|&&w| w < v).count();
        index = index * (k - pos) + smaller_later;
    }
    index
}
