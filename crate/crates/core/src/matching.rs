//! Integral and fractional matchings.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::graph::{BipartiteGraph, GraphError};
use crate::scalar::{sum, Scalar};

/// A matching stored from both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegralMatching {
    online_to_offline: Vec<Option<usize>>,
    offline_to_online: Vec<Option<usize>>,
    size: usize,
}

impl IntegralMatching {
    pub fn empty(n: usize) -> Self {
        Self {
            online_to_offline: vec![None; n],
            offline_to_online: vec![None; n],
            size: 0,
        }
    }

    /// Adds the pair `(u_online, v_offline)`; both endpoints must be free.
    pub fn insert(&mut self, online: usize, offline: usize) -> Result<(), GraphError> {
        let n = self.online_to_offline.len();
        for index in [online, offline] {
            if index >= n {
                return Err(GraphError::IndexOutOfRange { index, n });
            }
        }
        if self.online_to_offline[online].is_some() {
            return Err(GraphError::Reused {
                side: "online",
                index: online,
            });
        }
        if self.offline_to_online[offline].is_some() {
            return Err(GraphError::Reused {
                side: "offline",
                index: offline,
            });
        }
        self.online_to_offline[online] = Some(offline);
        self.offline_to_online[offline] = Some(online);
        self.size += 1;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.online_to_offline.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn partner_of_online(&self, online: usize) -> Option<usize> {
        self.online_to_offline[online]
    }

    pub fn partner_of_offline(&self, offline: usize) -> Option<usize> {
        self.offline_to_online[offline]
    }

    pub fn is_online_matched(&self, online: usize) -> bool {
        self.online_to_offline[online].is_some()
    }

    pub fn is_offline_matched(&self, offline: usize) -> bool {
        self.offline_to_online[offline].is_some()
    }

    /// Pairs `(online, offline)` in online order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.online_to_offline
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| (j, v)))
    }

    pub fn is_perfect(&self) -> bool {
        self.size == self.n()
    }

    /// Checks every pair is an edge of `g` and the two directions agree.
    pub fn validate_against(&self, g: &BipartiteGraph) -> Result<(), GraphError> {
        if self.n() != g.n() {
            return Err(GraphError::AdjacencyLength {
                expected: g.n(),
                found: self.n(),
            });
        }
        let mut count = 0;
        for (online, offline) in self.pairs() {
            if !g.has_edge(online, offline) {
                return Err(GraphError::NotAnEdge {
                    online: online + 1,
                    offline: offline + 1,
                });
            }
            if self.offline_to_online[offline] != Some(online) {
                return Err(GraphError::Reused {
                    side: "offline",
                    index: offline,
                });
            }
            count += 1;
        }
        let reverse = self.offline_to_online.iter().flatten().count();
        if count != self.size || reverse != self.size {
            return Err(GraphError::Reused {
                side: "online",
                index: 0,
            });
        }
        Ok(())
    }
}

impl Serialize for IntegralMatching {
    /// Serialized as a list of 1-based `[online, offline]` pairs.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.pairs().map(|(j, i)| [j + 1, i + 1]))
    }
}

/// A nonnegative edge weighting with per-vertex loads.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalMatching<S: Scalar> {
    weights: BTreeMap<(usize, usize), S>,
    loads_offline: Vec<S>,
    loads_online: Vec<S>,
}

impl<S: Scalar> FractionalMatching<S> {
    pub fn empty(n: usize) -> Self {
        Self {
            weights: BTreeMap::new(),
            loads_offline: vec![S::zero(); n],
            loads_online: vec![S::zero(); n],
        }
    }

    /// Adds `amount` to the weight of edge `(online, offline)`, updating both
    /// loads.
    pub fn add_weight(&mut self, online: usize, offline: usize, amount: S) {
        self.loads_offline[offline] = self.loads_offline[offline].clone() + amount.clone();
        self.loads_online[online] = self.loads_online[online].clone() + amount.clone();
        let entry = self
            .weights
            .entry((online, offline))
            .or_insert_with(S::zero);
        *entry = entry.clone() + amount;
    }

    pub fn n(&self) -> usize {
        self.loads_offline.len()
    }

    pub fn weight(&self, online: usize, offline: usize) -> S {
        self.weights
            .get(&(online, offline))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    pub fn weights(&self) -> &BTreeMap<(usize, usize), S> {
        &self.weights
    }

    pub fn loads_offline(&self) -> &[S] {
        &self.loads_offline
    }

    pub fn loads_online(&self) -> &[S] {
        &self.loads_online
    }

    /// Size computed from the edge weights.
    pub fn size(&self) -> S {
        sum(self.weights.values())
    }
}

/// A violated fractional-matching constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    OfflineLoadExceedsOne {
        offline: usize,
        load: f64,
    },
    OnlineLoadExceedsOne {
        online: usize,
        load: f64,
    },
    NegativeWeight {
        online: usize,
        offline: usize,
        weight: f64,
    },
    WeightOnNonEdge {
        online: usize,
        offline: usize,
    },
    LoadMismatch {
        side: &'static str,
        index: usize,
    },
    SizeMismatch {
        by_weights: f64,
        by_offline: f64,
        by_online: f64,
    },
    WrongSize {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OfflineLoadExceedsOne { offline, load } => {
                write!(f, "offline load exceeds one: v{} has load {load}", offline + 1)
            }
            Violation::OnlineLoadExceedsOne { online, load } => {
                write!(f, "online load exceeds one: u{} has load {load}", online + 1)
            }
            Violation::NegativeWeight {
                online,
                offline,
                weight,
            } => write!(
                f,
                "negative weight {weight} on (u{}, v{})",
                online + 1,
                offline + 1
            ),
            Violation::WeightOnNonEdge { online, offline } => {
                write!(f, "weight on non-edge (u{}, v{})", online + 1, offline + 1)
            }
            Violation::LoadMismatch { side, index } => {
                write!(f, "{side} load of vertex {} is not its weight sum", index + 1)
            }
            Violation::SizeMismatch {
                by_weights,
                by_offline,
                by_online,
            } => write!(
                f,
                "size disagrees: weights {by_weights}, offline loads {by_offline}, online loads {by_online}"
            ),
            Violation::WrongSize { expected, found } => {
                write!(f, "matching has {found} vertices per side, graph has {expected}")
            }
        }
    }
}

/// Result of [`validate_fractional`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalValidation {
    pub violations: Vec<Violation>,
    pub size_by_weights: f64,
    pub size_by_offline: f64,
    pub size_by_online: f64,
}

impl FractionalValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks capacity, support and nonnegativity constraints and recomputes the
/// size from weights, offline loads and online loads.
pub fn validate_fractional<S: Scalar>(
    g: &BipartiteGraph,
    f: &FractionalMatching<S>,
) -> FractionalValidation {
    let mut violations = Vec::new();
    if f.n() != g.n() {
        violations.push(Violation::WrongSize {
            expected: g.n(),
            found: f.n(),
        });
        return FractionalValidation {
            violations,
            size_by_weights: f64::NAN,
            size_by_offline: f64::NAN,
            size_by_online: f64::NAN,
        };
    }
    let n = g.n();
    let one = S::one();
    let mut row = vec![S::zero(); n];
    let mut col = vec![S::zero(); n];
    for (&(online, offline), w) in f.weights() {
        if !g.has_edge(online, offline) {
            violations.push(Violation::WeightOnNonEdge { online, offline });
        }
        if w.is_negative() && !(-w.clone()).close_to(&S::zero()) {
            violations.push(Violation::NegativeWeight {
                online,
                offline,
                weight: w.to_f64(),
            });
        }
        row[online] = row[online].clone() + w.clone();
        col[offline] = col[offline].clone() + w.clone();
    }
    for (i, load) in f.loads_offline().iter().enumerate() {
        if load.exceeds(&one) {
            violations.push(Violation::OfflineLoadExceedsOne {
                offline: i,
                load: load.to_f64(),
            });
        }
        if !load.close_to(&col[i]) {
            violations.push(Violation::LoadMismatch {
                side: "offline",
                index: i,
            });
        }
    }
    for (j, load) in f.loads_online().iter().enumerate() {
        if load.exceeds(&one) {
            violations.push(Violation::OnlineLoadExceedsOne {
                online: j,
                load: load.to_f64(),
            });
        }
        if !load.close_to(&row[j]) {
            violations.push(Violation::LoadMismatch {
                side: "online",
                index: j,
            });
        }
    }
    let by_weights = f.size();
    let by_offline = sum(f.loads_offline());
    let by_online = sum(f.loads_online());
    if !by_weights.close_to(&by_offline) || !by_weights.close_to(&by_online) {
        violations.push(Violation::SizeMismatch {
            by_weights: by_weights.to_f64(),
            by_offline: by_offline.to_f64(),
            by_online: by_online.to_f64(),
        });
    }
    FractionalValidation {
        violations,
        size_by_weights: by_weights.to_f64(),
        size_by_offline: by_offline.to_f64(),
        size_by_online: by_online.to_f64(),
    }
}
