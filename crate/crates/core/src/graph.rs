//! Bipartite graphs with online arrival order.
//!
//! Online vertices `u_0, …, u_{n-1}` arrive in index order; `neighbors(j)` is
//! the sorted, deduplicated set of offline vertices adjacent to `u_j`. All
//! indices are 0-based in memory. The JSON fixture format uses 1-based
//! indices: `{"n": 3, "adjacency": [[1,2,3],[2,3],[3]]}`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::IntegralMatching;
use crate::permutation::Permutation;
use crate::rng::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph size must be at least 1")]
    EmptyGraph,
    #[error("expected {expected} adjacency lists, found {found}")]
    AdjacencyLength { expected: usize, found: usize },
    #[error("online vertex {online} lists offline vertex {offline}, outside 1..={n}")]
    NeighborOutOfRange {
        online: usize,
        offline: usize,
        n: usize,
    },
    #[error("graph has no perfect matching (maximum matching {max_matching} < {n})")]
    NotPerfect { max_matching: usize, n: usize },
    #[error("matching pairs u{online} with v{offline}, which is not an edge")]
    NotAnEdge { online: usize, offline: usize },
    #[error("matching uses {side} vertex {index} twice")]
    Reused { side: &'static str, index: usize },
    #[error("vertex index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct BipartiteGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

/// On-disk representation with 1-based offline indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub adjacency: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph from 0-based neighbor lists; lists are sorted and
    /// deduplicated.
    pub fn new(n: usize, adjacency: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        if adjacency.len() != n {
            return Err(GraphError::AdjacencyLength {
                expected: n,
                found: adjacency.len(),
            });
        }
        let mut adjacency = adjacency;
        for (online, list) in adjacency.iter_mut().enumerate() {
            if let Some(&offline) = list.iter().find(|&&v| v >= n) {
                return Err(GraphError::NeighborOutOfRange {
                    online: online + 1,
                    offline: offline + 1,
                    n,
                });
            }
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n, adjacency })
    }

    /// MonotoneG: `u_j` is adjacent to `v_j, …, v_{n-1}`.
    pub fn monotone(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).map(|j| (j..n).collect()).collect())
    }

    /// Complete bipartite graph `K_{n,n}`.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).map(|_| (0..n).collect()).collect())
    }

    /// Graph from the hard distribution with hidden permutation `tau`:
    /// `u_j` is adjacent to `{tau(j), …, tau(n-1)}`, where `tau(j)` is
    /// `tau.item_at(j)`.
    pub fn nested_by(tau: &Permutation) -> Result<Self, GraphError> {
        let items = tau.items();
        let n = items.len();
        Self::new(n, (0..n).map(|j| items[j..].to_vec()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, online: usize) -> &[usize] {
        &self.adjacency[online]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn has_edge(&self, online: usize, offline: usize) -> bool {
        online < self.n && self.adjacency[online].binary_search(&offline).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// `true` iff this is exactly MonotoneG of its size.
    pub fn is_monotone(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(j, list)| list.len() == self.n - j && list.first() == Some(&j))
    }

    /// `true` iff every diagonal edge `(u_j, v_j)` is present.
    pub fn has_diagonal(&self) -> bool {
        (0..self.n).all(|j| self.has_edge(j, j))
    }

    /// Offline-to-online adjacency.
    pub fn offline_neighbors(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.n];
        for (j, list) in self.adjacency.iter().enumerate() {
            for &i in list {
                rev[i].push(j);
            }
        }
        rev
    }

    /// Copy with offline vertex `v` renamed to `relabel[v]`.
    pub fn relabel_offline(&self, relabel: &Permutation) -> Result<Self, GraphError> {
        if relabel.len() != self.n {
            return Err(GraphError::AdjacencyLength {
                expected: self.n,
                found: relabel.len(),
            });
        }
        Self::new(
            self.n,
            self.adjacency
                .iter()
                .map(|list| list.iter().map(|&v| relabel.rank_of(v)).collect())
                .collect(),
        )
    }

    /// A maximum matching via augmenting paths (Kuhn's algorithm).
    pub fn maximum_matching(&self) -> IntegralMatching {
        let n = self.n;
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut visited = vec![0usize; n];
        for (stamp, root) in (1..).zip(0..n) {
            augment(&self.adjacency, root, stamp, &mut visited, &mut owner);
        }
        let mut matching = IntegralMatching::empty(n);
        for (offline, online) in owner.iter().enumerate() {
            if let Some(online) = *online {
                matching
                    .insert(online, offline)
                    .expect("augmenting paths keep a matching");
            }
        }
        matching
    }

    pub fn max_matching_size(&self) -> usize {
        self.maximum_matching().size()
    }

    /// Certifies the graph has a perfect matching and returns one.
    pub fn certify_perfect(&self) -> Result<IntegralMatching, GraphError> {
        let matching = self.maximum_matching();
        if matching.size() == self.n {
            Ok(matching)
        } else {
            Err(GraphError::NotPerfect {
                max_matching: matching.size(),
                n: self.n,
            })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Iterative DFS for an augmenting path from online vertex `root`.
fn augment(
    adjacency: &[Vec<usize>],
    root: usize,
    stamp: usize,
    visited: &mut [usize],
    owner: &mut [Option<usize>],
) -> bool {
    // Stack of (online vertex, index of next neighbor to try, offline vertex
    // through which this online vertex was reached).
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(root, 0, None)];
    while let Some(top) = stack.last_mut() {
        let Some(&v) = adjacency[top.0].get(top.1) else {
            stack.pop();
            continue;
        };
        top.1 += 1;
        if visited[v] == stamp {
            continue;
        }
        visited[v] = stamp;
        match owner[v] {
            None => {
                // Flip the path: each online vertex on the stack takes the
                // offline vertex that led to its successor.
                let mut target = v;
                while let Some((w, _, via)) = stack.pop() {
                    owner[target] = Some(w);
                    match via {
                        Some(prev) => target = prev,
                        None => break,
                    }
                }
                return true;
            }
            Some(w) => stack.push((w, 0, Some(v))),
        }
    }
    false
}

impl TryFrom<GraphFile> for BipartiteGraph {
    type Error = String;

    fn try_from(file: GraphFile) -> Result<Self, Self::Error> {
        let mut adjacency = Vec::with_capacity(file.adjacency.len());
        for (j, list) in file.adjacency.into_iter().enumerate() {
            let mut zero_based = Vec::with_capacity(list.len());
            for v in list {
                if v == 0 || v > file.n {
                    return Err(GraphError::NeighborOutOfRange {
                        online: j + 1,
                        offline: v,
                        n: file.n,
                    }
                    .to_string());
                }
                zero_based.push(v - 1);
            }
            adjacency.push(zero_based);
        }
        Self::new(file.n, adjacency).map_err(|e| e.to_string())
    }
}

impl From<BipartiteGraph> for GraphFile {
    fn from(g: BipartiteGraph) -> Self {
        GraphFile {
            n: g.n,
            adjacency: g
                .adjacency
                .into_iter()
                .map(|list| list.into_iter().map(|v| v + 1).collect())
                .collect(),
        }
    }
}

/// MonotoneG of size `n`.
pub fn make_monotone_graph(n: usize) -> Result<BipartiteGraph, GraphError> {
    BipartiteGraph::monotone(n)
}

/// Draws a graph from the hard distribution: a uniform hidden permutation
/// `tau` (seeded Fisher-Yates) and `N(u_j) = {tau(j), …, tau(n-1)}`.
pub fn sample_dn(n: usize, seed: u64) -> Result<(BipartiteGraph, Permutation), GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let tau = Permutation::random(n, &mut rng_from_seed(seed));
    let graph = BipartiteGraph::nested_by(&tau)?;
    Ok((graph, tau))
}

/// Each edge present independently with probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<BipartiteGraph, GraphError> {
    random_with(n, seed, |_, _, rng| rng.gen_bool(p))
}

/// Diagonal `(u_j, v_j)` always present, every other edge with probability `p`.
pub fn random_diagonal_graph(n: usize, p: f64, seed: u64) -> Result<BipartiteGraph, GraphError> {
    random_with(n, seed, |j, i, rng| i == j || rng.gen_bool(p))
}

/// Diagonal always present, forward edges `(u_j, v_i)`, `i > j`, with
/// probability `p`, no backward edges.
pub fn random_forward_graph(n: usize, p: f64, seed: u64) -> Result<BipartiteGraph, GraphError> {
    random_with(n, seed, |j, i, rng| i == j || (i > j && rng.gen_bool(p)))
}

fn random_with(
    n: usize,
    seed: u64,
    mut keep: impl FnMut(usize, usize, &mut crate::rng::ProjectRng) -> bool,
) -> Result<BipartiteGraph, GraphError> {
    let mut rng = rng_from_seed(seed);
    let adjacency = (0..n)
        .map(|j| (0..n).filter(|&i| keep(j, i, &mut rng)).collect())
        .collect();
    BipartiteGraph::new(n, adjacency)
}

pub fn max_matching_size(g: &BipartiteGraph) -> usize {
    g.max_matching_size()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_based(g: &BipartiteGraph) -> Vec<Vec<usize>> {
        GraphFile::from(g.clone()).adjacency
    }

    #[test]
    fn monotone_small_instances() {
        let g1 = make_monotone_graph(1).unwrap();
        assert_eq!(one_based(&g1), vec![vec![1]]);
        let g3 = make_monotone_graph(3).unwrap();
        assert_eq!(one_based(&g3), vec![vec![1, 2, 3], vec![2, 3], vec![3]]);
        assert_eq!(g3.max_matching_size(), 3);
        assert!(g3.is_monotone());
        assert_eq!(make_monotone_graph(4).unwrap().max_matching_size(), 4);
    }

    #[test]
    fn zero_size_rejected() {
        assert_eq!(make_monotone_graph(0), Err(GraphError::EmptyGraph));
        assert_eq!(sample_dn(0, 1).unwrap_err(), GraphError::EmptyGraph);
    }

    #[test]
    fn shared_single_neighbor() {
        let g = BipartiteGraph::new(2, vec![vec![0], vec![0]]).unwrap();
        assert_eq!(g.max_matching_size(), 1);
        assert!(g.certify_perfect().is_err());
    }

    #[test]
    fn adjacency_is_normalized_and_checked() {
        let g = BipartiteGraph::new(3, vec![vec![2, 0, 2], vec![], vec![1]]).unwrap();
        assert_eq!(g.neighbors(0), &[0, 2]);
        assert!(matches!(
            BipartiteGraph::new(2, vec![vec![2], vec![]]),
            Err(GraphError::NeighborOutOfRange { offline: 3, .. })
        ));
        assert!(matches!(
            BipartiteGraph::new(2, vec![vec![0]]),
            Err(GraphError::AdjacencyLength { .. })
        ));
    }

    #[test]
    fn identity_tau_reproduces_monotone() {
        let g = BipartiteGraph::nested_by(&Permutation::identity(2)).unwrap();
        assert_eq!(one_based(&g), vec![vec![1, 2], vec![2]]);
    }

    #[test]
    fn json_fixture_format_is_one_based() {
        let g = make_monotone_graph(3).unwrap();
        assert_eq!(g.to_json(), r#"{"n":3,"adjacency":[[1,2,3],[2,3],[3]]}"#);
        let back = BipartiteGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        assert!(BipartiteGraph::from_json(r#"{"n":2,"adjacency":[[0],[1]]}"#).is_err());
        assert!(BipartiteGraph::from_json(r#"{"n":2,"adjacency":[[3],[1]]}"#).is_err());
    }

    #[test]
    fn kuhn_needs_augmenting_paths() {
        // Greedy in index order would pair u0-v0 and strand u1.
        let g = BipartiteGraph::new(3, vec![vec![0, 1], vec![0], vec![1, 2]]).unwrap();
        let m = g.certify_perfect().unwrap();
        m.validate_against(&g).unwrap();
        assert_eq!(m.size(), 3);
    }

    #[test]
    fn distinct_seeds_give_distinct_tau() {
        let (ga, ta) = sample_dn(5, 1).unwrap();
        let (gb, tb) = sample_dn(5, 2).unwrap();
        assert_ne!(ta, tb);
        assert_eq!(ga.max_matching_size(), 5);
        assert_eq!(gb.max_matching_size(), 5);
        assert_eq!(sample_dn(5, 1).unwrap(), (ga, ta));
    }

    /// Brute-force maximum matching over all subsets of edges choices.
    fn brute_max_matching(g: &BipartiteGraph) -> usize {
        fn go(g: &BipartiteGraph, j: usize, used: &mut Vec<bool>) -> usize {
            if j == g.n() {
                return 0;
            }
            let mut best = go(g, j + 1, used);
            for &v in g.neighbors(j) {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(g, j + 1, used));
                    used[v] = false;
                }
            }
            best
        }
        go(g, 0, &mut vec![false; g.n()])
    }

    fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
        (1usize..7).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(0..n, 0..n + 1), n)
                .prop_map(move |adj| BipartiteGraph::new(n, adj).unwrap())
        })
    }

    proptest! {
        #[test]
        fn kuhn_matches_brute_force(g in arb_graph()) {
            let m = g.maximum_matching();
            m.validate_against(&g).unwrap();
            prop_assert_eq!(m.size(), brute_max_matching(&g));
        }

        #[test]
        fn dn_samples_are_nested_and_perfect(n in 1usize..=50, seed in any::<u64>()) {
            let (g, tau) = sample_dn(n, seed).unwrap();
            for j in 0..n {
                prop_assert_eq!(g.neighbors(j).len(), n - j);
                prop_assert!(g.has_edge(j, tau.item_at(j)));
                if j + 1 < n {
                    let next = g.neighbors(j + 1);
                    prop_assert!(next.iter().all(|v| g.has_edge(j, *v)));
                    prop_assert!(!g.has_edge(j + 1, tau.item_at(j)));
                }
            }
            prop_assert_eq!(g.max_matching_size(), n);
            // Relabeling offline vertices by tau^{-1} recovers MonotoneG.
            prop_assert!(g.relabel_offline(&tau).unwrap().is_monotone());
        }
    }

    #[test]
    fn dn_certified_for_many_seeds() {
        for n in 1..=50 {
            for seed in 0..100 {
                let (g, _) = sample_dn(n, seed).unwrap();
                assert_eq!(g.max_matching_size(), n, "n={n} seed={seed}");
            }
        }
    }
}
