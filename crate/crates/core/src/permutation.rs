//! Rankings of offline vertices.
//!
//! A [`Permutation`] stores both directions of the bijection: `rank_of(v)` is
//! the position of offline vertex `v` in the ranking and `item_at(r)` is the
//! vertex holding rank `r`. Ranks and vertices are 0-based; rank 0 is the
//! most preferred.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermutationError {
    #[error("value {value} at position {position} is out of range for length {len}")]
    OutOfRange {
        position: usize,
        value: usize,
        len: usize,
    },
    #[error("value {0} appears more than once")]
    Repeated(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    ranks: Vec<usize>,
    items: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            ranks: (0..n).collect(),
            items: (0..n).collect(),
        }
    }

    /// Builds the permutation whose rank order is `items` (`items[r]` is the
    /// vertex with rank `r`).
    pub fn from_items(items: Vec<usize>) -> Result<Self, PermutationError> {
        let ranks = invert(&items)?;
        Ok(Self { ranks, items })
    }

    /// Builds the permutation with `ranks[v]` the rank of vertex `v`.
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self, PermutationError> {
        let items = invert(&ranks)?;
        Ok(Self { ranks, items })
    }

    /// Uniform random permutation via Fisher-Yates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut items: Vec<usize> = (0..n).collect();
        items.shuffle(rng);
        Self::from_items(items).expect("shuffle of 0..n is a permutation")
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn rank_of(&self, vertex: usize) -> usize {
        self.ranks[vertex]
    }

    pub fn item_at(&self, rank: usize) -> usize {
        self.items[rank]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn into_items(self) -> Vec<usize> {
        self.items
    }

    /// The inverse bijection: ranks and items swap roles.
    pub fn inverse(&self) -> Self {
        Self {
            ranks: self.items.clone(),
            items: self.ranks.clone(),
        }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermutationError;

    fn try_from(items: Vec<usize>) -> Result<Self, Self::Error> {
        Self::from_items(items)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.items
    }
}

fn invert(values: &[usize]) -> Result<Vec<usize>, PermutationError> {
    let len = values.len();
    let mut inverse = vec![usize::MAX; len];
    for (position, &value) in values.iter().enumerate() {
        if value >= len {
            return Err(PermutationError::OutOfRange {
                position,
                value,
                len,
            });
        }
        if inverse[value] != usize::MAX {
            return Err(PermutationError::Repeated(value));
        }
        inverse[value] = position;
    }
    Ok(inverse)
}

/// Advances `values` to its lexicographic successor. Returns `false` (leaving
/// `values` sorted ascending) after the last permutation.
pub fn next_permutation(values: &mut [usize]) -> bool {
    let n = values.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && values[i - 1] >= values[i] {
        i -= 1;
    }
    if i == 0 {
        values.reverse();
        return false;
    }
    let mut j = n - 1;
    while values[j] <= values[i - 1] {
        j -= 1;
    }
    values.swap(i - 1, j);
    values[i..].reverse();
    true
}

/// Calls `visit` on every permutation of `0..n` in lexicographic order.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..n).collect();
    loop {
        visit(&items);
        if !next_permutation(&mut items) {
            break;
        }
    }
}

/// Visits every permutation of `0..n` whose first element is `first`, in
/// lexicographic order. Blocks for distinct `first` partition all of `Π_n`.
pub fn for_each_permutation_starting_with(n: usize, first: usize, mut visit: impl FnMut(&[usize])) {
    assert!(first < n);
    let mut items: Vec<usize> = std::iter::once(first)
        .chain((0..n).filter(|&v| v != first))
        .collect();
    loop {
        visit(&items);
        if !next_permutation(&mut items[1..]) {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn rejects_non_bijections() {
        assert_eq!(
            Permutation::from_items(vec![0, 0, 1]),
            Err(PermutationError::Repeated(0))
        );
        assert!(matches!(
            Permutation::from_ranks(vec![0, 3, 1]),
            Err(PermutationError::OutOfRange { value: 3, .. })
        ));
    }

    #[test]
    fn lexicographic_enumeration_counts() {
        let mut seen = HashSet::new();
        let mut prev: Option<Vec<usize>> = None;
        for_each_permutation(5, |p| {
            if let Some(q) = &prev {
                assert!(q.as_slice() < p);
            }
            prev = Some(p.to_vec());
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn blocks_partition_all_permutations() {
        let mut total = 0;
        let mut seen = HashSet::new();
        for first in 0..4 {
            for_each_permutation_starting_with(4, first, |p| {
                assert_eq!(p[0], first);
                seen.insert(p.to_vec());
                total += 1;
            });
        }
        assert_eq!(total, 24);
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn single_element_enumeration() {
        let mut count = 0;
        for_each_permutation(1, |_| count += 1);
        assert_eq!(count, 1);
        for_each_permutation_starting_with(1, 0, |_| count += 1);
        assert_eq!(count, 2);
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let a = Permutation::random(20, &mut rng_from_seed(11));
        let b = Permutation::random(20, &mut rng_from_seed(11));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(seed in any::<u64>(), n in 1usize..40) {
            let p = Permutation::random(n, &mut rng_from_seed(seed));
            prop_assert_eq!(p.inverse().inverse(), p.clone());
            for v in 0..n {
                prop_assert_eq!(p.item_at(p.rank_of(v)), v);
            }
            let q = Permutation::from_ranks(p.ranks().to_vec()).unwrap();
            prop_assert_eq!(q, p);
        }
    }
}
