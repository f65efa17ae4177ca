//! Sets of physical link indices.

use fixedbitset::FixedBitSet;

/// A set of physical link indices backed by a fixed-width bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet(FixedBitSet);

impl EdgeSet {
    pub fn empty(universe: usize) -> Self {
        EdgeSet(FixedBitSet::with_capacity(universe))
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        EdgeSet(bits)
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn insert(&mut self, e: usize) {
        self.0.insert(e);
    }

    pub fn remove(&mut self, e: usize) {
        self.0.set(e, false);
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.contains(e)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    /// Indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        self.0.union_with(&other.0);
    }

    pub fn intersect_with(&mut self, other: &EdgeSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn difference_with(&mut self, other: &EdgeSet) {
        self.0.difference_with(&other.0);
    }

    pub fn complement(&self) -> EdgeSet {
        let mut c = EdgeSet::full(self.universe());
        c.difference_with(self);
        c
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Sum of `weights` over the members, accumulated in index order.
    pub fn weight(&self, weights: &[f64]) -> f64 {
        self.iter().map(|e| weights[e]).sum()
    }
}

impl std::fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
