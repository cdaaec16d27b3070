use std::fmt;

use fixedbitset::FixedBitSet;

use crate::model::GoodId;

/// A set of goods, stored as a fixed-width bitset over the instance's `m` goods.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bundle {
    bits: FixedBitSet,
}

impl Bundle {
    pub fn empty(m: usize) -> Self {
        Bundle {
            bits: FixedBitSet::with_capacity(m),
        }
    }

    pub fn full(m: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(m);
        bits.insert_range(..);
        Bundle { bits }
    }

    pub fn from_goods(m: usize, goods: impl IntoIterator<Item = GoodId>) -> Self {
        let mut b = Bundle::empty(m);
        for g in goods {
            b.insert(g);
        }
        b
    }

    /// Width of the underlying bitset (the instance's good count).
    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, g: GoodId) {
        self.bits.insert(g.index());
    }

    pub fn remove(&mut self, g: GoodId) {
        self.bits.set(g.index(), false);
    }

    pub fn contains(&self, g: GoodId) -> bool {
        self.bits.contains(g.index())
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = GoodId> + '_ {
        self.bits.ones().map(GoodId)
    }

    pub fn to_vec(&self) -> Vec<GoodId> {
        self.iter().collect()
    }

    /// Smallest good id in the bundle.
    pub fn min_good(&self) -> Option<GoodId> {
        self.bits.minimum().map(GoodId)
    }

    pub fn union_with(&mut self, other: &Bundle) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &Bundle) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &Bundle) {
        self.bits.difference_with(&other.bits);
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        let mut b = self.clone();
        b.union_with(other);
        b
    }

    pub fn intersection(&self, other: &Bundle) -> Bundle {
        let mut b = self.clone();
        b.intersect_with(other);
        b
    }

    pub fn difference(&self, other: &Bundle) -> Bundle {
        let mut b = self.clone();
        b.difference_with(other);
        b
    }

    pub fn without(&self, g: GoodId) -> Bundle {
        let mut b = self.clone();
        b.remove(g);
        b
    }

    pub fn with(&self, g: GoodId) -> Bundle {
        let mut b = self.clone();
        b.insert(g);
        b
    }

    pub fn is_subset(&self, other: &Bundle) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &Bundle) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn intersects(&self, other: &Bundle) -> bool {
        !self.is_disjoint(other)
    }

    /// Iterate `self ∩ other` without allocating.
    pub fn iter_intersection<'a>(&'a self, other: &'a Bundle) -> impl Iterator<Item = GoodId> + 'a {
        self.bits.intersection(&other.bits).map(GoodId)
    }
}

impl fmt::Debug for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let a = Bundle::from_goods(8, [0, 2, 5].map(GoodId));
        let b = Bundle::from_goods(8, [2, 3].map(GoodId));
        assert_eq!(a.union(&b).to_vec(), [0, 2, 3, 5].map(GoodId));
        assert_eq!(a.intersection(&b).to_vec(), vec![GoodId(2)]);
        assert_eq!(a.difference(&b).to_vec(), vec![GoodId(0), GoodId(5)]);
        assert!(!a.is_disjoint(&b));
        assert!(a.intersection(&b).is_subset(&a));
        assert_eq!(a.min_good(), Some(GoodId(0)));
        assert_eq!(Bundle::empty(8).min_good(), None);
        assert_eq!(Bundle::full(3).len(), 3);
    }
}
