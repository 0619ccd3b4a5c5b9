use alloc::collections::BTreeSet;
use core::fmt;

use crate::ids::Lockset;

/// An upward-closed family of locksets, kept as its set of minimal elements.
///
/// The empty family is the least element; `{∅}` denotes the full power set
/// and is the greatest. The representation is canonical: no stored element is
/// a subset of another, so equal families compare equal.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MinAntichain {
    elems: BTreeSet<Lockset>,
}

impl MinAntichain {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `{∅}`, the greatest element.
    pub fn full() -> Self {
        Self::singleton(Lockset::empty())
    }

    pub fn singleton(s: Lockset) -> Self {
        MinAntichain { elems: BTreeSet::from([s]) }
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Lockset> + '_ {
        self.elems.iter().copied()
    }

    /// Adds `↑s` to the family. Returns whether the family grew.
    pub fn insert(&mut self, s: Lockset) -> bool {
        if self.elems.iter().any(|e| e.is_subset(s)) {
            return false;
        }
        self.elems.retain(|e| !s.is_subset(*e));
        self.elems.insert(s);
        true
    }

    pub fn with(mut self, s: Lockset) -> Self {
        self.insert(s);
        self
    }

    /// Whether `s` lies in the upward closure.
    pub fn covers(&self, s: Lockset) -> bool {
        self.elems.iter().any(|e| e.is_subset(s))
    }

    pub fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_assign(other);
        out
    }

    pub fn join_assign(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for s in other.iter() {
            changed |= self.insert(s);
        }
        changed
    }

    /// `↑self ⊆ ↑other`.
    pub fn leq(&self, other: &Self) -> bool {
        self.elems.iter().all(|s| other.covers(*s))
    }
}

impl FromIterator<Lockset> for MinAntichain {
    fn from_iter<T: IntoIterator<Item = Lockset>>(iter: T) -> Self {
        let mut out = MinAntichain::empty();
        for s in iter {
            out.insert(s);
        }
        out
    }
}

impl fmt::Debug for MinAntichain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter()).finish()
    }
}
