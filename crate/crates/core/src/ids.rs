//! Dense identifiers for program entities and small bit-sets over them.

use core::fmt;
use core::marker::PhantomData;

/// A dense index type usable as a member of an [`IdSet`].
pub trait Idx: Copy + Ord {
    fn new(index: usize) -> Self;
    fn index(self) -> usize;
}

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl Idx for $name {
            #[inline]
            fn new(index: usize) -> Self {
                $name(index as u32)
            }
            #[inline]
            fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// A global variable.
    GlobalId, "g"
);
id_type!(
    /// A local variable. `self` is always `LocalId(0)`.
    LocalId, "x"
);
id_type!(
    /// A mutex, user-declared or the dedicated atomicity mutex of a global.
    MutexId, "m"
);
id_type!(
    /// A program point.
    NodeId, "u"
);
id_type!(
    /// A control-flow edge.
    EdgeId, "e"
);
id_type!(
    /// A thread definition (not a runtime thread id).
    ThreadDefId, "t"
);

/// Maximum number of members in an [`IdSet`].
pub const MAX_SET_MEMBERS: usize = 64;

/// A set of at most 64 dense ids, stored as a bit mask.
///
/// Ordering is by the raw mask, which is total and canonical but carries no
/// lattice meaning.
pub struct IdSet<I> {
    bits: u64,
    _marker: PhantomData<fn() -> I>,
}

/// A set of mutexes.
pub type Lockset = IdSet<MutexId>;
/// A set of globals.
pub type GlobalSet = IdSet<GlobalId>;

impl<I> Clone for IdSet<I> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<I> Copy for IdSet<I> {}
impl<I> PartialEq for IdSet<I> {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}
impl<I> Eq for IdSet<I> {}
impl<I> PartialOrd for IdSet<I> {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<I> Ord for IdSet<I> {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.bits.cmp(&other.bits)
    }
}
impl<I> core::hash::Hash for IdSet<I> {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.bits.hash(state)
    }
}
impl<I> Default for IdSet<I> {
    fn default() -> Self {
        IdSet { bits: 0, _marker: PhantomData }
    }
}

impl<I: Idx> IdSet<I> {
    pub const fn empty() -> Self {
        IdSet { bits: 0, _marker: PhantomData }
    }

    pub const fn from_bits(bits: u64) -> Self {
        IdSet { bits, _marker: PhantomData }
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SET_MEMBERS, "id set limited to {MAX_SET_MEMBERS} members");
        if n == MAX_SET_MEMBERS {
            Self::from_bits(u64::MAX)
        } else {
            Self::from_bits((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: I) -> Self {
        Self::empty().with(i)
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn contains(self, i: I) -> bool {
        self.bits & Self::bit(i) != 0
    }

    pub fn with(self, i: I) -> Self {
        Self::from_bits(self.bits | Self::bit(i))
    }

    pub fn without(self, i: I) -> Self {
        Self::from_bits(self.bits & !Self::bit(i))
    }

    pub fn insert(&mut self, i: I) -> bool {
        let had = self.contains(i);
        self.bits |= Self::bit(i);
        !had
    }

    pub fn remove(&mut self, i: I) -> bool {
        let had = self.contains(i);
        self.bits &= !Self::bit(i);
        had
    }

    pub fn union(self, other: Self) -> Self {
        Self::from_bits(self.bits | other.bits)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self::from_bits(self.bits & other.bits)
    }

    pub fn difference(self, other: Self) -> Self {
        Self::from_bits(self.bits & !other.bits)
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.bits & other.bits == 0
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = I> {
        let mut bits = self.bits;
        core::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(I::new(i))
        })
    }

    fn bit(i: I) -> u64 {
        let ix = i.index();
        assert!(ix < MAX_SET_MEMBERS, "id {ix} exceeds id set capacity");
        1u64 << ix
    }
}

impl<I: Idx> FromIterator<I> for IdSet<I> {
    fn from_iter<T: IntoIterator<Item = I>>(iter: T) -> Self {
        let mut s = Self::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl<I: Idx + fmt::Debug> fmt::Debug for IdSet<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_ops() {
        let a = MutexId(0);
        let b = MutexId(3);
        let s = Lockset::singleton(a).with(b);
        assert!(s.contains(a) && s.contains(b));
        assert_eq!(s.len(), 2);
        assert_eq!(s.without(a), Lockset::singleton(b));
        assert!(Lockset::singleton(a).is_subset(s));
        assert!(Lockset::singleton(a).is_disjoint(Lockset::singleton(b)));
        assert_eq!(s.iter().collect::<alloc::vec::Vec<_>>(), [a, b]);
        assert_eq!(Lockset::full(64).len(), 64);
    }
}
