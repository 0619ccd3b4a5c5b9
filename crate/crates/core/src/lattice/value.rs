use alloc::collections::BTreeSet;
use core::fmt;

/// Default size bound for value sets before they collapse to `Top`.
pub const DEFAULT_VALUE_BOUND: usize = 64;

/// An abstract scalar: an integer or an opaque thread-id token.
///
/// The derived order puts all integers before all tokens, which is the
/// canonical serialization order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsVal {
    Int(i64),
    Tid(u32),
}

impl fmt::Debug for AbsVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsVal::Int(i) => write!(f, "{i}"),
            AbsVal::Tid(t) => write!(f, "tid#{t}"),
        }
    }
}

/// Bounded value sets with a `Top` element.
///
/// `Set` never holds more than the bound `k` passed to the joining
/// operations; a join that would exceed it yields `Top`. The empty set is
/// bottom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueD {
    Top,
    Set(BTreeSet<AbsVal>),
}

impl Default for ValueD {
    fn default() -> Self {
        ValueD::bottom()
    }
}

impl ValueD {
    pub fn bottom() -> Self {
        ValueD::Set(BTreeSet::new())
    }

    pub fn top() -> Self {
        ValueD::Top
    }

    pub fn int(i: i64) -> Self {
        Self::singleton(AbsVal::Int(i))
    }

    pub fn singleton(v: AbsVal) -> Self {
        ValueD::Set(BTreeSet::from([v]))
    }

    /// Builds a set of integers, collapsing to `Top` above `k` elements.
    pub fn ints(values: impl IntoIterator<Item = i64>, k: usize) -> Self {
        Self::from_vals(values.into_iter().map(AbsVal::Int), k)
    }

    pub fn from_vals(values: impl IntoIterator<Item = AbsVal>, k: usize) -> Self {
        let set: BTreeSet<AbsVal> = values.into_iter().collect();
        if set.len() > k {
            ValueD::Top
        } else {
            ValueD::Set(set)
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, ValueD::Set(s) if s.is_empty())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, ValueD::Top)
    }

    /// The finite element set, or `None` for `Top`.
    pub fn elements(&self) -> Option<&BTreeSet<AbsVal>> {
        match self {
            ValueD::Top => None,
            ValueD::Set(s) => Some(s),
        }
    }

    /// The single element, if this is a singleton set.
    pub fn as_singleton(&self) -> Option<AbsVal> {
        match self {
            ValueD::Set(s) if s.len() == 1 => s.iter().next().copied(),
            _ => None,
        }
    }

    /// Membership in the concretization.
    pub fn concretizes(&self, v: &AbsVal) -> bool {
        match self {
            ValueD::Top => true,
            ValueD::Set(s) => s.contains(v),
        }
    }

    pub fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (_, ValueD::Top) => true,
            (ValueD::Top, ValueD::Set(_)) => false,
            (ValueD::Set(a), ValueD::Set(b)) => a.is_subset(b),
        }
    }

    pub fn join(&self, other: &Self, k: usize) -> Self {
        let mut out = self.clone();
        out.join_assign(other, k);
        out
    }

    /// In-place join; returns whether `self` changed.
    pub fn join_assign(&mut self, other: &Self, k: usize) -> bool {
        match (&mut *self, other) {
            (ValueD::Top, _) => false,
            (_, ValueD::Top) => {
                *self = ValueD::Top;
                true
            }
            (ValueD::Set(a), ValueD::Set(b)) => {
                let before = a.len();
                a.extend(b.iter().copied());
                if a.len() > k {
                    *self = ValueD::Top;
                    true
                } else {
                    a.len() != before
                }
            }
        }
    }

    pub fn meet(&self, other: &Self) -> Self {
        match (self, other) {
            (ValueD::Top, x) | (x, ValueD::Top) => x.clone(),
            (ValueD::Set(a), ValueD::Set(b)) => ValueD::Set(a.intersection(b).copied().collect()),
        }
    }
}

impl fmt::Debug for ValueD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueD::Top => write!(f, "⊤"),
            ValueD::Set(s) => f.debug_set().entries(s.iter()).finish(),
        }
    }
}

impl fmt::Display for ValueD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: usize = DEFAULT_VALUE_BOUND;

    #[test]
    fn join_of_singletons() {
        assert_eq!(ValueD::int(5).join(&ValueD::int(6), K), ValueD::ints([5, 6], K));
    }

    #[test]
    fn bottom_is_neutral() {
        let x = ValueD::ints([1, 2, 3], K);
        assert_eq!(x.join(&ValueD::bottom(), K), x);
        assert_eq!(ValueD::bottom().join(&x, K), x);
    }

    #[test]
    fn exceeding_bound_collapses_to_top() {
        let mut acc = ValueD::bottom();
        for i in 0..K as i64 {
            acc.join_assign(&ValueD::int(i), K);
        }
        assert_eq!(acc.elements().map(|s| s.len()), Some(K));
        assert!(acc.join_assign(&ValueD::int(K as i64), K));
        assert!(acc.is_top());
    }

    #[test]
    fn order_basics() {
        assert!(ValueD::int(5).leq(&ValueD::ints([5, 6], K)));
        assert!(!ValueD::Top.leq(&ValueD::int(1)));
        assert!(ValueD::bottom().leq(&ValueD::bottom()));
    }

    #[test]
    fn meet_basics() {
        assert_eq!(ValueD::ints([17, 42], K).meet(&ValueD::int(17)), ValueD::int(17));
        let x = ValueD::ints([3, 4], K);
        assert_eq!(ValueD::Top.meet(&x), x);
        assert_eq!(x.meet(&ValueD::Top), x);
    }

    #[test]
    fn tokens_sort_after_ints() {
        let v = ValueD::from_vals([AbsVal::Tid(0), AbsVal::Int(9), AbsVal::Int(-1)], K);
        let order: alloc::vec::Vec<_> = v.elements().unwrap().iter().copied().collect();
        assert_eq!(order, [AbsVal::Int(-1), AbsVal::Int(9), AbsVal::Tid(0)]);
    }
}
