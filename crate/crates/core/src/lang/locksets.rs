use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::cfg::{Action, Cfg};
use crate::ids::{EdgeId, GlobalId, Lockset, NodeId};

/// Syntactically reachable locksets per program point, plus the protecting
/// lockset of every global.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocksetMap {
    per_node: Vec<BTreeSet<Lockset>>,
    protecting: Vec<Lockset>,
    /// Edges that cannot fire under some reachable lockset: re-locking a held
    /// mutex or unlocking one that is not held.
    pub dead: Vec<(EdgeId, Lockset)>,
}

impl LocksetMap {
    pub fn at(&self, u: NodeId) -> &BTreeSet<Lockset> {
        &self.per_node[u.0 as usize]
    }

    /// `𝓜[g]`: mutexes held at every reachable write of `g`.
    pub fn protecting(&self, g: GlobalId) -> Lockset {
        self.protecting[g.0 as usize]
    }

    pub fn protecting_all(&self) -> &[Lockset] {
        &self.protecting
    }

    /// All `(u, S)` pairs in node order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, Lockset)> + '_ {
        self.per_node
            .iter()
            .enumerate()
            .flat_map(|(u, set)| set.iter().map(move |s| (NodeId(u as u32), *s)))
    }
}

/// The lockset after taking an edge, or `None` for a dead transition.
pub fn transfer_lockset(action: &Action, s: Lockset) -> Option<Lockset> {
    match action {
        Action::Lock(a) if s.contains(*a) => None,
        Action::Lock(a) => Some(s.with(*a)),
        Action::Unlock(a) if !s.contains(*a) => None,
        Action::Unlock(a) => Some(s.without(*a)),
        _ => Some(s),
    }
}

/// Propagates locksets from the main entry, treating every guard as passable.
/// Created threads start with the empty lockset.
pub fn reachable_locksets(c: &Cfg) -> LocksetMap {
    let mut per_node = vec![BTreeSet::new(); c.nodes.len()];
    let mut work = Vec::new();
    per_node[c.entry().0 as usize].insert(Lockset::empty());
    work.push((c.entry(), Lockset::empty()));
    let mut dead = BTreeSet::new();
    let full = Lockset::full(c.num_mutexes());
    let mut protecting = vec![full; c.num_globals()];
    while let Some((u, s)) = work.pop() {
        for &e in c.out_edges(u) {
            let edge = c.edge(e);
            if let Action::Create { thread, .. } = edge.action {
                let entry = c.thread_entry(thread);
                if per_node[entry.0 as usize].insert(Lockset::empty()) {
                    work.push((entry, Lockset::empty()));
                }
            }
            if let Action::WriteGlobal { g, .. } = edge.action {
                let p = &mut protecting[g.0 as usize];
                *p = p.intersection(s);
            }
            match transfer_lockset(&edge.action, s) {
                Some(s2) => {
                    if per_node[edge.dst.0 as usize].insert(s2) {
                        work.push((edge.dst, s2));
                    }
                }
                None => {
                    dead.insert((e, s));
                }
            }
        }
    }
    LocksetMap { per_node, protecting, dead: dead.into_iter().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{build_cfg, instrument_atomicity, parse};

    fn setup(src: &str) -> (Cfg, LocksetMap) {
        let c = build_cfg(&instrument_atomicity(&parse(src).unwrap()).unwrap());
        let l = reachable_locksets(&c);
        (c, l)
    }

    fn names(c: &Cfg, s: Lockset) -> Vec<&str> {
        s.iter().map(|m| c.mutex_name(m)).collect()
    }

    #[test]
    fn entry_has_empty_lockset() {
        let (c, l) = setup("thread main { lock(a); unlock(a); }");
        assert_eq!(l.at(c.entry()).iter().copied().collect::<Vec<_>>(), [Lockset::empty()]);
    }

    #[test]
    fn lockset_before_write_in_t1() {
        let (c, l) = setup(
            "global g; thread main { y = create(t1); } \
             thread t1 { lock(a); lock(b); g = 42; unlock(a); g = 17; unlock(b); }",
        );
        let e = c
            .edges
            .iter()
            .find(|e| matches!(&e.action, Action::WriteGlobal { e: crate::lang::Expr::Int(42), .. }))
            .unwrap();
        let sets: Vec<_> = l.at(e.src).iter().map(|s| names(&c, *s)).collect();
        assert_eq!(sets, [["a", "b", "m_g"]]);
    }

    #[test]
    fn protecting_set_of_fragment() {
        let (c, l) = setup(
            "global g; thread main { lock(a); g = 5; lock(b); unlock(b); x = g; g = x + 1; unlock(a); }",
        );
        let g = c.global_by_name("g").unwrap();
        assert_eq!(names(&c, l.protecting(g)), ["a", "m_g"]);
    }

    #[test]
    fn only_dedicated_mutex() {
        let (c, l) = setup("global g; thread main { g = 1; }");
        assert_eq!(names(&c, l.protecting(c.global_by_name("g").unwrap())), ["m_g"]);
    }

    #[test]
    fn unwritten_global_is_fully_protected() {
        let (c, l) = setup("global g; thread main { lock(a); x = g; unlock(a); }");
        let g = c.global_by_name("g").unwrap();
        assert_eq!(l.protecting(g), Lockset::full(c.num_mutexes()));
    }

    #[test]
    fn dead_transitions_reported() {
        let (_, l) = setup("thread main { lock(a); lock(a); unlock(b); }");
        assert_eq!(l.dead.len(), 1);
    }

    #[test]
    fn successor_locksets_are_present() {
        let (c, l) = setup(
            "global g; thread main { x = input(); if (x) { lock(a); } g = 1; if (x) { unlock(a); } }",
        );
        for (u, s) in l.pairs() {
            for &e in c.out_edges(u) {
                if let Some(s2) = transfer_lockset(&c.edge(e).action, s) {
                    assert!(l.at(c.edge(e).dst).contains(&s2));
                }
            }
        }
    }
}
