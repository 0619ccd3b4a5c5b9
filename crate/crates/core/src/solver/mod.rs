//! Demand-driven worklist solver for side-effecting constraint systems.
//!
//! A system maps each unknown to a list of right-hand sides. Evaluating a
//! right-hand side yields a contribution to its own unknown plus a list of
//! side-effects joined into other unknowns. Dependencies are recorded on
//! every evaluation, so they may change from one evaluation to the next.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Debug;

#[cfg(test)]
mod tests;

/// Result of evaluating one right-hand side.
#[derive(Clone, Debug)]
pub struct RhsOutput<K, V> {
    pub side: Vec<(K, V)>,
    pub contribution: V,
}

/// Read access to the current assignment from inside a right-hand side.
pub trait Env<S: System + ?Sized> {
    fn get(&mut self, key: &S::Key) -> S::Value;
    /// All materialized members of a family with their values.
    fn family(&mut self, fam: &S::Family) -> Vec<(S::Key, S::Value)>;
}

/// A side-effecting constraint system.
pub trait System {
    type Key: Clone + Ord + Debug;
    type Value: Clone + PartialEq + Debug;
    /// Pattern of unknowns a right-hand side may read collectively.
    type Family: Clone + Ord + Debug;

    fn bottom(&self, key: &Self::Key) -> Self::Value;
    /// Joins `v` into `acc`, returning whether `acc` grew.
    fn join_into(&self, key: &Self::Key, acc: &mut Self::Value, v: &Self::Value) -> bool;
    fn leq(&self, key: &Self::Key, a: &Self::Value, b: &Self::Value) -> bool;
    /// The family `key` belongs to, if any.
    fn family_of(&self, key: &Self::Key) -> Option<Self::Family>;
    /// Initial lower bounds (`x ⊒ d`).
    fn seeds(&self) -> Vec<(Self::Key, Self::Value)>;
    fn rhs_count(&self, key: &Self::Key) -> usize;
    fn eval(
        &self,
        key: &Self::Key,
        idx: usize,
        env: &mut dyn Env<Self>,
    ) -> RhsOutput<Self::Key, Self::Value>;
    /// Human-readable name of a right-hand side, for diagnostics.
    fn describe(&self, key: &Self::Key, idx: usize) -> String {
        format!("{key:?}#{idx}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    Lifo,
    Fifo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum number of right-hand-side evaluations.
    pub budget: u64,
    pub order: Order,
}

pub const DEFAULT_BUDGET: u64 = 1_000_000;

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { budget: DEFAULT_BUDGET, order: Order::Lifo }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub rhs_evals: u64,
    pub unknowns: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("solver budget of {budget} right-hand-side evaluations exceeded; still growing: {growing:?}")]
    Budget { budget: u64, growing: Vec<String> },
    #[error("restart budget of {budget} exceeded")]
    Restarts { budget: usize },
}

/// One step of the solver, reported to an observer.
#[derive(Clone, Debug)]
pub struct TraceEvent<'a, K> {
    pub key: &'a K,
    pub deps: usize,
    pub changed: bool,
}

/// A solved assignment.
#[derive(Clone, Debug)]
pub struct Solution<K, V> {
    pub values: BTreeMap<K, V>,
    pub stats: SolverStats,
}

impl<K: Ord, V> Solution<K, V> {
    pub fn get(&self, k: &K) -> Option<&V> {
        self.values.get(k)
    }
}

/// A right-hand side whose output is not accounted for by an assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: String,
    pub unknown: String,
}

struct Engine<'s, S: System + ?Sized> {
    sys: &'s S,
    cfg: SolverConfig,
    values: BTreeMap<S::Key, S::Value>,
    seeds: BTreeMap<S::Key, S::Value>,
    infl: BTreeMap<S::Key, BTreeSet<S::Key>>,
    deps: BTreeMap<S::Key, (BTreeSet<S::Key>, BTreeSet<S::Family>)>,
    fam_members: BTreeMap<S::Family, BTreeSet<S::Key>>,
    fam_readers: BTreeMap<S::Family, BTreeSet<S::Key>>,
    queue: VecDeque<S::Key>,
    queued: BTreeSet<S::Key>,
    changes: BTreeMap<S::Key, u64>,
    evals: u64,
    watch: BTreeSet<S::Key>,
    /// Set when a watched unknown changed after having been read.
    restart: bool,
}

struct Reads<'e, 's, S: System + ?Sized> {
    engine: &'e mut Engine<'s, S>,
    keys: BTreeSet<S::Key>,
    fams: BTreeSet<S::Family>,
}

impl<S: System + ?Sized> Env<S> for Reads<'_, '_, S> {
    fn get(&mut self, key: &S::Key) -> S::Value {
        self.engine.materialize(key);
        self.keys.insert(key.clone());
        self.engine.values[key].clone()
    }

    fn family(&mut self, fam: &S::Family) -> Vec<(S::Key, S::Value)> {
        self.fams.insert(fam.clone());
        match self.engine.fam_members.get(fam) {
            Some(ms) => ms.iter().map(|k| (k.clone(), self.engine.values[k].clone())).collect(),
            None => Vec::new(),
        }
    }
}

impl<'s, S: System + ?Sized> Engine<'s, S> {
    fn new(sys: &'s S, cfg: SolverConfig, seeds: BTreeMap<S::Key, S::Value>) -> Self {
        Engine {
            sys,
            cfg,
            values: BTreeMap::new(),
            seeds,
            infl: BTreeMap::new(),
            deps: BTreeMap::new(),
            fam_members: BTreeMap::new(),
            fam_readers: BTreeMap::new(),
            queue: VecDeque::new(),
            queued: BTreeSet::new(),
            changes: BTreeMap::new(),
            evals: 0,
            watch: BTreeSet::new(),
            restart: false,
        }
    }

    fn enqueue(&mut self, k: &S::Key) {
        if self.queued.insert(k.clone()) {
            self.queue.push_back(k.clone());
        }
    }

    fn pop(&mut self) -> Option<S::Key> {
        let k = match self.cfg.order {
            Order::Lifo => self.queue.pop_back(),
            Order::Fifo => self.queue.pop_front(),
        }?;
        self.queued.remove(&k);
        Some(k)
    }

    /// Creates `k` at its seed (or bottom) and schedules it. Returns whether
    /// it was new.
    fn materialize(&mut self, k: &S::Key) -> bool {
        if self.values.contains_key(k) {
            return false;
        }
        let mut v = self.sys.bottom(k);
        if let Some(s) = self.seeds.get(k) {
            self.sys.join_into(k, &mut v, s);
        }
        self.values.insert(k.clone(), v);
        if let Some(f) = self.sys.family_of(k) {
            self.fam_members.entry(f.clone()).or_default().insert(k.clone());
            // a seeded member changes what family readers see
            if self.seeds.contains_key(k) {
                self.schedule_family(&f);
            }
        }
        if self.sys.rhs_count(k) > 0 {
            self.enqueue(k);
        }
        true
    }

    fn schedule_family(&mut self, f: &S::Family) {
        if let Some(rs) = self.fam_readers.get(f) {
            let rs: Vec<_> = rs.iter().cloned().collect();
            for r in rs {
                self.enqueue(&r);
            }
        }
    }

    fn has_readers(&self, k: &S::Key) -> bool {
        self.infl.get(k).is_some_and(|s| !s.is_empty())
            || self
                .sys
                .family_of(k)
                .and_then(|f| self.fam_readers.get(&f))
                .is_some_and(|s| !s.is_empty())
    }

    fn on_change(&mut self, k: &S::Key) {
        *self.changes.entry(k.clone()).or_insert(0) += 1;
        if self.watch.contains(k) && self.has_readers(k) {
            self.restart = true;
        }
        if let Some(rs) = self.infl.get(k) {
            let rs: Vec<_> = rs.iter().cloned().collect();
            for r in rs {
                self.enqueue(&r);
            }
        }
        if let Some(f) = self.sys.family_of(k) {
            self.schedule_family(&f);
        }
    }

    fn side_effect(&mut self, k: &S::Key, v: &S::Value) {
        let fresh = self.materialize(k);
        let mut cur = self.values.remove(k).expect("materialized");
        let changed = self.sys.join_into(k, &mut cur, v);
        self.values.insert(k.clone(), cur);
        if changed {
            self.on_change(k);
        } else if fresh {
            if let Some(f) = self.sys.family_of(k) {
                self.schedule_family(&f);
            }
        }
    }

    fn clear_deps(&mut self, k: &S::Key) {
        if let Some((keys, fams)) = self.deps.remove(k) {
            for d in keys {
                if let Some(s) = self.infl.get_mut(&d) {
                    s.remove(k);
                }
            }
            for f in fams {
                if let Some(s) = self.fam_readers.get_mut(&f) {
                    s.remove(k);
                }
            }
        }
    }

    fn growing(&self) -> Vec<String> {
        let mut v: Vec<_> = self.changes.iter().collect();
        v.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        v.into_iter().take(10).map(|(k, n)| format!("{k:?} ({n} changes)")).collect()
    }

    fn run(
        &mut self,
        roots: &[S::Key],
        observer: &mut dyn FnMut(TraceEvent<'_, S::Key>),
    ) -> Result<(), SolveError> {
        let seed_keys: Vec<_> = self.seeds.keys().cloned().collect();
        for k in &seed_keys {
            self.materialize(k);
        }
        for k in roots {
            self.materialize(k);
            self.enqueue(k);
        }
        while let Some(k) = self.pop() {
            if self.restart {
                return Ok(());
            }
            let n = self.sys.rhs_count(&k);
            if n == 0 {
                continue;
            }
            self.clear_deps(&k);
            let mut acc = self.values[&k].clone();
            let mut reads = Reads { engine: self, keys: BTreeSet::new(), fams: BTreeSet::new() };
            let mut outputs = Vec::with_capacity(n);
            for i in 0..n {
                outputs.push(reads.engine.sys.eval(&k, i, &mut reads));
            }
            let Reads { keys, fams, .. } = reads;
            self.evals += n as u64;
            let ndeps = keys.len() + fams.len();
            for d in &keys {
                self.infl.entry(d.clone()).or_default().insert(k.clone());
            }
            for f in &fams {
                self.fam_readers.entry(f.clone()).or_default().insert(k.clone());
            }
            self.deps.insert(k.clone(), (keys, fams));
            let mut changed = false;
            for out in outputs {
                for (t, v) in &out.side {
                    self.side_effect(t, v);
                }
                changed |= self.sys.join_into(&k, &mut acc, &out.contribution);
            }
            if changed {
                // side-effects may have targeted `k` itself
                let cur = self.values.get_mut(&k).expect("materialized");
                self.sys.join_into(&k, cur, &acc);
                self.on_change(&k);
            }
            observer(TraceEvent { key: &k, deps: ndeps, changed });
            if self.evals > self.cfg.budget {
                return Err(SolveError::Budget { budget: self.cfg.budget, growing: self.growing() });
            }
        }
        Ok(())
    }
}

fn seed_map<S: System + ?Sized>(sys: &S) -> BTreeMap<S::Key, S::Value> {
    let mut m: BTreeMap<S::Key, S::Value> = BTreeMap::new();
    for (k, v) in sys.seeds() {
        match m.get_mut(&k) {
            Some(cur) => {
                sys.join_into(&k, cur, &v);
            }
            None => {
                let mut b = sys.bottom(&k);
                sys.join_into(&k, &mut b, &v);
                m.insert(k, b);
            }
        }
    }
    m
}

/// Solves `sys` on demand from `roots`.
pub fn solve<S: System + ?Sized>(
    sys: &S,
    roots: &[S::Key],
    cfg: SolverConfig,
) -> Result<Solution<S::Key, S::Value>, SolveError> {
    solve_observed(sys, roots, cfg, &mut |_| {})
}

/// [`solve`] with a callback invoked after every evaluated unknown.
pub fn solve_observed<S: System + ?Sized>(
    sys: &S,
    roots: &[S::Key],
    cfg: SolverConfig,
    observer: &mut dyn FnMut(TraceEvent<'_, S::Key>),
) -> Result<Solution<S::Key, S::Value>, SolveError> {
    let mut e = Engine::new(sys, cfg, seed_map(sys));
    e.run(roots, observer)?;
    let unknowns = e.values.len();
    Ok(Solution { values: e.values, stats: SolverStats { rhs_evals: e.evals, unknowns, restarts: 0 } })
}

/// Solves a system that is not monotone in the `watch` unknowns.
///
/// Whenever a watched unknown grows after some right-hand side has read it,
/// everything except the watched values is discarded and solving starts
/// over, with the watched values kept as additional seeds.
pub fn solve_with_restarts<S: System + ?Sized>(
    sys: &S,
    roots: &[S::Key],
    watch: &[S::Key],
    max_restarts: usize,
    cfg: SolverConfig,
    observer: &mut dyn FnMut(TraceEvent<'_, S::Key>),
) -> Result<Solution<S::Key, S::Value>, SolveError> {
    let base = seed_map(sys);
    let mut kept: BTreeMap<S::Key, S::Value> = BTreeMap::new();
    let mut restarts = 0usize;
    let mut total_evals = 0u64;
    loop {
        let mut seeds = base.clone();
        for (k, v) in &kept {
            match seeds.get_mut(k) {
                Some(cur) => {
                    sys.join_into(k, cur, v);
                }
                None => {
                    seeds.insert(k.clone(), v.clone());
                }
            }
        }
        let remaining = SolverConfig { budget: cfg.budget.saturating_sub(total_evals), ..cfg };
        let mut e = Engine::new(sys, remaining, seeds);
        e.watch = watch.iter().cloned().collect();
        let res = e.run(roots, observer);
        total_evals += e.evals;
        if let Err(SolveError::Budget { growing, .. }) = res {
            return Err(SolveError::Budget { budget: cfg.budget, growing });
        }
        if !e.restart {
            let unknowns = e.values.len();
            return Ok(Solution {
                values: e.values,
                stats: SolverStats { rhs_evals: total_evals, unknowns, restarts },
            });
        }
        restarts += 1;
        if restarts > max_restarts {
            return Err(SolveError::Restarts { budget: max_restarts });
        }
        kept = watch
            .iter()
            .filter_map(|k| e.values.get(k).map(|v| (k.clone(), v.clone())))
            .collect();
    }
}

struct Fixed<'a, S: System + ?Sized> {
    sys: &'a S,
    values: &'a BTreeMap<S::Key, S::Value>,
    members: &'a BTreeMap<S::Family, Vec<S::Key>>,
}

impl<S: System + ?Sized> Env<S> for Fixed<'_, S> {
    fn get(&mut self, key: &S::Key) -> S::Value {
        self.values.get(key).cloned().unwrap_or_else(|| self.sys.bottom(key))
    }

    fn family(&mut self, fam: &S::Family) -> Vec<(S::Key, S::Value)> {
        self.members
            .get(fam)
            .map(|ks| ks.iter().map(|k| (k.clone(), self.values[k].clone())).collect())
            .unwrap_or_default()
    }
}

/// Lists every constraint whose contribution or side-effects are not
/// subsumed by `values`. Unknowns absent from `values` count as bottom.
/// Checked constraints are those of all unknowns in `values` plus `roots`.
pub fn verify_post_solution<S: System + ?Sized>(
    sys: &S,
    values: &BTreeMap<S::Key, S::Value>,
    roots: &[S::Key],
) -> Vec<Violation> {
    let mut members: BTreeMap<S::Family, Vec<S::Key>> = BTreeMap::new();
    for k in values.keys() {
        if let Some(f) = sys.family_of(k) {
            members.entry(f).or_default().push(k.clone());
        }
    }
    let lookup = |k: &S::Key| values.get(k).cloned().unwrap_or_else(|| sys.bottom(k));
    let mut out = Vec::new();
    for (k, v) in seed_map(sys) {
        if !sys.leq(&k, &v, &lookup(&k)) {
            out.push(Violation { constraint: String::from("seed"), unknown: format!("{k:?}") });
        }
    }
    let mut keys: BTreeSet<S::Key> = values.keys().cloned().collect();
    keys.extend(roots.iter().cloned());
    for k in &keys {
        for i in 0..sys.rhs_count(k) {
            let mut env = Fixed { sys, values, members: &members };
            let o = sys.eval(k, i, &mut env);
            if !sys.leq(k, &o.contribution, &lookup(k)) {
                out.push(Violation { constraint: sys.describe(k, i), unknown: format!("{k:?}") });
            }
            for (t, v) in &o.side {
                if !sys.leq(t, v, &lookup(t)) {
                    out.push(Violation { constraint: sys.describe(k, i), unknown: format!("{t:?}") });
                }
            }
        }
    }
    out
}
