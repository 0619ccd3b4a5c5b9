use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::step::Semantics;
use super::{lock_of, unlock_of, LocalTrace, TraceConfig, TraceError};
use crate::ids::{EdgeId, MutexId, NodeId};
use crate::lang::{Action, Cfg};
use crate::solver::{self, Env, RhsOutput, SolverConfig, System, Violation};

/// Interned traces with memoized edge applications.
struct Arena<'c> {
    sem: Semantics<'c>,
    traces: Vec<Rc<LocalTrace>>,
    index: BTreeMap<Rc<LocalTrace>, u32>,
    unary: BTreeMap<(u32, EdgeId), (Vec<u32>, Vec<u32>)>,
    binary: BTreeMap<(u32, u32, EdgeId), Option<u32>>,
}

impl<'c> Arena<'c> {
    fn new(sem: Semantics<'c>) -> Self {
        Arena { sem, traces: Vec::new(), index: BTreeMap::new(), unary: BTreeMap::new(), binary: BTreeMap::new() }
    }

    /// Returns the id of `t` and whether it is new.
    fn intern(&mut self, t: LocalTrace) -> Result<(u32, bool), TraceError> {
        if let Some(i) = self.index.get(&t) {
            return Ok((*i, false));
        }
        if self.traces.len() >= self.sem.conf.cap {
            return Err(TraceError::Cap { cap: self.sem.conf.cap });
        }
        let i = self.traces.len() as u32;
        let t = Rc::new(t);
        self.traces.push(t.clone());
        self.index.insert(t, i);
        Ok((i, true))
    }

    fn get(&self, i: u32) -> &LocalTrace {
        &self.traces[i as usize]
    }

    fn unary(&mut self, t: u32, e: EdgeId) -> Result<(Vec<u32>, Vec<u32>), TraceError> {
        if let Some(r) = self.unary.get(&(t, e)) {
            return Ok(r.clone());
        }
        let r = self.sem.step(e, &self.traces[t as usize])?;
        let mut next = Vec::new();
        for n in r.next {
            next.push(self.intern(n)?.0);
        }
        let mut spawned = Vec::new();
        for n in r.spawned {
            spawned.push(self.intern(n)?.0);
        }
        self.unary.insert((t, e), (next.clone(), spawned.clone()));
        Ok((next, spawned))
    }

    fn binary(&mut self, t0: u32, t1: u32, e: EdgeId) -> Result<Option<u32>, TraceError> {
        if let Some(r) = self.binary.get(&(t0, t1, e)) {
            return Ok(*r);
        }
        let r = match self.sem.step_lock(e, &self.traces[t0 as usize], &self.traces[t1 as usize])? {
            Some(t) => Some(self.intern(t)?.0),
            None => None,
        };
        self.binary.insert((t0, t1, e), r);
        Ok(r)
    }

    /// Whether trace `t` may be incorporated by a `lock(a)`.
    fn releases(&self, t: u32, a: MutexId) -> bool {
        let t = self.get(t);
        match t.last() {
            None => t.ego == super::ThreadId::root(),
            Some(e) => unlock_of(self.sem.cfg, e) == Some(a),
        }
    }
}

/// A set of traces with the lookups used to compare it with the constraint-based enumeration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: BTreeSet<LocalTrace>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Traces whose sink is at `u`.
    pub fn at(&self, u: NodeId) -> BTreeSet<LocalTrace> {
        self.traces.iter().filter(|t| t.loc() == u).cloned().collect()
    }

    /// Whether some trace was cut off by the per-thread bound.
    pub fn truncated(&self, cfg: &Cfg, bound: usize) -> bool {
        self.traces.iter().any(|t| t.ego_run().steps.len() >= bound && !cfg.out_edges(t.loc()).is_empty())
    }

    /// The initial trace plus all traces ending in `unlock(a)`.
    pub fn releasing(&self, cfg: &Cfg, a: MutexId) -> BTreeSet<LocalTrace> {
        self.traces
            .iter()
            .filter(|t| match t.last() {
                None => t.ego == super::ThreadId::root(),
                Some(e) => unlock_of(cfg, e) == Some(a),
            })
            .cloned()
            .collect()
    }
}

/// Least set of traces closed under all edge operators, up to the bound.
pub fn enumerate_global(cfg: &Cfg, conf: TraceConfig) -> Result<TraceSet, TraceError> {
    let mut ar = Arena::new(Semantics::new(cfg, conf));
    let mut work = VecDeque::new();
    let (i0, _) = ar.intern(ar.sem.init())?;
    work.push_back(i0);
    let nm = cfg.num_mutexes();
    let mut releasers: Vec<Vec<u32>> = alloc::vec![Vec::new(); nm];
    let mut lockers: Vec<Vec<(u32, EdgeId)>> = alloc::vec![Vec::new(); nm];
    let mut queued = BTreeSet::from([i0]);
    while let Some(t) = work.pop_front() {
        let u = ar.get(t).loc();
        for a in cfg.mutex_ids() {
            if ar.releases(t, a) {
                releasers[a.0 as usize].push(t);
            }
        }
        for &e in cfg.out_edges(u) {
            if let Some(a) = lock_of(cfg, e) {
                lockers[a.0 as usize].push((t, e));
            }
        }
        let mut found = Vec::new();
        for &e in cfg.out_edges(u) {
            match lock_of(cfg, e) {
                Some(a) => {
                    for &r in &releasers[a.0 as usize] {
                        if let Some(n) = ar.binary(t, r, e)? {
                            found.push(n);
                        }
                    }
                }
                None => {
                    let (next, spawned) = ar.unary(t, e)?;
                    found.extend(next);
                    found.extend(spawned);
                }
            }
        }
        for a in cfg.mutex_ids() {
            if !ar.releases(t, a) {
                continue;
            }
            for &(t0, e) in &lockers[a.0 as usize] {
                if t0 != t {
                    if let Some(n) = ar.binary(t0, t, e)? {
                        found.push(n);
                    }
                }
            }
        }
        for n in found {
            if queued.insert(n) {
                work.push_back(n);
            }
        }
    }
    Ok(TraceSet { traces: ar.traces.iter().map(|t| (**t).clone()).collect() })
}

/// Unknowns of the local trace system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LKey {
    Point(NodeId),
    Mutex(MutexId),
}

struct LocalSystem<'c> {
    arena: RefCell<Arena<'c>>,
    error: RefCell<Option<TraceError>>,
    init: u32,
}

impl LocalSystem<'_> {
    fn fail(&self, e: TraceError) {
        self.error.borrow_mut().get_or_insert(e);
    }
}

impl System for LocalSystem<'_> {
    type Key = LKey;
    type Value = BTreeSet<u32>;
    type Family = ();

    fn bottom(&self, _: &LKey) -> BTreeSet<u32> {
        BTreeSet::new()
    }

    fn join_into(&self, _: &LKey, acc: &mut BTreeSet<u32>, v: &BTreeSet<u32>) -> bool {
        let n = acc.len();
        acc.extend(v.iter().copied());
        acc.len() != n
    }

    fn leq(&self, _: &LKey, a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> bool {
        a.is_subset(b)
    }

    fn family_of(&self, _: &LKey) -> Option<()> {
        None
    }

    fn seeds(&self) -> Vec<(LKey, BTreeSet<u32>)> {
        let ar = self.arena.borrow();
        let cfg = ar.sem.cfg;
        let init = BTreeSet::from([self.init]);
        let mut s = alloc::vec![(LKey::Point(cfg.entry()), init.clone())];
        s.extend(cfg.mutex_ids().map(|a| (LKey::Mutex(a), init.clone())));
        s
    }

    fn rhs_count(&self, key: &LKey) -> usize {
        match key {
            LKey::Point(v) => self.arena.borrow().sem.cfg.in_edges(*v).len(),
            LKey::Mutex(_) => 0,
        }
    }

    fn eval(&self, key: &LKey, idx: usize, env: &mut dyn Env<Self>) -> RhsOutput<LKey, BTreeSet<u32>> {
        let LKey::Point(v) = *key else { unreachable!("mutex unknowns have no right-hand sides") };
        let cfg = self.arena.borrow().sem.cfg;
        let e = cfg.in_edges(v)[idx];
        let edge = cfg.edge(e);
        let src = env.get(&LKey::Point(edge.src));
        let mut out = RhsOutput { side: Vec::new(), contribution: BTreeSet::new() };
        let rel = match edge.action {
            Action::Lock(a) => env.get(&LKey::Mutex(a)),
            _ => BTreeSet::new(),
        };
        let mut ar = self.arena.borrow_mut();
        match edge.action {
            Action::Lock(_) => {
                for &t0 in &src {
                    for &t1 in &rel {
                        match ar.binary(t0, t1, e) {
                            Ok(Some(n)) => {
                                out.contribution.insert(n);
                            }
                            Ok(None) => {}
                            Err(err) => self.fail(err),
                        }
                    }
                }
            }
            _ => {
                let mut spawned = BTreeSet::new();
                for &t in &src {
                    match ar.unary(t, e) {
                        Ok((next, sp)) => {
                            out.contribution.extend(next);
                            spawned.extend(sp);
                        }
                        Err(err) => self.fail(err),
                    }
                }
                if let Action::Create { thread, .. } = edge.action {
                    out.side.push((LKey::Point(cfg.thread_entry(thread)), spawned));
                }
                if let Action::Unlock(a) = edge.action {
                    out.side.push((LKey::Mutex(a), out.contribution.clone()));
                }
            }
        }
        out
    }

    fn describe(&self, key: &LKey, idx: usize) -> String {
        alloc::format!("{key:?}#{idx}")
    }
}

/// Solution of the local trace system.
#[derive(Clone, Debug, Default)]
pub struct LocalSolution {
    pub values: BTreeMap<LKey, BTreeSet<LocalTrace>>,
    pub stats: solver::SolverStats,
    pub violations: Vec<Violation>,
}

impl LocalSolution {
    pub fn get(&self, k: LKey) -> BTreeSet<LocalTrace> {
        self.values.get(&k).cloned().unwrap_or_default()
    }

    /// Union over all program points.
    pub fn all(&self) -> BTreeSet<LocalTrace> {
        self.values
            .iter()
            .filter(|(k, _)| matches!(k, LKey::Point(_)))
            .flat_map(|(_, v)| v.iter().cloned())
            .collect()
    }
}

/// Solves the per-point, per-mutex trace system with the generic solver.
pub fn enumerate_local(cfg: &Cfg, conf: TraceConfig, solver_conf: SolverConfig) -> Result<LocalSolution, TraceError> {
    let mut ar = Arena::new(Semantics::new(cfg, conf));
    let (init, _) = ar.intern(ar.sem.init())?;
    let sys = LocalSystem { arena: RefCell::new(ar), error: RefCell::new(None), init };
    let roots: Vec<LKey> = cfg.node_ids().map(LKey::Point).collect();
    let sol = solver::solve(&sys, &roots, solver_conf)?;
    if let Some(e) = sys.error.borrow_mut().take() {
        return Err(e);
    }
    let violations = solver::verify_post_solution(&sys, &sol.values, &roots);
    if let Some(e) = sys.error.borrow_mut().take() {
        return Err(e);
    }
    let ar = sys.arena.borrow();
    let values = sol
        .values
        .iter()
        .map(|(k, v)| (*k, v.iter().map(|i| ar.get(*i).clone()).collect()))
        .collect();
    Ok(LocalSolution { values, stats: sol.stats, violations })
}
