use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::validate::{unique_max, validate, write_nodes, written_value, Closure};
use super::{
    concrete_guard, eval_concrete, set_local, CVal, LocalTrace, NodeRef, ThreadId, ThreadRun,
    TraceConfig, TraceError, TraceNode,
};
use crate::ids::{EdgeId, LocalId, Lockset};
use crate::lang::{Action, Cfg};

/// The initial trace: the root thread at the entry with all locals 0.
pub fn init_trace(cfg: &Cfg) -> LocalTrace {
    let mut state = vec![CVal::Int(0); cfg.num_locals()];
    state[0] = CVal::Tid(ThreadId::root());
    let run = ThreadRun { nodes: vec![TraceNode { point: cfg.entry(), state }], steps: Vec::new() };
    LocalTrace { ego: ThreadId::root(), threads: BTreeMap::from([(ThreadId::root(), run)]), chains: BTreeSet::new() }
}

/// Result of a non-lock step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepResult {
    /// Extensions of the ego thread by the edge.
    pub next: Vec<LocalTrace>,
    /// Traces of threads started by a create edge.
    pub spawned: Vec<LocalTrace>,
}

/// The edge operators of the concrete semantics for one program.
pub struct Semantics<'c> {
    pub cfg: &'c Cfg,
    pub conf: TraceConfig,
}

/// Lockset held by the owner of `run` at node `idx`.
pub(crate) fn held_at(cfg: &Cfg, run: &ThreadRun, idx: usize) -> Lockset {
    let mut s = Lockset::empty();
    for e in &run.steps[..idx] {
        match cfg.edge(*e).action {
            Action::Lock(a) => {
                s.insert(a);
            }
            Action::Unlock(a) => {
                s.remove(a);
            }
            _ => {}
        }
    }
    s
}

fn is_prefix(a: &ThreadRun, b: &ThreadRun) -> bool {
    a.nodes.len() <= b.nodes.len() && b.nodes[..a.nodes.len()] == a.nodes[..] && b.steps[..a.steps.len()] == a.steps[..]
}

impl<'c> Semantics<'c> {
    pub fn new(cfg: &'c Cfg, conf: TraceConfig) -> Self {
        Semantics { cfg, conf }
    }

    pub fn init(&self) -> LocalTrace {
        init_trace(self.cfg)
    }

    fn extend(&self, t: &LocalTrace, e: EdgeId, state: Vec<CVal>) -> LocalTrace {
        let mut n = t.clone();
        let run = n.threads.get_mut(&t.ego).expect("ego present");
        run.steps.push(e);
        run.nodes.push(TraceNode { point: self.cfg.edge(e).dst, state });
        n
    }

    fn checked(&self, t: LocalTrace) -> Result<LocalTrace, TraceError> {
        validate(self.cfg, &self.conf.inputs, &t).map_err(TraceError::Invalid)?;
        Ok(t)
    }

    fn at_bound(&self, t: &LocalTrace) -> bool {
        t.ego_run().steps.len() >= self.conf.bound
    }

    /// Applies a non-lock edge to `t`. Results beyond the bound are dropped.
    pub fn step(&self, e: EdgeId, t: &LocalTrace) -> Result<StepResult, TraceError> {
        let edge = self.cfg.edge(e);
        debug_assert_eq!(edge.src, t.loc());
        let mut out = StepResult::default();
        if self.at_bound(t) {
            return Ok(out);
        }
        let sigma = &t.sink().state;
        let mut next = Vec::new();
        match &edge.action {
            Action::Guard { cond, positive } => {
                if concrete_guard(&eval_concrete(cond, sigma)?, *positive) {
                    next.push(sigma.clone());
                }
            }
            Action::AssignLocal { x, e } => next.push(set_local(sigma, *x, eval_concrete(e, sigma)?)),
            Action::Input { x } => {
                next.extend(self.conf.inputs.iter().map(|i| set_local(sigma, *x, CVal::Int(*i))));
            }
            Action::Create { x, thread } => {
                let child = t.ego.child(t.ego_run().steps.len() as u32);
                next.push(set_local(sigma, *x, CVal::Tid(child.clone())));
                let mut s = t.clone();
                let state = set_local(sigma, LocalId(0), CVal::Tid(child.clone()));
                let point = self.cfg.thread_entry(*thread);
                s.threads.insert(child.clone(), ThreadRun { nodes: vec![TraceNode { point, state }], steps: Vec::new() });
                s.ego = child;
                out.spawned.push(self.checked(s)?);
            }
            Action::Lock(_) => return Err(TraceError::Invalid("lock is a binary step".into())),
            Action::Unlock(a) => {
                if held_at(self.cfg, t.ego_run(), t.ego_run().steps.len()).contains(*a) {
                    next.push(sigma.clone());
                }
            }
            Action::WriteGlobal { e, .. } => {
                eval_concrete(e, sigma)?;
                next.push(sigma.clone());
            }
            Action::ReadGlobal { x, g } => {
                let c = Closure::new(t).map_err(TraceError::Invalid)?;
                let writes = write_nodes(self.cfg, t, *g);
                if let Some(w) = unique_max(&c, &writes) {
                    let v = written_value(self.cfg, t, w).map_err(TraceError::Invalid)?;
                    next.push(set_local(sigma, *x, v));
                }
            }
        }
        for s in next {
            out.next.push(self.checked(self.extend(t, e, s))?);
        }
        Ok(out)
    }

    /// Applies `lock(a)` to `t0`, incorporating `t1`, which must be initial
    /// or end in `unlock(a)`. Incompatible pairs yield `None`.
    pub fn step_lock(&self, e: EdgeId, t0: &LocalTrace, t1: &LocalTrace) -> Result<Option<LocalTrace>, TraceError> {
        let a = match self.cfg.edge(e).action {
            Action::Lock(a) => a,
            _ => return Err(TraceError::Invalid("step_lock on a non-lock edge".into())),
        };
        let initial = t1.last().is_none() && t1.ego == ThreadId::root();
        if !(initial || t1.last_action(self.cfg) == Some(&Action::Unlock(a))) || self.at_bound(t0) {
            return Ok(None);
        }
        if held_at(self.cfg, t0.ego_run(), t0.ego_run().steps.len()).contains(a) {
            return Ok(None);
        }
        let mut m = t0.clone();
        for (id, r1) in &t1.threads {
            match m.threads.get_mut(id) {
                Some(r0) => {
                    if is_prefix(r0, r1) {
                        if *id == t0.ego && r1.nodes.len() > r0.nodes.len() {
                            return Ok(None);
                        }
                        *r0 = r1.clone();
                    } else if !is_prefix(r1, r0) {
                        return Ok(None);
                    }
                }
                None => {
                    m.threads.insert(id.clone(), r1.clone());
                }
            }
        }
        m.chains.extend(t1.chains.iter().cloned());
        let state = t0.sink().state.clone();
        let mut m = self.extend(&m, e, state);
        let from = if initial { NodeRef::root() } else { t1.sink_ref() };
        m.chains.insert((a, from, m.sink_ref()));
        Ok(validate(self.cfg, &self.conf.inputs, &m).ok().map(|_| m))
    }
}
