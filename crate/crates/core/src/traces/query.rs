use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::step::held_at;
use super::validate::{unique_max, write_nodes, written_value, Closure};
use super::{enumerate_global, CVal, LocalTrace, NodeRef, TraceConfig, TraceError};
use crate::analyses::{LockParts, WriteParts};
use crate::ids::{GlobalId, GlobalSet, Lockset, MutexId};
use crate::lang::{Action, Cfg};
use crate::lattice::{AbsVal, AbstractEnv, MinAntichain, ValueD};

/// Whether `c` is in the concretization of `v`. Thread ids are opaque to
/// the abstract domain and only covered by `Top`.
pub fn covers(v: &ValueD, c: &CVal) -> bool {
    match c {
        CVal::Int(i) => v.concretizes(&AbsVal::Int(*i)),
        CVal::Tid(_) => v.is_top(),
    }
}

/// Derived facts about one trace.
pub struct TraceQueries<'t> {
    cfg: &'t Cfg,
    t: &'t LocalTrace,
    closure: Closure,
}

impl<'t> TraceQueries<'t> {
    pub fn new(cfg: &'t Cfg, t: &'t LocalTrace) -> Result<Self, TraceError> {
        Ok(TraceQueries { cfg, t, closure: Closure::new(t).map_err(TraceError::Invalid)? })
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    /// `L_t` at ego node `idx`.
    pub fn lockset_at(&self, idx: usize) -> Lockset {
        held_at(self.cfg, self.t.ego_run(), idx)
    }

    pub fn sink_lockset(&self) -> Lockset {
        self.lockset_at(self.t.ego_run().steps.len())
    }

    /// The unique maximal write to `g` and its value.
    pub fn last_write(&self, g: GlobalId) -> Option<(NodeRef, CVal)> {
        let ws = write_nodes(self.cfg, self.t, g);
        let w = unique_max(&self.closure, &ws)?.clone();
        let v = written_value(self.cfg, self.t, &w).ok()?;
        Some((w, v))
    }

    fn last_ego_step(&self, p: impl Fn(&Action) -> bool) -> Option<usize> {
        let run = self.t.ego_run();
        run.steps.iter().rposition(|e| p(&self.cfg.edge(*e).action)).map(|j| j + 1)
    }

    /// Ego node reached by the last thread-local write to `g`, with the value.
    pub fn last_tl_write(&self, g: GlobalId) -> Option<(usize, CVal)> {
        let j = self.last_ego_step(|a| matches!(a, Action::WriteGlobal { g: h, .. } if *h == g))?;
        let v = written_value(self.cfg, self.t, &NodeRef::new(self.t.ego.clone(), j)).ok()?;
        Some((j, v))
    }

    /// Ego node reached by the last thread-local `lock(a)`.
    pub fn last_tl_lock(&self, a: MutexId) -> Option<usize> {
        self.last_ego_step(|x| *x == Action::Lock(a))
    }

    /// Minimal ego locksets from node `idx` to the sink.
    pub fn min_lockset_since(&self, idx: usize) -> Result<MinAntichain, TraceError> {
        let n = self.t.ego_run().nodes.len();
        if idx >= n {
            return Err(TraceError::Invalid(format!("node {idx} is not on the ego trace")));
        }
        let mut f = MinAntichain::empty();
        for j in idx..n {
            f.insert(self.lockset_at(j));
        }
        Ok(f)
    }
}

/// Abstraction of a trace for the lock-centered analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockBeta {
    pub v: Vec<GlobalSet>,
    pub l: Vec<MinAntichain>,
    pub locals: Vec<CVal>,
    /// Last thread-locally written value per global.
    pub globals: Vec<Option<CVal>>,
}

/// Abstraction of a trace for the write-centered analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteBeta {
    pub w: Vec<MinAntichain>,
    pub p: Vec<MinAntichain>,
    pub locals: Vec<CVal>,
    pub globals: Vec<Option<CVal>>,
}

fn sigma_below(locals: &[CVal], globals: &[Option<CVal>], sigma: &AbstractEnv) -> bool {
    locals.iter().zip(sigma.locals()).all(|(c, v)| covers(v, c))
        && globals.iter().zip(sigma.globals()).all(|(c, v)| c.as_ref().is_none_or(|c| covers(v, c)))
}

fn tl_globals(cfg: &Cfg, q: &TraceQueries<'_>) -> Vec<Option<CVal>> {
    cfg.global_ids().map(|g| q.last_tl_write(g).map(|(_, v)| v)).collect()
}

impl LockBeta {
    /// Whether the abstract state covers this trace.
    pub fn below(&self, parts: &LockParts, sigma: &AbstractEnv) -> bool {
        self.v.iter().zip(&parts.v).all(|(b, s)| s.is_subset(*b))
            && self.l.iter().zip(&parts.l).all(|(b, s)| b.leq(s))
            && sigma_below(&self.locals, &self.globals, sigma)
    }
}

impl WriteBeta {
    pub fn below(&self, parts: &WriteParts, sigma: &AbstractEnv) -> bool {
        self.w.iter().zip(&parts.w).all(|(b, s)| b.leq(s))
            && self.p.iter().zip(&parts.p).all(|(b, s)| b.leq(s))
            && sigma_below(&self.locals, &self.globals, sigma)
    }
}

pub fn beta_lock(cfg: &Cfg, t: &LocalTrace) -> Result<LockBeta, TraceError> {
    let q = TraceQueries::new(cfg, t)?;
    let run = t.ego_run();
    let mut v = Vec::new();
    let mut l = Vec::new();
    for a in cfg.mutex_ids() {
        let since = q.last_tl_lock(a);
        let mut gs = GlobalSet::empty();
        for e in &run.steps[since.unwrap_or(0)..] {
            if let Action::WriteGlobal { g, .. } = cfg.edge(*e).action {
                gs.insert(g);
            }
        }
        v.push(gs);
        l.push(match since {
            Some(j) => MinAntichain::singleton(q.lockset_at(j - 1)),
            None => MinAntichain::empty(),
        });
    }
    Ok(LockBeta { v, l, locals: t.sink().state.clone(), globals: tl_globals(cfg, &q) })
}

pub fn beta_write(cfg: &Cfg, t: &LocalTrace) -> Result<WriteBeta, TraceError> {
    let q = TraceQueries::new(cfg, t)?;
    let mut w = Vec::new();
    let mut p = Vec::new();
    for g in cfg.global_ids() {
        match q.last_tl_write(g) {
            Some((j, _)) => {
                w.push(MinAntichain::singleton(q.lockset_at(j - 1)));
                p.push(q.min_lockset_since(j)?);
            }
            None => {
                w.push(MinAntichain::empty());
                p.push(MinAntichain::full());
            }
        }
    }
    Ok(WriteBeta { w, p, locals: t.sink().state.clone(), globals: tl_globals(cfg, &q) })
}

/// Values read at each read site, keyed by site id.
pub type ConcreteReads = BTreeMap<String, BTreeSet<CVal>>;

/// Rejects programs reading a global that no edge writes.
pub fn check_written(cfg: &Cfg) -> Result<(), TraceError> {
    for s in cfg.read_sites() {
        let written = cfg.edges.iter().any(|e| matches!(e.action, Action::WriteGlobal { g, .. } if g == s.g));
        if !written {
            return Err(TraceError::NeverWritten(String::from(cfg.global_name(s.g))));
        }
    }
    Ok(())
}

/// Enumerates all traces and collects the values read at each site.
pub fn concrete_read_table(cfg: &Cfg, conf: TraceConfig) -> Result<ConcreteReads, TraceError> {
    check_written(cfg)?;
    let all = enumerate_global(cfg, conf)?;
    Ok(reads_of(cfg, all.traces.iter()))
}

/// Values read at each site by the traces whose last action is that read.
pub fn reads_of<'a>(cfg: &Cfg, traces: impl Iterator<Item = &'a LocalTrace>) -> ConcreteReads {
    let sites = cfg.read_sites();
    let mut out: ConcreteReads = sites.iter().map(|s| (s.id.clone(), BTreeSet::new())).collect();
    let by_edge: BTreeMap<_, _> = sites.iter().map(|s| (s.edge, s)).collect();
    for t in traces {
        if let Some(s) = t.last().and_then(|e| by_edge.get(&e)) {
            out.get_mut(&s.id).expect("site listed").insert(t.sink().state[s.x.0 as usize].clone());
        }
    }
    out
}

/// The downward closure of ego node `idx`, a trace with the same ego.
pub fn downset(t: &LocalTrace, idx: usize) -> Result<LocalTrace, TraceError> {
    let c = Closure::new(t).map_err(TraceError::Invalid)?;
    let top = NodeRef::new(t.ego.clone(), idx);
    let mut out = LocalTrace { ego: t.ego.clone(), threads: BTreeMap::new(), chains: BTreeSet::new() };
    for (id, run) in &t.threads {
        let keep = (0..run.nodes.len()).take_while(|j| c.leq(&NodeRef::new(id.clone(), *j), &top)).count();
        if keep > 0 {
            let mut r = run.clone();
            r.nodes.truncate(keep);
            r.steps.truncate(keep - 1);
            out.threads.insert(id.clone(), r);
        }
    }
    out.chains = t.chains.iter().filter(|(_, _, to)| c.leq(to, &top)).cloned().collect();
    Ok(out)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One DOT digraph per trace: one row of nodes per thread, with create and
/// lock-order edges drawn across rows.
pub fn trace_to_dot(cfg: &Cfg, t: &LocalTrace, name: &str) -> String {
    let id = |r: &NodeRef| format!("\"{}:{}\"", r.thread, r.index);
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{\n  rankdir=LR;\n  node [shape=box, fontsize=10];", dot_escape(name));
    for (tid, run) in &t.threads {
        let _ = writeln!(s, "  subgraph \"cluster_{tid}\" {{\n    label=\"thread {tid}\";");
        for (j, n) in run.nodes.iter().enumerate() {
            let vals: Vec<String> =
                n.state.iter().enumerate().map(|(x, v)| format!("{}={v}", cfg.locals[x])).collect();
            let style = if *tid == t.ego && j + 1 == run.nodes.len() { ", penwidth=2" } else { "" };
            let _ = writeln!(
                s,
                "    {} [label=\"{j}: u{}\\n{}\"{style}];",
                id(&NodeRef::new(tid.clone(), j)),
                n.point.0,
                dot_escape(&vals.join(" "))
            );
        }
        for (j, e) in run.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "    {} -> {} [label=\"{}\"];",
                id(&NodeRef::new(tid.clone(), j)),
                id(&NodeRef::new(tid.clone(), j + 1)),
                dot_escape(&cfg.action_text(&cfg.edge(*e).action))
            );
        }
        s.push_str("  }\n");
        if let Some((p, j)) = tid.parent() {
            let from = NodeRef { thread: p, index: j };
            let _ = writeln!(s, "  {} -> {} [style=dashed, label=\"c\"];", id(&from), id(&NodeRef::new(tid.clone(), 0)));
        }
    }
    for (a, from, to) in &t.chains {
        let _ = writeln!(s, "  {} -> {} [style=dotted, label=\"{}\"];", id(from), id(to), dot_escape(cfg.mutex_name(*a)));
    }
    s.push_str("}\n");
    s
}
