use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{eval_concrete, concrete_guard, set_local, CVal, LocalTrace, NodeRef, ThreadId};
use crate::ids::{Lockset, MutexId};
use crate::lang::{Action, Cfg};

/// Reflexive-transitive closure of the causal order of one trace.
pub struct Closure {
    offsets: BTreeMap<ThreadId, usize>,
    /// `anc[v]` is a bitset of all `w ≤ v`.
    anc: Vec<Vec<u64>>,
}

impl Closure {
    /// Fails if the order has a cycle or an edge leaves the trace.
    pub fn new(t: &LocalTrace) -> Result<Closure, String> {
        let mut offsets = BTreeMap::new();
        let mut n = 0usize;
        for (id, run) in &t.threads {
            offsets.insert(id.clone(), n);
            n += run.nodes.len();
        }
        let index = |r: &NodeRef| -> Result<usize, String> {
            let base = offsets.get(&r.thread).ok_or_else(|| format!("unknown thread {}", r.thread))?;
            let len = t.threads[&r.thread].nodes.len();
            if r.index as usize >= len {
                return Err(format!("node {}:{} out of range", r.thread, r.index));
            }
            Ok(base + r.index as usize)
        };
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (id, run) in &t.threads {
            let base = offsets[id];
            for j in 1..run.nodes.len() {
                preds[base + j].push(base + j - 1);
            }
            if let Some((p, j)) = id.parent() {
                let from = index(&NodeRef { thread: p, index: j })?;
                preds[base].push(from);
            }
        }
        for (_, from, to) in &t.chains {
            let (f, d) = (index(from)?, index(to)?);
            preds[d].push(f);
        }
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for (v, ps) in preds.iter().enumerate() {
            indeg[v] = ps.len();
            for &p in ps {
                succs[p].push(v);
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|v| indeg[*v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &s in &succs[v] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() != n {
            return Err(String::from("causality has a cycle"));
        }
        let words = n.div_ceil(64);
        let mut anc = vec![vec![0u64; words]; n];
        for &v in &order {
            let mut bits = vec![0u64; words];
            bits[v / 64] |= 1 << (v % 64);
            for &p in &preds[v] {
                for (b, a) in bits.iter_mut().zip(&anc[p]) {
                    *b |= *a;
                }
            }
            anc[v] = bits;
        }
        Ok(Closure { offsets, anc })
    }

    fn index(&self, r: &NodeRef) -> Option<usize> {
        Some(self.offsets.get(&r.thread)? + r.index as usize)
    }

    /// `a ≤ b` in the causal order.
    pub fn leq(&self, a: &NodeRef, b: &NodeRef) -> bool {
        match (self.index(a), self.index(b)) {
            (Some(i), Some(j)) => j < self.anc.len() && self.anc[j][i / 64] >> (i % 64) & 1 == 1,
            _ => false,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Among `nodes`, the unique maximal one under `c`, if it exists.
pub(crate) fn unique_max<'a>(c: &Closure, nodes: &'a [NodeRef]) -> Option<&'a NodeRef> {
    let mut maxima = nodes.iter().filter(|n| nodes.iter().all(|m| m == *n || !c.leq(n, m)));
    let first = maxima.next()?;
    match maxima.next() {
        None => Some(first),
        Some(_) => None,
    }
}

/// Nodes reached by a write to `g`.
pub(crate) fn write_nodes(cfg: &Cfg, t: &LocalTrace, g: crate::ids::GlobalId) -> Vec<NodeRef> {
    let mut out = Vec::new();
    for (id, run) in &t.threads {
        for (j, e) in run.steps.iter().enumerate() {
            if matches!(cfg.edge(*e).action, Action::WriteGlobal { g: h, .. } if h == g) {
                out.push(NodeRef::new(id.clone(), j + 1));
            }
        }
    }
    out
}

/// Value written by the step leading to `w`.
pub(crate) fn written_value(cfg: &Cfg, t: &LocalTrace, w: &NodeRef) -> Result<CVal, String> {
    let run = &t.threads[&w.thread];
    let j = w.index as usize - 1;
    match &cfg.edge(run.steps[j]).action {
        Action::WriteGlobal { e, .. } => eval_concrete(e, &run.nodes[j].state).map_err(|e| format!("{e}")),
        _ => Err(String::from("not a write node")),
    }
}

/// Checks every trace axiom on `t`. `inputs` is the admissible set of
/// values produced by `input()`.
pub fn validate(cfg: &Cfg, inputs: &[i64], t: &LocalTrace) -> Result<Closure, String> {
    let root = ThreadId::root();
    let r0 = t.threads.get(&root).ok_or("root thread missing")?;
    check(r0.nodes[0].point == cfg.entry(), || String::from("root does not start at the entry"))?;
    check(t.threads.contains_key(&t.ego), || String::from("ego thread missing"))?;

    for (id, run) in &t.threads {
        check(!run.nodes.is_empty() && run.nodes.len() == run.steps.len() + 1, || {
            format!("thread {id}: malformed run")
        })?;
        check(run.nodes.iter().all(|n| n.state.len() == cfg.num_locals()), || {
            format!("thread {id}: state of wrong shape")
        })?;
        check(run.nodes[0].state[0] == CVal::Tid(id.clone()), || format!("thread {id}: wrong self"))?;
        if let Some((p, j)) = id.parent() {
            let j = j as usize;
            let parent = t.threads.get(&p).ok_or_else(|| format!("creator of {id} missing"))?;
            check(parent.nodes.len() > j, || format!("creator node of {id} missing"))?;
            let at = &parent.nodes[j];
            let def = cfg.nodes[run.nodes[0].point.0 as usize].thread;
            let create = cfg.out_edges(at.point).iter().copied().find(|e| {
                matches!(cfg.edge(*e).action, Action::Create { thread, .. } if thread == def)
            });
            let create = create.ok_or_else(|| format!("no create of {id} at its creator node"))?;
            check(run.nodes[0].point == cfg.thread_entry(def), || format!("{id} starts off its entry"))?;
            if let Some(e) = parent.steps.get(j) {
                check(*e == create, || format!("creator of {id} takes another step"))?;
            }
            let expect = set_local(&at.state, crate::ids::LocalId(0), CVal::Tid(id.clone()));
            check(run.nodes[0].state == expect, || format!("{id} disagrees with its creator on locals"))?;
        }
        let mut held = Lockset::empty();
        for (j, e) in run.steps.iter().enumerate() {
            let edge = cfg.edge(*e);
            let (a, b) = (&run.nodes[j], &run.nodes[j + 1]);
            check(edge.src == a.point && edge.dst == b.point, || format!("{id}:{j}: step off its edge"))?;
            let same = || check(a.state == b.state, || format!("{id}:{j}: state changed"));
            let ev = |x: &crate::lang::LExpr| eval_concrete(x, &a.state).map_err(|e| format!("{e}"));
            match &edge.action {
                Action::Guard { cond, positive } => {
                    check(concrete_guard(&ev(cond)?, *positive), || format!("{id}:{j}: guard fails"))?;
                    same()?;
                }
                Action::AssignLocal { x, e } => {
                    check(b.state == set_local(&a.state, *x, ev(e)?), || format!("{id}:{j}: bad assignment"))?;
                }
                Action::Input { x } => {
                    let ok = inputs.iter().any(|i| b.state == set_local(&a.state, *x, CVal::Int(*i)));
                    check(ok, || format!("{id}:{j}: bad input"))?;
                }
                Action::Create { x, .. } => {
                    let child = CVal::Tid(id.child(j as u32));
                    check(b.state == set_local(&a.state, *x, child), || format!("{id}:{j}: bad create"))?;
                }
                Action::Lock(m) => {
                    check(held.insert(*m), || format!("{id}:{j}: lock of held mutex"))?;
                    same()?;
                }
                Action::Unlock(m) => {
                    check(held.remove(*m), || format!("{id}:{j}: unlock of free mutex"))?;
                    same()?;
                }
                Action::WriteGlobal { e, .. } => {
                    ev(e)?;
                    same()?;
                }
                // value checked against the closure below
                Action::ReadGlobal { .. } => {}
            }
        }
    }

    let c = Closure::new(t)?;

    let mut incoming: BTreeMap<(MutexId, &NodeRef), usize> = BTreeMap::new();
    let mut outgoing: BTreeMap<(MutexId, &NodeRef), usize> = BTreeMap::new();
    for (a, from, to) in &t.chains {
        let into = t.incoming(to).map(|e| &cfg.edge(e).action);
        check(into == Some(&Action::Lock(*a)), || format!("chain of {} into a non-lock node", cfg.mutex_name(*a)))?;
        let out_of = t.incoming(from).map(|e| &cfg.edge(e).action);
        check(*from == NodeRef::root() || out_of == Some(&Action::Unlock(*a)), || {
            format!("chain of {} from a non-unlock node", cfg.mutex_name(*a))
        })?;
        *incoming.entry((*a, to)).or_default() += 1;
        *outgoing.entry((*a, from)).or_default() += 1;
    }
    check(outgoing.values().all(|n| *n <= 1), || String::from("unlock followed by two locks"))?;
    for (id, run) in &t.threads {
        for (j, e) in run.steps.iter().enumerate() {
            if let Action::Lock(a) = cfg.edge(*e).action {
                let r = NodeRef::new(id.clone(), j + 1);
                check(incoming.get(&(a, &r)) == Some(&1), || {
                    format!("lock of {} at {id}:{} without a unique predecessor", cfg.mutex_name(a), j + 1)
                })?;
            }
        }
    }

    for (id, run) in &t.threads {
        for (j, e) in run.steps.iter().enumerate() {
            if let Action::ReadGlobal { x, g } = cfg.edge(*e).action {
                let src = NodeRef::new(id.clone(), j);
                let before: Vec<NodeRef> =
                    write_nodes(cfg, t, g).into_iter().filter(|w| c.leq(w, &src)).collect();
                let w = unique_max(&c, &before).ok_or_else(|| format!("{id}:{j}: read without a last write"))?;
                let v = written_value(cfg, t, w)?;
                check(run.nodes[j + 1].state == set_local(&run.nodes[j].state, x, v), || {
                    format!("{id}:{j}: read disagrees with the last write")
                })?;
            }
        }
    }

    let sink = t.sink_ref();
    for (id, run) in &t.threads {
        for j in 0..run.nodes.len() {
            check(c.leq(&NodeRef::new(id.clone(), j), &sink), || format!("{id}:{j} is not below the sink"))?;
        }
    }
    Ok(c)
}
