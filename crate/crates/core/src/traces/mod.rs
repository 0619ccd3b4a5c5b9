//! Concrete local-trace semantics.
//!
//! A [`LocalTrace`] is the DAG of all events causally preceding the current
//! configuration of one thread, the *ego* thread. Threads are identified by
//! their creation path, so thread ids are unique per creation history. Traces
//! are enumerated up to a bound on the number of events per thread, either
//! by collecting everything into one set ([`enumerate_global`]) or through
//! per-point and per-mutex unknowns solved by the generic solver
//! ([`enumerate_local`]).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ids::{EdgeId, LocalId, MutexId, NodeId};
use crate::lang::{Action, BinOp, Cfg, Expr, LExpr, UnOp};

mod enumerate;
mod query;
mod step;
mod validate;

pub use enumerate::{enumerate_global, enumerate_local, LKey, LocalSolution, TraceSet};
pub use query::{
    beta_lock, beta_write, check_written, concrete_read_table, covers, downset, reads_of, trace_to_dot, ConcreteReads, LockBeta,
    TraceQueries, WriteBeta,
};
pub use step::{init_trace, Semantics, StepResult};

/// Bounds and inputs of the concrete semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceConfig {
    /// Maximum number of events per thread.
    pub bound: usize,
    /// Maximum number of distinct traces.
    pub cap: usize,
    /// Values produced by `input()`.
    pub inputs: Vec<i64>,
}

pub const DEFAULT_TRACE_BOUND: usize = 32;
pub const DEFAULT_TRACE_CAP: usize = 100_000;

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { bound: DEFAULT_TRACE_BOUND, cap: DEFAULT_TRACE_CAP, inputs: alloc::vec![0, 1] }
    }
}
pub use validate::{validate, Closure};


/// A thread id: the path of creation events leading to the thread. The root
/// thread has the empty path; a thread created at event `j` of thread `p` has
/// id `p ++ [j]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ThreadId(pub Vec<u32>);

impl ThreadId {
    pub fn root() -> Self {
        ThreadId(Vec::new())
    }

    pub fn child(&self, j: u32) -> Self {
        let mut p = self.0.clone();
        p.push(j);
        ThreadId(p)
    }

    pub fn parent(&self) -> Option<(ThreadId, u32)> {
        let (last, rest) = self.0.split_last()?;
        Some((ThreadId(rest.to_vec()), *last))
    }
}

impl fmt::Debug for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0")?;
        for j in &self.0 {
            write!(f, ".{j}")?;
        }
        Ok(())
    }
}

impl fmt::Display for ThreadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A concrete value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CVal {
    Int(i64),
    Tid(ThreadId),
}

impl fmt::Debug for CVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CVal::Int(i) => write!(f, "{i}"),
            CVal::Tid(t) => write!(f, "tid {t}"),
        }
    }
}

impl fmt::Display for CVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Values of all locals, indexed by [`LocalId`]; `self` is at index 0.
pub type ConcreteState = Vec<CVal>;

/// One node `(j, u, σ)` of a raw thread trace.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceNode {
    pub point: NodeId,
    pub state: ConcreteState,
}

/// Raw trace of one thread: `steps[j]` leads from `nodes[j]` to `nodes[j+1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreadRun {
    pub nodes: Vec<TraceNode>,
    pub steps: Vec<EdgeId>,
}

/// Node `j` of thread `thread`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub thread: ThreadId,
    pub index: u32,
}

impl NodeRef {
    pub fn new(thread: ThreadId, index: usize) -> Self {
        NodeRef { thread, index: index as u32 }
    }

    pub fn root() -> Self {
        NodeRef { thread: ThreadId::root(), index: 0 }
    }
}

/// A local trace. The create order is implicit in the thread ids: node `j`
/// of thread `p` creates thread `p ++ [j]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalTrace {
    pub ego: ThreadId,
    pub threads: BTreeMap<ThreadId, ThreadRun>,
    /// Locking orders `(a, from, to)`: `from` is the root or a node reached by
    /// `unlock(a)`, `to` a node reached by `lock(a)`.
    pub chains: BTreeSet<(MutexId, NodeRef, NodeRef)>,
}

impl LocalTrace {
    pub fn ego_run(&self) -> &ThreadRun {
        &self.threads[&self.ego]
    }

    pub fn sink(&self) -> &TraceNode {
        self.ego_run().nodes.last().expect("threads have at least one node")
    }

    pub fn sink_ref(&self) -> NodeRef {
        NodeRef::new(self.ego.clone(), self.ego_run().nodes.len() - 1)
    }

    pub fn loc(&self) -> NodeId {
        self.sink().point
    }

    /// Edge of the ego thread's last action, if any.
    pub fn last(&self) -> Option<EdgeId> {
        self.ego_run().steps.last().copied()
    }

    pub fn last_action<'c>(&self, cfg: &'c Cfg) -> Option<&'c Action> {
        self.last().map(|e| &cfg.edge(e).action)
    }

    pub fn node(&self, r: &NodeRef) -> Option<&TraceNode> {
        self.threads.get(&r.thread)?.nodes.get(r.index as usize)
    }

    /// The edge whose target is `r`, if `r` is not a thread start.
    pub fn incoming(&self, r: &NodeRef) -> Option<EdgeId> {
        let j = r.index as usize;
        if j == 0 {
            return None;
        }
        self.threads.get(&r.thread)?.steps.get(j - 1).copied()
    }

    pub fn num_nodes(&self) -> usize {
        self.threads.values().map(|r| r.nodes.len()).sum()
    }

    /// Largest number of events of any thread.
    pub fn max_events(&self) -> usize {
        self.threads.values().map(|r| r.steps.len()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("internal invariant breach: {0}")]
    Invalid(String),
    #[error("trace cap of {cap} exceeded")]
    Cap { cap: usize },
    #[error("global `{0}` is read but never written")]
    NeverWritten(String),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolveError),
}

fn truth(b: bool) -> CVal {
    CVal::Int(b as i64)
}

/// Evaluates `e` over concrete locals. Arithmetic or ordering on thread ids
/// is an error; equality on thread ids is structural.
pub fn eval_concrete(e: &LExpr, sigma: &[CVal]) -> Result<CVal, TraceError> {
    Ok(match e {
        Expr::Int(i) => CVal::Int(*i),
        Expr::Var(x) => sigma[x.0 as usize].clone(),
        Expr::Unary(op, a) => match (op, eval_concrete(a, sigma)?) {
            (UnOp::Neg, CVal::Int(i)) => CVal::Int(i.wrapping_neg()),
            (UnOp::Not, CVal::Int(i)) => truth(i == 0),
            (op, v) => return Err(TraceError::Eval(alloc::format!("{op:?} applied to {v}"))),
        },
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval_concrete(a, sigma)?, eval_concrete(b, sigma)?);
            match (op, &a, &b) {
                (BinOp::Eq, _, _) => truth(a == b),
                (BinOp::Ne, _, _) => truth(a != b),
                (_, CVal::Int(x), CVal::Int(y)) => match op {
                    BinOp::Add => CVal::Int(x.wrapping_add(*y)),
                    BinOp::Sub => CVal::Int(x.wrapping_sub(*y)),
                    BinOp::Mul => CVal::Int(x.wrapping_mul(*y)),
                    BinOp::Lt => truth(x < y),
                    BinOp::Le => truth(x <= y),
                    BinOp::Eq | BinOp::Ne => unreachable!(),
                },
                _ => {
                    return Err(TraceError::Eval(alloc::format!(
                        "`{}` applied to {a} and {b}",
                        op.symbol()
                    )))
                }
            }
        }
    })
}

/// Whether a guard of the given polarity passes on value `v`. Thread ids
/// count as non-zero.
pub fn concrete_guard(v: &CVal, positive: bool) -> bool {
    match v {
        CVal::Int(i) => (*i != 0) == positive,
        CVal::Tid(_) => positive,
    }
}

pub(crate) fn set_local(sigma: &[CVal], x: LocalId, v: CVal) -> ConcreteState {
    let mut s = sigma.to_vec();
    s[x.0 as usize] = v;
    s
}

/// The mutex a lock edge acquires, if `e` is one.
pub(crate) fn lock_of(cfg: &Cfg, e: EdgeId) -> Option<MutexId> {
    match cfg.edge(e).action {
        Action::Lock(a) => Some(a),
        _ => None,
    }
}

pub(crate) fn unlock_of(cfg: &Cfg, e: EdgeId) -> Option<MutexId> {
    match cfg.edge(e).action {
        Action::Unlock(a) => Some(a),
        _ => None,
    }
}
