use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::ast::{atomicity_mutex_name, Expr, Pos, Program, Stmt, StmtKind};
use super::parser::{MAIN, SELF};
use crate::ids::{EdgeId, GlobalId, LocalId, MutexId, NodeId, ThreadDefId};

/// Expression over resolved locals.
pub type LExpr = Expr<LocalId>;

/// Edge label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    /// Passable iff `cond` is non-zero (`positive`) or zero (`!positive`).
    Guard { cond: LExpr, positive: bool },
    AssignLocal { x: LocalId, e: LExpr },
    Input { x: LocalId },
    Create { x: LocalId, thread: ThreadDefId },
    Lock(MutexId),
    Unlock(MutexId),
    WriteGlobal { g: GlobalId, e: LExpr },
    ReadGlobal { x: LocalId, g: GlobalId },
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub action: Action,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub thread: ThreadDefId,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct ThreadInfo {
    pub name: String,
    pub entry: NodeId,
    pub pos: Pos,
}

/// A global-read edge with a stable identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadSite {
    pub id: String,
    pub edge: EdgeId,
    pub thread: ThreadDefId,
    pub x: LocalId,
    pub g: GlobalId,
    pub pos: Pos,
}

/// Control-flow graphs of all threads of an instrumented program.
#[derive(Clone, Debug)]
pub struct Cfg {
    pub globals: Vec<String>,
    /// `locals[0]` is `self`.
    pub locals: Vec<String>,
    /// User mutexes first, then the atomicity mutex of each global.
    pub mutexes: Vec<String>,
    pub threads: Vec<ThreadInfo>,
    pub nodes: Vec<NodeInfo>,
    pub edges: Vec<Edge>,
    pub main: ThreadDefId,
    out: Vec<Vec<EdgeId>>,
    inc: Vec<Vec<EdgeId>>,
    num_user_mutexes: usize,
}

impl Cfg {
    pub fn num_globals(&self) -> usize {
        self.globals.len()
    }

    pub fn num_locals(&self) -> usize {
        self.locals.len()
    }

    pub fn num_mutexes(&self) -> usize {
        self.mutexes.len()
    }

    pub fn global_ids(&self) -> impl Iterator<Item = GlobalId> {
        (0..self.globals.len() as u32).map(GlobalId)
    }

    pub fn mutex_ids(&self) -> impl Iterator<Item = MutexId> {
        (0..self.mutexes.len() as u32).map(MutexId)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0 as usize]
    }

    pub fn out_edges(&self, u: NodeId) -> &[EdgeId] {
        &self.out[u.0 as usize]
    }

    pub fn in_edges(&self, u: NodeId) -> &[EdgeId] {
        &self.inc[u.0 as usize]
    }

    pub fn entry(&self) -> NodeId {
        self.threads[self.main.0 as usize].entry
    }

    pub fn thread_entry(&self, t: ThreadDefId) -> NodeId {
        self.threads[t.0 as usize].entry
    }

    /// The dedicated mutex `m_g`.
    pub fn atomic_mutex(&self, g: GlobalId) -> MutexId {
        MutexId((self.num_user_mutexes + g.0 as usize) as u32)
    }

    /// The global whose atomicity mutex is `m`, if any.
    pub fn atomic_global(&self, m: MutexId) -> Option<GlobalId> {
        let i = m.0 as usize;
        (i >= self.num_user_mutexes && i < self.mutexes.len())
            .then(|| GlobalId((i - self.num_user_mutexes) as u32))
    }

    pub fn global_name(&self, g: GlobalId) -> &str {
        &self.globals[g.0 as usize]
    }

    pub fn local_name(&self, x: LocalId) -> &str {
        &self.locals[x.0 as usize]
    }

    pub fn mutex_name(&self, m: MutexId) -> &str {
        &self.mutexes[m.0 as usize]
    }

    pub fn thread_name(&self, t: ThreadDefId) -> &str {
        &self.threads[t.0 as usize].name
    }

    pub fn mutex_by_name(&self, name: &str) -> Option<MutexId> {
        self.mutexes.iter().position(|m| m == name).map(|i| MutexId(i as u32))
    }

    pub fn global_by_name(&self, name: &str) -> Option<GlobalId> {
        self.globals.iter().position(|m| m == name).map(|i| GlobalId(i as u32))
    }

    pub fn local_by_name(&self, name: &str) -> Option<LocalId> {
        self.locals.iter().position(|m| m == name).map(|i| LocalId(i as u32))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// All global reads, in edge order, with ids `thread:x=g` (suffixed
    /// `#2`, `#3`, ... when the same text occurs again in a thread).
    pub fn read_sites(&self) -> Vec<ReadSite> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for e in self.edge_ids() {
            let edge = self.edge(e);
            if let Action::ReadGlobal { x, g } = edge.action {
                let thread = self.nodes[edge.src.0 as usize].thread;
                let base =
                    format!("{}:{}={}", self.thread_name(thread), self.local_name(x), self.global_name(g));
                let n = seen.entry(base.clone()).or_insert(0);
                *n += 1;
                let id = if *n == 1 { base } else { format!("{base}#{n}") };
                out.push(ReadSite { id, edge: e, thread, x, g, pos: edge.pos });
            }
        }
        out
    }

    pub fn action_text(&self, a: &Action) -> String {
        let name = |x: &LocalId| String::from(self.local_name(*x));
        match a {
            Action::Guard { cond, positive } => {
                let c = cond.map_vars(&mut |x| name(x));
                if *positive {
                    format!("[{c}]")
                } else {
                    format!("[!({c})]")
                }
            }
            Action::AssignLocal { x, e } => {
                format!("{} = {}", self.local_name(*x), e.map_vars(&mut |x| name(x)))
            }
            Action::Input { x } => format!("{} = input()", self.local_name(*x)),
            Action::Create { x, thread } => {
                format!("{} = create({})", self.local_name(*x), self.thread_name(*thread))
            }
            Action::Lock(m) => format!("lock({})", self.mutex_name(*m)),
            Action::Unlock(m) => format!("unlock({})", self.mutex_name(*m)),
            Action::WriteGlobal { g, e } => {
                format!("{} = {}", self.global_name(*g), e.map_vars(&mut |x| name(x)))
            }
            Action::ReadGlobal { x, g } => {
                format!("{} = {}", self.local_name(*x), self.global_name(*g))
            }
        }
    }

    /// Graphviz rendering, one cluster per thread.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph cfg {\n  node [shape=circle, fontsize=10];\n");
        for (ti, t) in self.threads.iter().enumerate() {
            s.push_str(&format!("  subgraph cluster_{ti} {{\n    label=\"{}\";\n", t.name));
            for (ni, n) in self.nodes.iter().enumerate() {
                if n.thread.0 as usize == ti {
                    s.push_str(&format!("    u{ni} [label=\"u{ni}\"];\n"));
                }
            }
            s.push_str("  }\n");
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  u{} -> u{} [label=\"{}\"];\n",
                e.src.0,
                e.dst.0,
                self.action_text(&e.action).replace('"', "\\\"")
            ));
        }
        s.push_str("}\n");
        s
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ti, t) in self.threads.iter().enumerate() {
            writeln!(f, "thread {} (entry u{}):", t.name, t.entry.0)?;
            for e in &self.edges {
                if self.nodes[e.src.0 as usize].thread.0 as usize == ti {
                    writeln!(f, "  u{} -> u{}: {}", e.src.0, e.dst.0, self.action_text(&e.action))?;
                }
            }
        }
        Ok(())
    }
}

struct Builder<'p> {
    prog: &'p Program,
    locals: Vec<String>,
    mutexes: Vec<String>,
    nodes: Vec<NodeInfo>,
    edges: Vec<Edge>,
    thread: ThreadDefId,
}

impl Builder<'_> {
    fn local(&mut self, name: &str) -> LocalId {
        if let Some(i) = self.locals.iter().position(|l| l == name) {
            return LocalId(i as u32);
        }
        self.locals.push(String::from(name));
        LocalId(self.locals.len() as u32 - 1)
    }

    fn expr(&mut self, e: &Expr) -> LExpr {
        e.map_vars(&mut |v| self.local(v))
    }

    fn global(&self, g: &str) -> GlobalId {
        GlobalId(self.prog.globals.iter().position(|h| h == g).expect("validated global") as u32)
    }

    fn mutex(&self, m: &str) -> MutexId {
        MutexId(self.mutexes.iter().position(|n| n == m).expect("collected mutex") as u32)
    }

    fn node(&mut self, pos: Pos) -> NodeId {
        self.nodes.push(NodeInfo { thread: self.thread, pos });
        NodeId(self.nodes.len() as u32 - 1)
    }

    fn edge(&mut self, src: NodeId, action: Action, dst: NodeId, pos: Pos) {
        self.edges.push(Edge { src, dst, action, pos });
    }

    /// Lowers `stmts` starting at `cur`. The last statement ends in `exit`
    /// when given, otherwise in a fresh node. Returns the end node.
    fn block(&mut self, stmts: &[Stmt], cur: NodeId, exit: Option<NodeId>) -> NodeId {
        let mut cur = cur;
        for (i, s) in stmts.iter().enumerate() {
            let target = if i + 1 == stmts.len() { exit } else { None };
            cur = self.stmt(s, cur, target);
        }
        cur
    }

    fn stmt(&mut self, s: &Stmt, cur: NodeId, exit: Option<NodeId>) -> NodeId {
        let pos = s.pos;
        let simple = |b: &mut Self, a: Action| {
            let dst = exit.unwrap_or_else(|| b.node(pos));
            b.edge(cur, a, dst, pos);
            dst
        };
        match &s.kind {
            StmtKind::AssignLocal { x, e } => {
                let e = self.expr(e);
                let x = self.local(x);
                simple(self, Action::AssignLocal { x, e })
            }
            StmtKind::WriteGlobal { g, e } => {
                let e = self.expr(e);
                let g = self.global(g);
                simple(self, Action::WriteGlobal { g, e })
            }
            StmtKind::ReadGlobal { x, g } => {
                let x = self.local(x);
                let g = self.global(g);
                simple(self, Action::ReadGlobal { x, g })
            }
            StmtKind::Create { x, thread } => {
                let x = self.local(x);
                let t = self.prog.threads.iter().position(|t| t.name == *thread).expect("validated");
                simple(self, Action::Create { x, thread: ThreadDefId(t as u32) })
            }
            StmtKind::Input { x } => {
                let x = self.local(x);
                simple(self, Action::Input { x })
            }
            StmtKind::Lock(m) => {
                let m = self.mutex(m);
                simple(self, Action::Lock(m))
            }
            StmtKind::Unlock(m) => {
                let m = self.mutex(m);
                simple(self, Action::Unlock(m))
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.expr(cond);
                let join = exit.unwrap_or_else(|| self.node(pos));
                for (branch, positive) in [(then_branch, true), (else_branch, false)] {
                    let guard = Action::Guard { cond: c.clone(), positive };
                    if branch.is_empty() {
                        self.edge(cur, guard, join, pos);
                    } else {
                        let start = self.node(branch[0].pos);
                        self.edge(cur, guard, start, pos);
                        self.block(branch, start, Some(join));
                    }
                }
                join
            }
            StmtKind::While { cond, body } => {
                let c = self.expr(cond);
                let head = cur;
                let after = exit.unwrap_or_else(|| self.node(pos));
                let enter = Action::Guard { cond: c.clone(), positive: true };
                if body.is_empty() {
                    self.edge(head, enter, head, pos);
                } else {
                    let start = self.node(body[0].pos);
                    self.edge(head, enter, start, pos);
                    self.block(body, start, Some(head));
                }
                self.edge(head, Action::Guard { cond: c, positive: false }, after, pos);
                after
            }
        }
    }
}

fn collect_mutexes(p: &Program) -> Vec<String> {
    let mut user: Vec<String> = Vec::new();
    let reserved: Vec<String> = p.globals.iter().map(|g| atomicity_mutex_name(g)).collect();
    p.walk(|_, s| {
        if let StmtKind::Lock(m) | StmtKind::Unlock(m) = &s.kind {
            if !reserved.contains(m) && !user.contains(m) {
                user.push(m.clone());
            }
        }
    });
    user
}

/// Lowers structured control flow to per-thread graphs.
///
/// Node ids are assigned breadth-first from each thread entry, threads in
/// declaration order, successors in source order.
pub fn build_cfg(p: &Program) -> Cfg {
    let user = collect_mutexes(p);
    let num_user_mutexes = user.len();
    let mut mutexes = user;
    mutexes.extend(p.globals.iter().map(|g| atomicity_mutex_name(g)));
    let mut b = Builder {
        prog: p,
        locals: vec![String::from(SELF)],
        mutexes,
        nodes: Vec::new(),
        edges: Vec::new(),
        thread: ThreadDefId(0),
    };
    let mut entries = Vec::new();
    for (ti, t) in p.threads.iter().enumerate() {
        b.thread = ThreadDefId(ti as u32);
        let entry = b.node(t.pos);
        entries.push(entry);
        b.block(&t.body, entry, None);
    }

    // renumber breadth-first in source order
    let n = b.nodes.len();
    let mut out_raw: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in b.edges.iter().enumerate() {
        out_raw[e.src.0 as usize].push(i);
    }
    let mut map = vec![u32::MAX; n];
    let mut next = 0u32;
    for &entry in &entries {
        let mut q = VecDeque::from([entry.0 as usize]);
        map[entry.0 as usize] = next;
        next += 1;
        while let Some(u) = q.pop_front() {
            for &ei in &out_raw[u] {
                let v = b.edges[ei].dst.0 as usize;
                if map[v] == u32::MAX {
                    map[v] = next;
                    next += 1;
                    q.push_back(v);
                }
            }
        }
    }
    // every node is reachable from its thread entry by construction
    debug_assert!(map.iter().all(|&m| m != u32::MAX));
    let mut nodes = vec![NodeInfo { thread: ThreadDefId(0), pos: Pos::default() }; n];
    for (old, info) in b.nodes.into_iter().enumerate() {
        nodes[map[old] as usize] = info;
    }
    let mut edges: Vec<Edge> = b
        .edges
        .into_iter()
        .map(|mut e| {
            e.src = NodeId(map[e.src.0 as usize]);
            e.dst = NodeId(map[e.dst.0 as usize]);
            e
        })
        .collect();
    // stable sort keeps source order among the out-edges of a node
    edges.sort_by_key(|e| e.src);
    let mut out = vec![Vec::new(); n];
    let mut inc = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        out[e.src.0 as usize].push(EdgeId(i as u32));
        inc[e.dst.0 as usize].push(EdgeId(i as u32));
    }
    let threads = p
        .threads
        .iter()
        .zip(&entries)
        .map(|(t, e)| ThreadInfo { name: t.name.clone(), entry: NodeId(map[e.0 as usize]), pos: t.pos })
        .collect();
    let main = ThreadDefId(p.threads.iter().position(|t| t.name == MAIN).expect("validated") as u32);
    Cfg {
        globals: p.globals.clone(),
        locals: b.locals,
        mutexes: b.mutexes,
        threads,
        nodes,
        edges,
        main,
        out,
        inc,
        num_user_mutexes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{instrument_atomicity, parse};

    fn cfg(src: &str) -> Cfg {
        build_cfg(&instrument_atomicity(&parse(src).unwrap()).unwrap())
    }

    #[test]
    fn while_lowering() {
        let c = cfg("thread main { x = 1; while (x) { x = x - 1; } }");
        let head = c.edges[0].dst;
        let guards: Vec<_> = c
            .out_edges(head)
            .iter()
            .filter_map(|&e| match &c.edge(e).action {
                Action::Guard { positive, .. } => Some(*positive),
                _ => None,
            })
            .collect();
        assert_eq!(guards, [true, false]);
        // the body returns to the loop head
        assert!(c.edges.iter().any(|e| e.dst == head && matches!(e.action, Action::AssignLocal { .. }) && e.src != c.entry()));
    }

    #[test]
    fn example_two_main_edges() {
        let c = cfg(
            "global g; thread main { x = create(t); g = 1; } thread t { y = 1; g = 2; }",
        );
        let mut u = c.entry();
        let mut texts = Vec::new();
        while let Some(&e) = c.out_edges(u).first() {
            texts.push(c.action_text(&c.edge(e).action));
            u = c.edge(e).dst;
        }
        assert_eq!(texts, ["x = create(t)", "lock(m_g)", "g = 1", "unlock(m_g)"]);
    }

    #[test]
    fn empty_thread() {
        let c = cfg("thread main { }");
        assert!(c.out_edges(c.entry()).is_empty());
        assert_eq!(c.nodes.len(), 1);
    }

    #[test]
    fn separate_critical_sections() {
        let c = cfg("global g; thread main { x = g; g = x; }");
        let m = c.mutex_by_name("m_g").unwrap();
        let n = c
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Lock(a) | Action::Unlock(a) if a == m))
            .count();
        assert_eq!(n, 4);
    }

    #[test]
    fn read_site_ids() {
        let c = cfg("global g; thread main { x = g; x = g; y = g; }");
        let ids: Vec<_> = c.read_sites().into_iter().map(|s| s.id).collect();
        assert_eq!(ids, ["main:x=g", "main:x=g#2", "main:y=g"]);
    }

    #[test]
    fn nodes_numbered_in_source_order() {
        let c = cfg("thread main { a = 1; b = 2; c = 3; }");
        for (i, e) in c.edges.iter().enumerate() {
            assert_eq!(e.src.0 as usize, i);
            assert_eq!(e.dst.0 as usize, i + 1);
        }
    }
}
