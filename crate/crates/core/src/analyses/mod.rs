//! The value analyses as side-effecting constraint systems over a [`Cfg`].
//!
//! Each analysis is a [`Domain`]: a local state kept per program point and
//! held lockset, plus transfer functions for the synchronization and global
//! access actions. [`AnalysisSystem`] turns a domain into a
//! [`System`](crate::solver::System) whose unknowns are [`Unknown`]s.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ids::{EdgeId, GlobalId, Lockset, MutexId, NodeId};
use crate::lang::{reachable_locksets, transfer_lockset, Action, Cfg, LocksetMap};
use crate::lattice::{AbstractEnv, ValueD, DEFAULT_VALUE_BOUND};
use crate::solver::{
    self, Env, RhsOutput, SolveError, SolverConfig, SolverStats, System, TraceEvent, Violation,
};

mod combined;
mod eval;
mod lock;
mod mine;
mod protection;
mod write;

pub use combined::{Combined, CombinedState};
pub use eval::{eval_expr, guard_passes};
pub use lock::{LockCentered, LockParts, LockState};
pub use mine::{Mine, MineState};
pub use protection::{ProtState, Protection};
pub use write::{WriteCentered, WriteParts, WriteState};


/// Unknowns of the analysis constraint systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unknown {
    /// `[u,S]`: local state at a program point under a held lockset.
    Pp(NodeId, Lockset),
    /// `[g]`: values of `g` visible under a protecting mutex.
    ProtG(GlobalId),
    /// `[g]′`: every value ever written to `g`.
    ProtGUnprot(GlobalId),
    /// `[g,a,S]`: value of `g` published at `unlock(a)` with background `S`.
    SyncG(GlobalId, MutexId, Lockset),
    /// `[g,a,S,w]`: as `SyncG`, split by the lockset `w` of the last write.
    WriteG(GlobalId, MutexId, Lockset, Lockset),
    /// `𝓜[g]` when inferred during solving.
    MProt(GlobalId),
}

/// Collections of unknowns read together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fam {
    Sync(GlobalId),
    Write(GlobalId),
}

/// Value of an unknown. Each unknown kind has a fixed variant.
#[derive(Clone, Debug, PartialEq)]
pub enum Val<S> {
    /// `None` is the unreachable state.
    Pp(Option<S>),
    Vd(ValueD),
    /// Protecting lockset, ordered by `⊇`.
    Locks(Lockset),
}

/// A side-effect emitted by a domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Value(Unknown, ValueD),
    Protect(GlobalId, Lockset),
}

/// Static context shared by all right-hand sides.
#[derive(Clone, Copy, Debug)]
pub struct Ctx<'a> {
    pub cfg: &'a Cfg,
    /// Value set bound.
    pub k: usize,
}

impl Ctx<'_> {
    pub fn all_mutexes(&self) -> Lockset {
        Lockset::full(self.cfg.num_mutexes())
    }

    pub fn is_atomic(&self, m: MutexId) -> bool {
        self.cfg.atomic_global(m).is_some()
    }
}

/// Access to the global part of the current assignment.
pub trait Reads {
    fn value(&mut self, u: &Unknown) -> ValueD;
    fn family(&mut self, f: Fam) -> Vec<(Unknown, ValueD)>;
    /// `𝓜[g]`, from the pre-pass or from the unknown.
    fn protecting(&mut self, g: GlobalId) -> Lockset;
}

/// Per-analysis local state and transfer functions. Actions on locals are
/// handled generically on the environment returned by [`Domain::sigma`].
pub trait Domain {
    type State: Clone + PartialEq + fmt::Debug;

    fn name(&self) -> &'static str;
    /// Whether `𝓜[g]` is inferred during solving.
    fn on_the_fly(&self) -> bool {
        false
    }
    fn init(&self, cx: &Ctx<'_>) -> Self::State;
    fn join_into(&self, cx: &Ctx<'_>, acc: &mut Self::State, v: &Self::State) -> bool;
    fn leq(&self, a: &Self::State, b: &Self::State) -> bool;
    fn sigma<'s>(&self, s: &'s Self::State) -> &'s AbstractEnv;
    fn sigma_mut<'s>(&self, s: &'s mut Self::State) -> &'s mut AbstractEnv;
    /// State at the entry of a created thread.
    fn thread_start(&self, cx: &Ctx<'_>, sigma: AbstractEnv) -> Self::State;
    fn lock(
        &self,
        cx: &Ctx<'_>,
        s: &mut Self::State,
        held: Lockset,
        a: MutexId,
        r: &mut dyn Reads,
    ) -> Vec<Effect>;
    fn unlock(
        &self,
        cx: &Ctx<'_>,
        s: &mut Self::State,
        held: Lockset,
        a: MutexId,
        r: &mut dyn Reads,
    ) -> Vec<Effect>;
    /// Updates everything except `σ g`, which the caller sets to `v`.
    fn write(
        &self,
        cx: &Ctx<'_>,
        s: &mut Self::State,
        held: Lockset,
        g: GlobalId,
        v: &ValueD,
        r: &mut dyn Reads,
    ) -> Vec<Effect>;
    /// The value a read of `g` binds.
    fn read(
        &self,
        cx: &Ctx<'_>,
        s: &Self::State,
        held: Lockset,
        g: GlobalId,
        r: &mut dyn Reads,
    ) -> ValueD;
    /// Printable non-environment components.
    fn fields(&self, cx: &Ctx<'_>, s: &Self::State) -> Vec<(String, String)>;
}

pub(crate) fn join_env(acc: &mut AbstractEnv, v: &AbstractEnv, k: usize) -> bool {
    acc.join_assign(v, k).expect("environments of one program share a shape")
}

pub(crate) fn leq_env(a: &AbstractEnv, b: &AbstractEnv) -> bool {
    a.leq(b).expect("environments of one program share a shape")
}

/// Result of one edge transfer: side-effects and the successor state.
pub struct Transfer<S> {
    pub side: Vec<(Unknown, Val<S>)>,
    pub state: Option<S>,
}

/// Applies the transfer function of edge `e` to state `s` held under `held`.
pub fn transfer<D: Domain>(
    d: &D,
    cx: &Ctx<'_>,
    e: EdgeId,
    held: Lockset,
    s: &D::State,
    r: &mut dyn Reads,
) -> Transfer<D::State> {
    let k = cx.k;
    let mut next = s.clone();
    let mut side = Vec::new();
    let effects = match &cx.cfg.edge(e).action {
        Action::Guard { cond, positive } => {
            let v = eval_expr(cond, d.sigma(s), k);
            if !guard_passes(&v, *positive) {
                return Transfer { side, state: None };
            }
            Vec::new()
        }
        Action::AssignLocal { x, e } => {
            let v = eval_expr(e, d.sigma(s), k);
            d.sigma_mut(&mut next).set_local(*x, v);
            Vec::new()
        }
        Action::Input { x } => {
            d.sigma_mut(&mut next).set_local(*x, ValueD::Top);
            Vec::new()
        }
        Action::Create { x, thread } => {
            let mut child = d.sigma(s).clone();
            child.set_local(crate::ids::LocalId(0), ValueD::Top);
            child.reset_globals();
            let start = d.thread_start(cx, child);
            let entry = cx.cfg.thread_entry(*thread);
            side.push((Unknown::Pp(entry, Lockset::empty()), Val::Pp(Some(start))));
            d.sigma_mut(&mut next).set_local(*x, ValueD::Top);
            Vec::new()
        }
        Action::Lock(a) => d.lock(cx, &mut next, held, *a, r),
        Action::Unlock(a) => d.unlock(cx, &mut next, held, *a, r),
        Action::WriteGlobal { g, e } => {
            let v = eval_expr(e, d.sigma(s), k);
            let eff = d.write(cx, &mut next, held, *g, &v, r);
            d.sigma_mut(&mut next).set_global(*g, v);
            eff
        }
        Action::ReadGlobal { x, g } => {
            let v = d.read(cx, s, held, *g, r);
            d.sigma_mut(&mut next).set_local(*x, v);
            Vec::new()
        }
    };
    for eff in effects {
        side.push(match eff {
            Effect::Value(u, v) => (u, Val::Vd(v)),
            Effect::Protect(g, l) => (Unknown::MProt(g), Val::Locks(l)),
        });
    }
    Transfer { side, state: Some(next) }
}

/// Constraint system of one analysis over one program.
pub struct AnalysisSystem<'a, D: Domain> {
    pub domain: &'a D,
    pub cx: Ctx<'a>,
    pub locksets: &'a LocksetMap,
    rhs: BTreeMap<(NodeId, Lockset), Vec<(EdgeId, Lockset)>>,
}

impl<'a, D: Domain> AnalysisSystem<'a, D> {
    pub fn new(domain: &'a D, cx: Ctx<'a>, locksets: &'a LocksetMap) -> Self {
        let mut rhs: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for (u, s) in locksets.pairs() {
            for &e in cx.cfg.out_edges(u) {
                let edge = cx.cfg.edge(e);
                if let Some(s2) = transfer_lockset(&edge.action, s) {
                    rhs.entry((edge.dst, s2)).or_default().push((e, s));
                }
            }
        }
        AnalysisSystem { domain, cx, locksets, rhs }
    }

    /// Every reachable `[u,S]`.
    pub fn roots(&self) -> Vec<Unknown> {
        self.locksets.pairs().map(|(u, s)| Unknown::Pp(u, s)).collect()
    }

    pub fn watched(&self) -> Vec<Unknown> {
        if self.domain.on_the_fly() {
            self.cx.cfg.global_ids().map(Unknown::MProt).collect()
        } else {
            Vec::new()
        }
    }
}

struct SysReads<'e, 'a, D: Domain> {
    env: &'e mut dyn Env<AnalysisSystem<'a, D>>,
    otf: bool,
    locksets: &'a LocksetMap,
}

impl<D: Domain> Reads for SysReads<'_, '_, D> {
    fn value(&mut self, u: &Unknown) -> ValueD {
        match self.env.get(u) {
            Val::Vd(v) => v,
            v => panic!("{u:?} holds {v:?}"),
        }
    }

    fn family(&mut self, f: Fam) -> Vec<(Unknown, ValueD)> {
        self.env
            .family(&f)
            .into_iter()
            .filter_map(|(u, v)| match v {
                Val::Vd(v) => Some((u, v)),
                _ => None,
            })
            .collect()
    }

    fn protecting(&mut self, g: GlobalId) -> Lockset {
        if !self.otf {
            return self.locksets.protecting(g);
        }
        match self.env.get(&Unknown::MProt(g)) {
            Val::Locks(l) => l,
            v => panic!("MProt({g:?}) holds {v:?}"),
        }
    }
}

impl<D: Domain> System for AnalysisSystem<'_, D> {
    type Key = Unknown;
    type Value = Val<D::State>;
    type Family = Fam;

    fn bottom(&self, key: &Unknown) -> Val<D::State> {
        match key {
            Unknown::Pp(..) => Val::Pp(None),
            Unknown::MProt(_) => Val::Locks(self.cx.all_mutexes()),
            _ => Val::Vd(ValueD::bottom()),
        }
    }

    fn join_into(&self, key: &Unknown, acc: &mut Val<D::State>, v: &Val<D::State>) -> bool {
        match (acc, v) {
            (_, Val::Pp(None)) => false,
            (acc @ Val::Pp(None), v) => {
                *acc = v.clone();
                true
            }
            (Val::Pp(Some(a)), Val::Pp(Some(b))) => self.domain.join_into(&self.cx, a, b),
            (Val::Vd(a), Val::Vd(b)) => a.join_assign(b, self.cx.k),
            (Val::Locks(a), Val::Locks(b)) => crate::lattice::protect_join(a, *b),
            (a, b) => panic!("kind mismatch at {key:?}: {a:?} vs {b:?}"),
        }
    }

    fn leq(&self, key: &Unknown, a: &Val<D::State>, b: &Val<D::State>) -> bool {
        match (a, b) {
            (Val::Pp(None), _) => true,
            (Val::Pp(Some(_)), Val::Pp(None)) => false,
            (Val::Pp(Some(a)), Val::Pp(Some(b))) => self.domain.leq(a, b),
            (Val::Vd(a), Val::Vd(b)) => a.leq(b),
            (Val::Locks(a), Val::Locks(b)) => b.is_subset(*a),
            (a, b) => panic!("kind mismatch at {key:?}: {a:?} vs {b:?}"),
        }
    }

    fn family_of(&self, key: &Unknown) -> Option<Fam> {
        match key {
            Unknown::SyncG(g, ..) => Some(Fam::Sync(*g)),
            Unknown::WriteG(g, ..) => Some(Fam::Write(*g)),
            _ => None,
        }
    }

    fn seeds(&self) -> Vec<(Unknown, Val<D::State>)> {
        let init = self.domain.init(&self.cx);
        Vec::from([(Unknown::Pp(self.cx.cfg.entry(), Lockset::empty()), Val::Pp(Some(init)))])
    }

    fn rhs_count(&self, key: &Unknown) -> usize {
        match key {
            Unknown::Pp(u, s) => self.rhs.get(&(*u, *s)).map_or(0, |v| v.len()),
            _ => 0,
        }
    }

    fn eval(
        &self,
        key: &Unknown,
        idx: usize,
        env: &mut dyn Env<Self>,
    ) -> RhsOutput<Unknown, Val<D::State>> {
        let Unknown::Pp(u, s2) = key else { unreachable!("only program points have rhs") };
        let (e, s) = self.rhs[&(*u, *s2)][idx];
        let src = Unknown::Pp(self.cx.cfg.edge(e).src, s);
        let Val::Pp(Some(state)) = env.get(&src) else {
            return RhsOutput { side: Vec::new(), contribution: Val::Pp(None) };
        };
        let mut r = SysReads { env, otf: self.domain.on_the_fly(), locksets: self.locksets };
        let t = transfer(self.domain, &self.cx, e, s, &state, &mut r);
        RhsOutput { side: t.side, contribution: Val::Pp(t.state) }
    }

    fn describe(&self, key: &Unknown, idx: usize) -> String {
        match key {
            Unknown::Pp(u, s2) => {
                let (e, _) = self.rhs[&(*u, *s2)][idx];
                let edge = self.cx.cfg.edge(e);
                format!("{}: {}", e.0, self.cx.cfg.action_text(&edge.action))
            }
            _ => format!("{key:?}"),
        }
    }
}

/// A solved analysis with typed local states.
pub struct Solved<S> {
    pub states: BTreeMap<(NodeId, Lockset), S>,
    /// All other unknowns with their values.
    pub globals: BTreeMap<Unknown, ValueD>,
    /// `𝓜[g]` as inferred, in on-the-fly mode.
    pub mprot: BTreeMap<GlobalId, Lockset>,
    pub stats: SolverStats,
    /// Post-solution audit of the returned assignment.
    pub violations: Vec<Violation>,
}

/// Restart budget for on-the-fly protecting sets: each restart shrinks some
/// `𝓜[g]` by at least one mutex.
pub fn restart_budget(cfg: &Cfg) -> usize {
    cfg.num_globals() * cfg.num_mutexes() + 1
}

/// Builds and solves the system of `d`, auditing the result.
pub fn solve_domain<D: Domain>(
    d: &D,
    cx: Ctx<'_>,
    locksets: &LocksetMap,
    config: SolverConfig,
    observer: &mut dyn FnMut(TraceEvent<'_, Unknown>),
) -> Result<Solved<D::State>, SolveError> {
    let sys = AnalysisSystem::new(d, cx, locksets);
    let roots = sys.roots();
    let watch = sys.watched();
    let sol = if watch.is_empty() {
        solver::solve_observed(&sys, &roots, config, observer)?
    } else {
        solver::solve_with_restarts(&sys, &roots, &watch, restart_budget(cx.cfg), config, observer)?
    };
    let violations = solver::verify_post_solution(&sys, &sol.values, &roots);
    let mut states = BTreeMap::new();
    let mut globals = BTreeMap::new();
    let mut mprot = BTreeMap::new();
    for (k, v) in sol.values {
        match (k, v) {
            (Unknown::Pp(u, s), Val::Pp(Some(st))) => {
                states.insert((u, s), st);
            }
            (Unknown::Pp(..), _) => {}
            (Unknown::MProt(g), Val::Locks(l)) => {
                mprot.insert(g, l);
            }
            (k, Val::Vd(v)) => {
                globals.insert(k, v);
            }
            (k, v) => panic!("kind mismatch at {k:?}: {v:?}"),
        }
    }
    Ok(Solved { states, globals, mprot, stats: sol.stats, violations })
}

/// The analyses selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    Protection,
    ProtectionOtf,
    Lock,
    Write,
    Combined,
    Mine,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::Protection,
        Analysis::ProtectionOtf,
        Analysis::Lock,
        Analysis::Write,
        Analysis::Combined,
        Analysis::Mine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Protection => "protection",
            Analysis::ProtectionOtf => "protection-otf",
            Analysis::Lock => "lock",
            Analysis::Write => "write",
            Analysis::Combined => "combined",
            Analysis::Mine => "mine",
        }
    }

    pub fn from_name(s: &str) -> Option<Analysis> {
        Analysis::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Read site id to the value bound there, `None` if the site is unreachable.
pub type ReadTable = BTreeMap<String, Option<ValueD>>;

/// One `[u,S]` state in printable form.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDump {
    pub node: NodeId,
    pub lockset: Lockset,
    pub fields: Vec<(String, String)>,
    pub sigma: Vec<(String, ValueD)>,
}

/// Untyped result of running one analysis.
#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub analysis: Analysis,
    pub reads: ReadTable,
    pub stats: SolverStats,
    /// Global unknowns, by printed name.
    pub globals: Vec<(String, ValueD)>,
    pub states: Vec<StateDump>,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub k: usize,
    pub solver: SolverConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { k: DEFAULT_VALUE_BOUND, solver: SolverConfig::default() }
    }
}

/// Formats a lockset with mutex names, e.g. `{a,m_g}`.
pub fn lockset_text(cfg: &Cfg, s: Lockset) -> String {
    let names: Vec<&str> = s.iter().map(|m| cfg.mutex_name(m)).collect();
    format!("{{{}}}", names.join(","))
}

pub fn unknown_text(cfg: &Cfg, u: &Unknown) -> String {
    match u {
        Unknown::Pp(n, s) => format!("[{},{}]", n.0, lockset_text(cfg, *s)),
        Unknown::ProtG(g) => format!("[{}]", cfg.global_name(*g)),
        Unknown::ProtGUnprot(g) => format!("[{}]'", cfg.global_name(*g)),
        Unknown::SyncG(g, a, s) => {
            format!("[{},{},{}]", cfg.global_name(*g), cfg.mutex_name(*a), lockset_text(cfg, *s))
        }
        Unknown::WriteG(g, a, s, w) => format!(
            "[{},{},{},{}]",
            cfg.global_name(*g),
            cfg.mutex_name(*a),
            lockset_text(cfg, *s),
            lockset_text(cfg, *w)
        ),
        Unknown::MProt(g) => format!("M[{}]", cfg.global_name(*g)),
    }
}

/// Join over all reachable locksets of the value bound at each read site.
pub fn read_table<S>(
    cfg: &Cfg,
    states: &BTreeMap<(NodeId, Lockset), S>,
    sigma: impl Fn(&S) -> &AbstractEnv,
    k: usize,
) -> ReadTable {
    let mut out = ReadTable::new();
    for site in cfg.read_sites() {
        let dst = cfg.edge(site.edge).dst;
        let mut acc: Option<ValueD> = None;
        for ((_, _), st) in states.range((dst, Lockset::empty())..).take_while(|((u, _), _)| *u == dst) {
            let v = sigma(st).local(site.x);
            match &mut acc {
                Some(a) => {
                    a.join_assign(v, k);
                }
                None => acc = Some(v.clone()),
            }
        }
        out.insert(site.id, acc);
    }
    out
}

fn finish<D: Domain>(
    analysis: Analysis,
    d: &D,
    cx: Ctx<'_>,
    solved: Solved<D::State>,
) -> AnalysisResult {
    let cfg = cx.cfg;
    let reads = read_table(cfg, &solved.states, |s| d.sigma(s), cx.k);
    let mut globals: Vec<(String, ValueD)> =
        solved.globals.iter().map(|(u, v)| (unknown_text(cfg, u), v.clone())).collect();
    for (g, l) in &solved.mprot {
        globals.push((
            unknown_text(cfg, &Unknown::MProt(*g)),
            ValueD::ints(l.iter().map(|m| m.0 as i64), usize::MAX),
        ));
    }
    let states = solved
        .states
        .iter()
        .map(|((u, s), st)| {
            let sig = d.sigma(st);
            let mut sigma: Vec<(String, ValueD)> = Vec::new();
            for (i, v) in sig.locals().iter().enumerate() {
                sigma.push((cfg.locals[i].clone(), v.clone()));
            }
            for (i, v) in sig.globals().iter().enumerate() {
                sigma.push((cfg.globals[i].clone(), v.clone()));
            }
            StateDump { node: *u, lockset: *s, fields: d.fields(&cx, st), sigma }
        })
        .collect();
    AnalysisResult {
        analysis,
        reads,
        stats: solved.stats,
        globals,
        states,
        violations: solved.violations,
    }
}

/// Runs one analysis end to end on a compiled program.
pub fn run(
    cfg: &Cfg,
    analysis: Analysis,
    opts: RunOptions,
    observer: &mut dyn FnMut(TraceEvent<'_, Unknown>),
) -> Result<AnalysisResult, SolveError> {
    let locksets = reachable_locksets(cfg);
    let cx = Ctx { cfg, k: opts.k };
    macro_rules! go {
        ($d:expr) => {{
            let d = $d;
            let solved = solve_domain(&d, cx, &locksets, opts.solver, observer)?;
            Ok(finish(analysis, &d, cx, solved))
        }};
    }
    match analysis {
        Analysis::Protection => go!(Protection { on_the_fly: false }),
        Analysis::ProtectionOtf => go!(Protection { on_the_fly: true }),
        Analysis::Lock => go!(LockCentered),
        Analysis::Write => go!(WriteCentered),
        Analysis::Combined => go!(Combined),
        Analysis::Mine => go!(Mine),
    }
}

/// Pointwise order between two abstract values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Precision {
    /// Strictly more precise.
    Less,
    Equal,
    Greater,
    Incomparable,
}

impl Precision {
    pub fn symbol(self) -> &'static str {
        match self {
            Precision::Less => "⊏",
            Precision::Equal => "=",
            Precision::Greater => "⊐",
            Precision::Incomparable => "<>",
        }
    }

    pub fn flip(self) -> Precision {
        match self {
            Precision::Less => Precision::Greater,
            Precision::Greater => Precision::Less,
            p => p,
        }
    }
}

pub fn compare_values(a: &Option<ValueD>, b: &Option<ValueD>) -> Precision {
    let bot = ValueD::bottom();
    let a = a.as_ref().unwrap_or(&bot);
    let b = b.as_ref().unwrap_or(&bot);
    match (a.leq(b), b.leq(a)) {
        (true, true) => Precision::Equal,
        (true, false) => Precision::Less,
        (false, true) => Precision::Greater,
        (false, false) => Precision::Incomparable,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("read tables cover different sites: {only_left:?} vs {only_right:?}")]
pub struct SiteMismatch {
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
}

/// Site-wise precision of `t1` relative to `t2`. Unreachable counts as bottom.
pub fn compare_precision(
    t1: &ReadTable,
    t2: &ReadTable,
) -> Result<BTreeMap<String, Precision>, SiteMismatch> {
    let only_left: Vec<String> = t1.keys().filter(|k| !t2.contains_key(*k)).cloned().collect();
    let only_right: Vec<String> = t2.keys().filter(|k| !t1.contains_key(*k)).cloned().collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(SiteMismatch { only_left, only_right });
    }
    Ok(t1.iter().map(|(k, v)| (k.clone(), compare_values(v, &t2[k]))).collect())
}
