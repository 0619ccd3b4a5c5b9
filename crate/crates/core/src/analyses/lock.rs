use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{join_env, leq_env, Ctx, Domain, Effect, Fam, Reads, Unknown};
use crate::ids::{GlobalId, GlobalSet, Lockset, MutexId};
use crate::lattice::{AbstractEnv, MinAntichain, ValueD};

/// Lazy reading from per-mutex publications `[g,a,S]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LockCentered;

/// Acquisition history per mutex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockParts {
    /// `V a`: globals definitely written since `a` was last acquired.
    pub v: Vec<GlobalSet>,
    /// `L a`: minimal background locksets at the last `lock(a)`.
    pub l: Vec<MinAntichain>,
}

impl LockParts {
    pub fn new(num_mutexes: usize) -> Self {
        LockParts { v: vec![GlobalSet::empty(); num_mutexes], l: vec![MinAntichain::empty(); num_mutexes] }
    }

    pub fn join_into(&mut self, o: &LockParts) -> bool {
        let mut changed = false;
        for (a, b) in self.v.iter_mut().zip(&o.v) {
            let n = a.intersection(*b);
            changed |= n != *a;
            *a = n;
        }
        for (a, b) in self.l.iter_mut().zip(&o.l) {
            changed |= a.join_assign(b);
        }
        changed
    }

    pub fn leq(&self, o: &LockParts) -> bool {
        self.v.iter().zip(&o.v).all(|(a, b)| b.is_subset(*a))
            && self.l.iter().zip(&o.l).all(|(a, b)| a.leq(b))
    }

    pub fn lock(&mut self, held: Lockset, a: MutexId) {
        let i = a.0 as usize;
        self.v[i] = GlobalSet::empty();
        self.l[i] = MinAntichain::singleton(held);
    }

    pub fn write(&mut self, g: GlobalId) {
        for v in &mut self.v {
            v.insert(g);
        }
    }

    /// Whether a publication of `g` at `unlock(a)` with background `s2` may
    /// be visible.
    pub fn admits(&self, g: GlobalId, a: MutexId, s2: Lockset) -> bool {
        let i = a.0 as usize;
        !self.v[i].contains(g) && self.l[i].iter().any(|b| b.is_disjoint(s2))
    }

    pub fn fields(&self, cx: &Ctx<'_>) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for a in cx.cfg.mutex_ids() {
            let i = a.0 as usize;
            let gs: Vec<&str> = self.v[i].iter().map(|g| cx.cfg.global_name(g)).collect();
            out.push((format!("V {}", cx.cfg.mutex_name(a)), format!("{{{}}}", gs.join(","))));
        }
        for a in cx.cfg.mutex_ids() {
            out.push((format!("L {}", cx.cfg.mutex_name(a)), antichain_text(cx, &self.l[a.0 as usize])));
        }
        out
    }
}

pub(crate) fn antichain_text(cx: &Ctx<'_>, f: &MinAntichain) -> String {
    let parts: Vec<String> = f.iter().map(|s| super::lockset_text(cx.cfg, s)).collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockState {
    pub parts: LockParts,
    pub sigma: AbstractEnv,
}

impl Domain for LockCentered {
    type State = LockState;

    fn name(&self) -> &'static str {
        "lock"
    }

    fn init(&self, cx: &Ctx<'_>) -> LockState {
        LockState {
            parts: LockParts::new(cx.cfg.num_mutexes()),
            sigma: AbstractEnv::initial(cx.cfg.num_locals(), cx.cfg.num_globals()),
        }
    }

    fn join_into(&self, cx: &Ctx<'_>, acc: &mut LockState, v: &LockState) -> bool {
        acc.parts.join_into(&v.parts) | join_env(&mut acc.sigma, &v.sigma, cx.k)
    }

    fn leq(&self, a: &LockState, b: &LockState) -> bool {
        a.parts.leq(&b.parts) && leq_env(&a.sigma, &b.sigma)
    }

    fn sigma<'s>(&self, s: &'s LockState) -> &'s AbstractEnv {
        &s.sigma
    }

    fn sigma_mut<'s>(&self, s: &'s mut LockState) -> &'s mut AbstractEnv {
        &mut s.sigma
    }

    fn thread_start(&self, cx: &Ctx<'_>, sigma: AbstractEnv) -> LockState {
        LockState { parts: LockParts::new(cx.cfg.num_mutexes()), sigma }
    }

    fn lock(&self, _: &Ctx<'_>, s: &mut LockState, held: Lockset, a: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        s.parts.lock(held, a);
        Vec::new()
    }

    fn unlock(&self, cx: &Ctx<'_>, s: &mut LockState, held: Lockset, a: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        let rest = held.without(a);
        cx.cfg
            .global_ids()
            .map(|g| Effect::Value(Unknown::SyncG(g, a, rest), s.sigma.global(g).clone()))
            .collect()
    }

    fn write(
        &self,
        _: &Ctx<'_>,
        s: &mut LockState,
        _: Lockset,
        g: GlobalId,
        _: &ValueD,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        s.parts.write(g);
        Vec::new()
    }

    fn read(&self, cx: &Ctx<'_>, s: &LockState, _: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        let mut d = s.sigma.global(g).clone();
        for (u, v) in r.family(Fam::Sync(g)) {
            if let Unknown::SyncG(_, a, s2) = u {
                if s.parts.admits(g, a, s2) {
                    d.join_assign(&v, cx.k);
                }
            }
        }
        d
    }

    fn fields(&self, cx: &Ctx<'_>, s: &LockState) -> Vec<(String, String)> {
        s.parts.fields(cx)
    }
}
