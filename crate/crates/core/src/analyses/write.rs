use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::lock::antichain_text;
use super::{join_env, leq_env, Ctx, Domain, Effect, Fam, Reads, Unknown};
use crate::ids::{GlobalId, Lockset, MutexId};
use crate::lattice::{AbstractEnv, MinAntichain, ValueD};

/// Reading from publications `[g,a,S,w]` keyed by the lockset of the write.
#[derive(Clone, Copy, Debug, Default)]
pub struct WriteCentered;

/// Write history per global.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteParts {
    /// `W g`: minimal locksets at the last thread-local write of `g`.
    pub w: Vec<MinAntichain>,
    /// `P g`: minimal locksets held since that write.
    pub p: Vec<MinAntichain>,
}

impl WriteParts {
    pub fn new(num_globals: usize) -> Self {
        WriteParts { w: vec![MinAntichain::empty(); num_globals], p: vec![MinAntichain::full(); num_globals] }
    }

    pub fn join_into(&mut self, o: &WriteParts) -> bool {
        let mut changed = false;
        for (a, b) in self.w.iter_mut().zip(&o.w).chain(self.p.iter_mut().zip(&o.p)) {
            changed |= a.join_assign(b);
        }
        changed
    }

    pub fn leq(&self, o: &WriteParts) -> bool {
        self.w.iter().zip(&o.w).chain(self.p.iter().zip(&o.p)).all(|(a, b)| a.leq(b))
    }

    /// Updates `P` and returns the publications for every global.
    pub fn unlock(&mut self, cx: &Ctx<'_>, sigma: &AbstractEnv, held: Lockset, a: MutexId) -> Vec<Effect> {
        let rest = held.without(a);
        let mut side = Vec::new();
        for g in cx.cfg.global_ids() {
            let i = g.0 as usize;
            self.p[i].insert(rest);
            for w in self.w[i].iter() {
                side.push(Effect::Value(Unknown::WriteG(g, a, rest, w), sigma.global(g).clone()));
            }
        }
        side
    }

    pub fn write(&mut self, held: Lockset, g: GlobalId) {
        let i = g.0 as usize;
        self.w[i] = MinAntichain::singleton(held);
        self.p[i] = MinAntichain::singleton(held);
    }

    /// Some lockset held since the last own write of `g` is disjoint from `w`.
    pub fn may_follow(&self, g: GlobalId, w: Lockset) -> bool {
        self.p[g.0 as usize].iter().any(|s| s.is_disjoint(w))
    }

    /// Conditions on `[g,a,S′,w]` for reading under `held`.
    pub fn admits(&self, g: GlobalId, held: Lockset, a: MutexId, s2: Lockset, w: Lockset) -> bool {
        held.contains(a)
            && held.is_disjoint(s2)
            && self.may_follow(g, w)
            && self.p[g.0 as usize].iter().any(|s| !s.contains(a))
    }

    pub fn fields(&self, cx: &Ctx<'_>) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for g in cx.cfg.global_ids() {
            out.push((format!("W {}", cx.cfg.global_name(g)), antichain_text(cx, &self.w[g.0 as usize])));
        }
        for g in cx.cfg.global_ids() {
            out.push((format!("P {}", cx.cfg.global_name(g)), antichain_text(cx, &self.p[g.0 as usize])));
        }
        out
    }
}

/// The `d_g` part of a read: joins admitted publications.
pub(crate) fn write_reads(
    cx: &Ctx<'_>,
    parts: &WriteParts,
    held: Lockset,
    g: GlobalId,
    members: &[(Unknown, ValueD)],
) -> ValueD {
    let mut d = ValueD::bottom();
    for (u, v) in members {
        if let Unknown::WriteG(_, a, s2, w) = *u {
            if parts.admits(g, held, a, s2, w) {
                d.join_assign(v, cx.k);
            }
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteState {
    pub parts: WriteParts,
    pub sigma: AbstractEnv,
}

impl Domain for WriteCentered {
    type State = WriteState;

    fn name(&self) -> &'static str {
        "write"
    }

    fn init(&self, cx: &Ctx<'_>) -> WriteState {
        WriteState {
            parts: WriteParts::new(cx.cfg.num_globals()),
            sigma: AbstractEnv::initial(cx.cfg.num_locals(), cx.cfg.num_globals()),
        }
    }

    fn join_into(&self, cx: &Ctx<'_>, acc: &mut WriteState, v: &WriteState) -> bool {
        acc.parts.join_into(&v.parts) | join_env(&mut acc.sigma, &v.sigma, cx.k)
    }

    fn leq(&self, a: &WriteState, b: &WriteState) -> bool {
        a.parts.leq(&b.parts) && leq_env(&a.sigma, &b.sigma)
    }

    fn sigma<'s>(&self, s: &'s WriteState) -> &'s AbstractEnv {
        &s.sigma
    }

    fn sigma_mut<'s>(&self, s: &'s mut WriteState) -> &'s mut AbstractEnv {
        &mut s.sigma
    }

    fn thread_start(&self, cx: &Ctx<'_>, sigma: AbstractEnv) -> WriteState {
        WriteState { parts: WriteParts::new(cx.cfg.num_globals()), sigma }
    }

    fn lock(&self, _: &Ctx<'_>, _: &mut WriteState, _: Lockset, _: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        Vec::new()
    }

    fn unlock(&self, cx: &Ctx<'_>, s: &mut WriteState, held: Lockset, a: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        s.parts.unlock(cx, &s.sigma, held, a)
    }

    fn write(
        &self,
        _: &Ctx<'_>,
        s: &mut WriteState,
        held: Lockset,
        g: GlobalId,
        _: &ValueD,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        s.parts.write(held, g);
        Vec::new()
    }

    fn read(&self, cx: &Ctx<'_>, s: &WriteState, held: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        let members = r.family(Fam::Write(g));
        s.sigma.global(g).join(&write_reads(cx, &s.parts, held, g, &members), cx.k)
    }

    fn fields(&self, cx: &Ctx<'_>, s: &WriteState) -> Vec<(String, String)> {
        s.parts.fields(cx)
    }
}
