use alloc::string::String;
use alloc::vec::Vec;

use super::write::write_reads;
use super::{join_env, leq_env, Ctx, Domain, Effect, Fam, LockParts, Reads, Unknown, WriteParts};
use crate::ids::{GlobalId, Lockset, MutexId};
use crate::lattice::{AbstractEnv, ValueD};

/// Tracks both acquisition and write histories and reads the meet of what
/// each admits.
#[derive(Clone, Copy, Debug, Default)]
pub struct Combined;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinedState {
    pub writes: WriteParts,
    pub locks: LockParts,
    pub sigma: AbstractEnv,
}

impl Domain for Combined {
    type State = CombinedState;

    fn name(&self) -> &'static str {
        "combined"
    }

    fn init(&self, cx: &Ctx<'_>) -> CombinedState {
        let sigma = AbstractEnv::initial(cx.cfg.num_locals(), cx.cfg.num_globals());
        self.thread_start(cx, sigma)
    }

    fn join_into(&self, cx: &Ctx<'_>, acc: &mut CombinedState, v: &CombinedState) -> bool {
        acc.writes.join_into(&v.writes)
            | acc.locks.join_into(&v.locks)
            | join_env(&mut acc.sigma, &v.sigma, cx.k)
    }

    fn leq(&self, a: &CombinedState, b: &CombinedState) -> bool {
        a.writes.leq(&b.writes) && a.locks.leq(&b.locks) && leq_env(&a.sigma, &b.sigma)
    }

    fn sigma<'s>(&self, s: &'s CombinedState) -> &'s AbstractEnv {
        &s.sigma
    }

    fn sigma_mut<'s>(&self, s: &'s mut CombinedState) -> &'s mut AbstractEnv {
        &mut s.sigma
    }

    fn thread_start(&self, cx: &Ctx<'_>, sigma: AbstractEnv) -> CombinedState {
        CombinedState {
            writes: WriteParts::new(cx.cfg.num_globals()),
            locks: LockParts::new(cx.cfg.num_mutexes()),
            sigma,
        }
    }

    fn lock(&self, _: &Ctx<'_>, s: &mut CombinedState, held: Lockset, a: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        s.locks.lock(held, a);
        Vec::new()
    }

    fn unlock(
        &self,
        cx: &Ctx<'_>,
        s: &mut CombinedState,
        held: Lockset,
        a: MutexId,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        s.writes.unlock(cx, &s.sigma, held, a)
    }

    fn write(
        &self,
        _: &Ctx<'_>,
        s: &mut CombinedState,
        held: Lockset,
        g: GlobalId,
        _: &ValueD,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        s.writes.write(held, g);
        s.locks.write(g);
        Vec::new()
    }

    fn read(&self, cx: &Ctx<'_>, s: &CombinedState, held: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        let members = r.family(Fam::Write(g));
        let mut d_m = ValueD::bottom();
        for (u, v) in &members {
            if let Unknown::WriteG(_, a, s2, w) = *u {
                if s.locks.admits(g, a, s2) && s.writes.may_follow(g, w) {
                    d_m.join_assign(v, cx.k);
                }
            }
        }
        let d_g = write_reads(cx, &s.writes, held, g, &members);
        s.sigma.global(g).join(&d_m.meet(&d_g), cx.k)
    }

    fn fields(&self, cx: &Ctx<'_>, s: &CombinedState) -> Vec<(String, String)> {
        let mut out = s.writes.fields(cx);
        out.extend(s.locks.fields(cx));
        out
    }
}
