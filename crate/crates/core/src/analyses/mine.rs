use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{join_env, leq_env, Ctx, Domain, Effect, Fam, Reads, Unknown};
use crate::ids::{GlobalId, GlobalSet, Lockset, MutexId};
use crate::lattice::{AbstractEnv, ValueD};

/// Eager reading at every lock plus weak interferences stored under the
/// atomicity mutexes.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mine;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MineState {
    /// Globals possibly written by the ego thread.
    pub w: GlobalSet,
    pub sigma: AbstractEnv,
}

impl Domain for Mine {
    type State = MineState;

    fn name(&self) -> &'static str {
        "mine"
    }

    fn init(&self, cx: &Ctx<'_>) -> MineState {
        MineState {
            w: GlobalSet::empty(),
            sigma: AbstractEnv::initial(cx.cfg.num_locals(), cx.cfg.num_globals()),
        }
    }

    fn join_into(&self, cx: &Ctx<'_>, acc: &mut MineState, v: &MineState) -> bool {
        let w = acc.w.union(v.w);
        let changed = w != acc.w;
        acc.w = w;
        join_env(&mut acc.sigma, &v.sigma, cx.k) | changed
    }

    fn leq(&self, a: &MineState, b: &MineState) -> bool {
        a.w.is_subset(b.w) && leq_env(&a.sigma, &b.sigma)
    }

    fn sigma<'s>(&self, s: &'s MineState) -> &'s AbstractEnv {
        &s.sigma
    }

    fn sigma_mut<'s>(&self, s: &'s mut MineState) -> &'s mut AbstractEnv {
        &mut s.sigma
    }

    fn thread_start(&self, _: &Ctx<'_>, sigma: AbstractEnv) -> MineState {
        MineState { w: GlobalSet::empty(), sigma }
    }

    fn lock(&self, cx: &Ctx<'_>, s: &mut MineState, held: Lockset, a: MutexId, r: &mut dyn Reads) -> Vec<Effect> {
        if cx.is_atomic(a) {
            return Vec::new();
        }
        for g in cx.cfg.global_ids() {
            let mut imported = s.sigma.global(g).clone();
            for (u, v) in r.family(Fam::Sync(g)) {
                if let Unknown::SyncG(_, b, s2) = u {
                    if b == a && s2.is_disjoint(held) {
                        imported.join_assign(&v, cx.k);
                    }
                }
            }
            s.sigma.set_global(g, imported);
        }
        Vec::new()
    }

    fn unlock(&self, cx: &Ctx<'_>, s: &mut MineState, held: Lockset, a: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        if cx.is_atomic(a) {
            return Vec::new();
        }
        let rest = held.without(a);
        s.w.iter().map(|g| Effect::Value(Unknown::SyncG(g, a, rest), s.sigma.global(g).clone())).collect()
    }

    fn write(
        &self,
        cx: &Ctx<'_>,
        s: &mut MineState,
        held: Lockset,
        g: GlobalId,
        v: &ValueD,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        let m_g = cx.cfg.atomic_mutex(g);
        s.w.insert(g);
        Vec::from([Effect::Value(Unknown::SyncG(g, m_g, held.without(m_g)), v.clone())])
    }

    fn read(&self, cx: &Ctx<'_>, s: &MineState, held: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        let m_g = cx.cfg.atomic_mutex(g);
        let mut d = s.sigma.global(g).clone();
        for (u, v) in r.family(Fam::Sync(g)) {
            if let Unknown::SyncG(_, b, s2) = u {
                if b == m_g && s2.is_disjoint(held) {
                    d.join_assign(&v, cx.k);
                }
            }
        }
        d
    }

    fn fields(&self, cx: &Ctx<'_>, s: &MineState) -> Vec<(String, String)> {
        let names: Vec<&str> = s.w.iter().map(|g| cx.cfg.global_name(g)).collect();
        Vec::from([(String::from("W"), format!("{{{}}}", names.join(",")))])
    }
}
