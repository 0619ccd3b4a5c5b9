use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{join_env, leq_env, Ctx, Domain, Effect, Reads, Unknown};
use crate::ids::{GlobalId, GlobalSet, Lockset, MutexId};
use crate::lattice::{AbstractEnv, ValueD};

/// Reading through protecting mutexes: `[g]` for protected and `[g]′` for
/// unprotected reads.
#[derive(Clone, Copy, Debug, Default)]
pub struct Protection {
    /// Infer `𝓜[g]` during solving instead of taking the pre-pass result.
    pub on_the_fly: bool,
}

/// `P` holds globals definitely written since a protecting mutex was taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtState {
    pub p: GlobalSet,
    pub sigma: AbstractEnv,
}

impl Protection {
    /// Drops globals no longer covered by any held protecting mutex.
    fn unprotected(s: &mut ProtState, rest: Lockset, r: &mut dyn Reads) {
        s.p = s.p.iter().filter(|h| !rest.is_disjoint(r.protecting(*h))).collect();
    }
}

impl Domain for Protection {
    type State = ProtState;

    fn name(&self) -> &'static str {
        if self.on_the_fly {
            "protection-otf"
        } else {
            "protection"
        }
    }

    fn on_the_fly(&self) -> bool {
        self.on_the_fly
    }

    fn init(&self, cx: &Ctx<'_>) -> ProtState {
        ProtState {
            p: GlobalSet::empty(),
            sigma: AbstractEnv::initial(cx.cfg.num_locals(), cx.cfg.num_globals()),
        }
    }

    fn join_into(&self, cx: &Ctx<'_>, acc: &mut ProtState, v: &ProtState) -> bool {
        let p = acc.p.intersection(v.p);
        let changed = p != acc.p;
        acc.p = p;
        join_env(&mut acc.sigma, &v.sigma, cx.k) | changed
    }

    fn leq(&self, a: &ProtState, b: &ProtState) -> bool {
        b.p.is_subset(a.p) && leq_env(&a.sigma, &b.sigma)
    }

    fn sigma<'s>(&self, s: &'s ProtState) -> &'s AbstractEnv {
        &s.sigma
    }

    fn sigma_mut<'s>(&self, s: &'s mut ProtState) -> &'s mut AbstractEnv {
        &mut s.sigma
    }

    fn thread_start(&self, _: &Ctx<'_>, sigma: AbstractEnv) -> ProtState {
        ProtState { p: GlobalSet::empty(), sigma }
    }

    fn lock(&self, _: &Ctx<'_>, _: &mut ProtState, _: Lockset, _: MutexId, _: &mut dyn Reads) -> Vec<Effect> {
        Vec::new()
    }

    fn unlock(
        &self,
        cx: &Ctx<'_>,
        s: &mut ProtState,
        held: Lockset,
        a: MutexId,
        r: &mut dyn Reads,
    ) -> Vec<Effect> {
        let rest = held.without(a);
        let mut side = Vec::new();
        match cx.cfg.atomic_global(a) {
            Some(g) => {
                let v = s.sigma.global(g).clone();
                if r.protecting(g) == Lockset::singleton(a) {
                    side.push(Effect::Value(Unknown::ProtG(g), v.clone()));
                }
                side.push(Effect::Value(Unknown::ProtGUnprot(g), v));
            }
            None => {
                for g in cx.cfg.global_ids() {
                    if r.protecting(g).contains(a) {
                        side.push(Effect::Value(Unknown::ProtG(g), s.sigma.global(g).clone()));
                    }
                }
            }
        }
        Self::unprotected(s, rest, r);
        side
    }

    fn write(
        &self,
        _: &Ctx<'_>,
        s: &mut ProtState,
        held: Lockset,
        g: GlobalId,
        _: &ValueD,
        _: &mut dyn Reads,
    ) -> Vec<Effect> {
        s.p.insert(g);
        if self.on_the_fly {
            Vec::from([Effect::Protect(g, held)])
        } else {
            Vec::new()
        }
    }

    fn read(&self, cx: &Ctx<'_>, s: &ProtState, held: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        let own = s.sigma.global(g);
        if s.p.contains(g) {
            return own.clone();
        }
        let m_g = cx.cfg.atomic_mutex(g);
        let u = if held.intersection(r.protecting(g)) == Lockset::singleton(m_g) {
            Unknown::ProtGUnprot(g)
        } else {
            Unknown::ProtG(g)
        };
        own.join(&r.value(&u), cx.k)
    }

    fn fields(&self, cx: &Ctx<'_>, s: &ProtState) -> Vec<(String, String)> {
        let names: Vec<&str> = s.p.iter().map(|g| cx.cfg.global_name(g)).collect();
        Vec::from([(String::from("P"), format!("{{{}}}", names.join(",")))])
    }
}
