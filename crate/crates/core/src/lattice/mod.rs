//! Lattices shared by the analyses: bounded value sets, upward-closed
//! lockset families and abstract environments.

mod antichain;
mod env;
mod value;

pub use antichain::MinAntichain;
pub use env::{AbstractEnv, EnvError, Var};
pub use value::{AbsVal, ValueD, DEFAULT_VALUE_BOUND};

/// Lockset lattice ordered by `⊇`: bottom is the full mutex set and join is
/// intersection. Used for on-the-fly protecting-set unknowns.
pub fn protect_join(acc: &mut crate::ids::Lockset, v: crate::ids::Lockset) -> bool {
    let next = acc.intersection(v);
    let changed = next != *acc;
    *acc = next;
    changed
}
