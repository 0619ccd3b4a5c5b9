//! Thread-modular abstract interpretation for a small concurrent language.
//!
//! Programs are parsed and lowered to per-thread control-flow graphs
//! ([`lang`]), analyzed by side-effecting constraint systems ([`analyses`])
//! solved with a generic worklist solver ([`solver`]), and checked against a
//! bounded enumeration of concrete local traces ([`traces`]).

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analyses;
pub mod ids;
pub mod lang;
pub mod lattice;
pub mod solver;
pub mod traces;
