use alloc::vec;
use alloc::vec::Vec;

use crate::ids::{GlobalId, LocalId};
use crate::lattice::ValueD;

/// A variable of the abstract environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Local(LocalId),
    Global(GlobalId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown variable {0:?}")]
    UnknownVar(Var),
    #[error("environments over different variable sets")]
    ShapeMismatch,
}

/// A total map from locals and globals to abstract values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AbstractEnv {
    locals: Vec<ValueD>,
    globals: Vec<ValueD>,
}

impl AbstractEnv {
    /// Every local is `Top`, every global bottom.
    pub fn initial(num_locals: usize, num_globals: usize) -> Self {
        AbstractEnv {
            locals: vec![ValueD::Top; num_locals],
            globals: vec![ValueD::bottom(); num_globals],
        }
    }

    pub fn num_locals(&self) -> usize {
        self.locals.len()
    }

    pub fn num_globals(&self) -> usize {
        self.globals.len()
    }

    pub fn get(&self, var: Var) -> Result<&ValueD, EnvError> {
        match var {
            Var::Local(x) => self.locals.get(x.0 as usize),
            Var::Global(g) => self.globals.get(g.0 as usize),
        }
        .ok_or(EnvError::UnknownVar(var))
    }

    pub fn local(&self, x: LocalId) -> &ValueD {
        &self.locals[x.0 as usize]
    }

    pub fn global(&self, g: GlobalId) -> &ValueD {
        &self.globals[g.0 as usize]
    }

    /// `σ ⊕ {var ↦ v}`: override, not join.
    pub fn update(&mut self, var: Var, v: ValueD) -> Result<(), EnvError> {
        let slot = match var {
            Var::Local(x) => self.locals.get_mut(x.0 as usize),
            Var::Global(g) => self.globals.get_mut(g.0 as usize),
        }
        .ok_or(EnvError::UnknownVar(var))?;
        *slot = v;
        Ok(())
    }

    pub fn set_local(&mut self, x: LocalId, v: ValueD) {
        self.locals[x.0 as usize] = v;
    }

    pub fn set_global(&mut self, g: GlobalId, v: ValueD) {
        self.globals[g.0 as usize] = v;
    }

    pub fn reset_globals(&mut self) {
        for g in &mut self.globals {
            *g = ValueD::bottom();
        }
    }

    pub fn join_assign(&mut self, other: &Self, k: usize) -> Result<bool, EnvError> {
        if self.locals.len() != other.locals.len() || self.globals.len() != other.globals.len() {
            return Err(EnvError::ShapeMismatch);
        }
        let mut changed = false;
        for (a, b) in self.locals.iter_mut().zip(&other.locals) {
            changed |= a.join_assign(b, k);
        }
        for (a, b) in self.globals.iter_mut().zip(&other.globals) {
            changed |= a.join_assign(b, k);
        }
        Ok(changed)
    }

    pub fn join(&self, other: &Self, k: usize) -> Result<Self, EnvError> {
        let mut out = self.clone();
        out.join_assign(other, k)?;
        Ok(out)
    }

    pub fn leq(&self, other: &Self) -> Result<bool, EnvError> {
        if self.locals.len() != other.locals.len() || self.globals.len() != other.globals.len() {
            return Err(EnvError::ShapeMismatch);
        }
        Ok(self.locals.iter().zip(&other.locals).all(|(a, b)| a.leq(b))
            && self.globals.iter().zip(&other.globals).all(|(a, b)| a.leq(b)))
    }

    pub fn locals(&self) -> &[ValueD] {
        &self.locals
    }

    pub fn globals(&self) -> &[ValueD] {
        &self.globals
    }
}
