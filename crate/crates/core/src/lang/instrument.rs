use alloc::format;
use alloc::vec::Vec;

use super::ast::{atomicity_mutex_name, Program, Stmt, StmtKind};
use super::parser::ParseError;

/// Wraps every global access in `lock(m_g); ...; unlock(m_g);`.
///
/// Each access gets its own critical section, so `x = g; g = x;` yields
/// two wrapped statements.
pub fn instrument_atomicity(p: &Program) -> Result<Program, ParseError> {
    if p.instrumented {
        return Ok(p.clone());
    }
    let reserved: Vec<_> = p.globals.iter().map(|g| atomicity_mutex_name(g)).collect();
    let mut err = None;
    p.walk(|_, s| {
        if let StmtKind::Lock(m) | StmtKind::Unlock(m) = &s.kind {
            if err.is_none() && reserved.contains(m) {
                err = Some(ParseError {
                    pos: s.pos,
                    message: format!("mutex name `{m}` is reserved for the atomicity of a global"),
                });
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut out = p.clone();
    for t in &mut out.threads {
        t.body = wrap_block(&t.body);
    }
    out.instrumented = true;
    Ok(out)
}

fn wrap_block(stmts: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        match &s.kind {
            StmtKind::WriteGlobal { g, .. } | StmtKind::ReadGlobal { g, .. } => {
                let m = atomicity_mutex_name(g);
                out.push(Stmt { kind: StmtKind::Lock(m.clone()), pos: s.pos });
                out.push(s.clone());
                out.push(Stmt { kind: StmtKind::Unlock(m), pos: s.pos });
            }
            StmtKind::If { cond, then_branch, else_branch } => out.push(Stmt {
                kind: StmtKind::If {
                    cond: cond.clone(),
                    then_branch: wrap_block(then_branch),
                    else_branch: wrap_block(else_branch),
                },
                pos: s.pos,
            }),
            StmtKind::While { cond, body } => out.push(Stmt {
                kind: StmtKind::While { cond: cond.clone(), body: wrap_block(body) },
                pos: s.pos,
            }),
            _ => out.push(s.clone()),
        }
    }
    out
}

/// Removes the statements inserted by [`instrument_atomicity`].
pub fn strip_atomicity(p: &Program) -> Program {
    fn strip(stmts: &[Stmt], reserved: &[alloc::string::String]) -> Vec<Stmt> {
        stmts
            .iter()
            .filter(|s| !matches!(&s.kind, StmtKind::Lock(m) | StmtKind::Unlock(m) if reserved.contains(m)))
            .map(|s| match &s.kind {
                StmtKind::If { cond, then_branch, else_branch } => Stmt {
                    kind: StmtKind::If {
                        cond: cond.clone(),
                        then_branch: strip(then_branch, reserved),
                        else_branch: strip(else_branch, reserved),
                    },
                    pos: s.pos,
                },
                StmtKind::While { cond, body } => Stmt {
                    kind: StmtKind::While { cond: cond.clone(), body: strip(body, reserved) },
                    pos: s.pos,
                },
                _ => s.clone(),
            })
            .collect()
    }
    let reserved: Vec<_> = p.globals.iter().map(|g| atomicity_mutex_name(g)).collect();
    let mut out = p.clone();
    for t in &mut out.threads {
        t.body = strip(&t.body, &reserved);
    }
    out.instrumented = false;
    out
}
