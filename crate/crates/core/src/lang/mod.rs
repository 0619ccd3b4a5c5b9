//! Front end: parsing, validation, atomicity instrumentation, control-flow
//! graphs and syntactic lockset reachability.

mod ast;
mod cfg;
mod instrument;
mod locksets;
mod parser;

pub use ast::{atomicity_mutex_name, BinOp, Expr, Pos, Program, Stmt, StmtKind, ThreadDecl, UnOp};
pub use cfg::{build_cfg, Action, Cfg, Edge, LExpr, NodeInfo, ReadSite, ThreadInfo};
pub use instrument::{instrument_atomicity, strip_atomicity};
pub use locksets::{reachable_locksets, transfer_lockset, LocksetMap};
pub use parser::{parse, parse_expr, ParseError, MAIN, SELF};

/// Parses, instruments and lowers a program in one step.
pub fn compile(text: &str) -> Result<Cfg, ParseError> {
    let p = parse(text)?;
    let p = instrument_atomicity(&p)?;
    Ok(build_cfg(&p))
}
