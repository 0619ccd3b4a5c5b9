//! Expression evaluation over value sets.

use alloc::vec::Vec;

use crate::lang::{BinOp, Expr, LExpr, UnOp};
use crate::lattice::{AbsVal, AbstractEnv, ValueD};

fn truth(b: bool) -> AbsVal {
    AbsVal::Int(b as i64)
}

fn apply_bin(op: BinOp, a: &AbsVal, b: &AbsVal) -> Option<AbsVal> {
    match (a, b) {
        (AbsVal::Int(x), AbsVal::Int(y)) => Some(match op {
            BinOp::Add => AbsVal::Int(x.wrapping_add(*y)),
            BinOp::Sub => AbsVal::Int(x.wrapping_sub(*y)),
            BinOp::Mul => AbsVal::Int(x.wrapping_mul(*y)),
            BinOp::Eq => truth(x == y),
            BinOp::Ne => truth(x != y),
            BinOp::Lt => truth(x < y),
            BinOp::Le => truth(x <= y),
        }),
        // thread ids only support equality tests
        _ => match op {
            BinOp::Eq => Some(truth(a == b)),
            BinOp::Ne => Some(truth(a != b)),
            _ => None,
        },
    }
}

fn apply_un(op: UnOp, a: &AbsVal) -> Option<AbsVal> {
    match (op, a) {
        (UnOp::Neg, AbsVal::Int(x)) => Some(AbsVal::Int(x.wrapping_neg())),
        (UnOp::Not, AbsVal::Int(x)) => Some(truth(*x == 0)),
        _ => None,
    }
}

/// Evaluates `e` element-wise over the value sets of its variables.
/// Bottom operands give bottom; `Top` operands and unsupported operations on
/// thread ids give `Top`; results above `k` elements collapse to `Top`.
pub fn eval_expr(e: &LExpr, sigma: &AbstractEnv, k: usize) -> ValueD {
    match e {
        Expr::Int(i) => ValueD::int(*i),
        Expr::Var(x) => sigma.local(*x).clone(),
        Expr::Unary(op, a) => {
            let va = eval_expr(a, sigma, k);
            let Some(xs) = va.elements() else { return ValueD::Top };
            let mut out = Vec::with_capacity(xs.len());
            for x in xs {
                match apply_un(*op, x) {
                    Some(r) => out.push(r),
                    None => return ValueD::Top,
                }
            }
            ValueD::from_vals(out, k)
        }
        Expr::Binary(op, a, b) => {
            let va = eval_expr(a, sigma, k);
            let vb = eval_expr(b, sigma, k);
            if va.is_bottom() || vb.is_bottom() {
                return ValueD::bottom();
            }
            let (Some(xs), Some(ys)) = (va.elements(), vb.elements()) else {
                return ValueD::Top;
            };
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for x in xs {
                for y in ys {
                    match apply_bin(*op, x, y) {
                        Some(r) => out.push(r),
                        None => return ValueD::Top,
                    }
                }
            }
            ValueD::from_vals(out, k)
        }
    }
}

/// Whether some value described by `v` takes the branch of the given
/// polarity. Thread ids count as non-zero.
pub fn guard_passes(v: &ValueD, positive: bool) -> bool {
    match v.elements() {
        None => true,
        Some(xs) => xs.iter().any(|x| match x {
            AbsVal::Int(i) => (*i != 0) == positive,
            AbsVal::Tid(_) => positive,
        }),
    }
}
