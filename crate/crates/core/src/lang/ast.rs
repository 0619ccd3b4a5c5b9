use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

/// Expressions over named variables. `V` is the variable representation:
/// `String` in the AST, `LocalId` once resolved in the CFG.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<V = String> {
    Int(i64),
    Var(V),
    Unary(UnOp, Box<Expr<V>>),
    Binary(BinOp, Box<Expr<V>>, Box<Expr<V>>),
}

impl<V> Expr<V> {
    pub fn vars(&self) -> Vec<&V> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a V>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Expr<W> {
        match self {
            Expr::Int(i) => Expr::Int(*i),
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, outer: u8) -> fmt::Result
    where
        V: fmt::Display,
    {
        match self {
            Expr::Int(i) if *i < 0 => write!(f, "({i})"),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(op, e) => {
                f.write_str(match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                })?;
                e.fmt_prec(f, 4)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if p < outer {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                // all binary operators are left-associative
                b.fmt_prec(f, p + 1)?;
                if p < outer {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// `x = e;` with `e` over locals.
    AssignLocal { x: String, e: Expr },
    /// `g = e;` with `e` over locals.
    WriteGlobal { g: String, e: Expr },
    /// `x = g;`
    ReadGlobal { x: String, g: String },
    Create { x: String, thread: String },
    Input { x: String },
    Lock(String),
    Unlock(String),
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadDecl {
    pub name: String,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

/// A validated program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub globals: Vec<String>,
    pub threads: Vec<ThreadDecl>,
    /// Set once every global access is wrapped in its dedicated mutex.
    pub instrumented: bool,
}

/// Name of the dedicated atomicity mutex of global `g`.
pub fn atomicity_mutex_name(g: &str) -> String {
    let mut s = String::from("m_");
    s.push_str(g);
    s
}

impl Program {
    pub fn thread(&self, name: &str) -> Option<&ThreadDecl> {
        self.threads.iter().find(|t| t.name == name)
    }

    /// Visits every statement in source order, including nested ones.
    pub fn walk(&self, mut f: impl FnMut(&ThreadDecl, &Stmt)) {
        fn go(t: &ThreadDecl, stmts: &[Stmt], f: &mut impl FnMut(&ThreadDecl, &Stmt)) {
            for s in stmts {
                f(t, s);
                match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        go(t, then_branch, f);
                        go(t, else_branch, f);
                    }
                    StmtKind::While { body, .. } => go(t, body, f),
                    _ => {}
                }
            }
        }
        for t in &self.threads {
            go(t, &t.body, &mut f);
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], indent: usize) -> fmt::Result {
    for s in stmts {
        write_stmt(f, s, indent)?;
    }
    Ok(())
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, indent: usize) -> fmt::Result {
    let pad = indent * 2;
    write!(f, "{:pad$}", "")?;
    match &s.kind {
        StmtKind::AssignLocal { x, e } => writeln!(f, "{x} = {e};"),
        StmtKind::WriteGlobal { g, e } => writeln!(f, "{g} = {e};"),
        StmtKind::ReadGlobal { x, g } => writeln!(f, "{x} = {g};"),
        StmtKind::Create { x, thread } => writeln!(f, "{x} = create({thread});"),
        StmtKind::Input { x } => writeln!(f, "{x} = input();"),
        StmtKind::Lock(m) => writeln!(f, "lock({m});"),
        StmtKind::Unlock(m) => writeln!(f, "unlock({m});"),
        StmtKind::If { cond, then_branch, else_branch } => {
            writeln!(f, "if ({cond}) {{")?;
            write_block(f, then_branch, indent + 1)?;
            if else_branch.is_empty() {
                writeln!(f, "{:pad$}}}", "")
            } else {
                writeln!(f, "{:pad$}}} else {{", "")?;
                write_block(f, else_branch, indent + 1)?;
                writeln!(f, "{:pad$}}}", "")
            }
        }
        StmtKind::While { cond, body } => {
            writeln!(f, "while ({cond}) {{")?;
            write_block(f, body, indent + 1)?;
            writeln!(f, "{:pad$}}}", "")
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.globals {
            writeln!(f, "global {g};")?;
        }
        for t in &self.threads {
            writeln!(f, "thread {} {{", t.name)?;
            write_block(f, &t.body, 1)?;
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
