//! Lexer, recursive-descent parser and name validation.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{BinOp, Expr, Pos, Program, Stmt, StmtKind, ThreadDecl, UnOp};
use crate::ids::MAX_SET_MEMBERS;

/// Name of the implicit thread-id local.
pub const SELF: &str = "self";
/// Name of the entry thread.
pub const MAIN: &str = "main";

const KEYWORDS: &[&str] =
    &["global", "thread", "if", "else", "while", "lock", "unlock", "create", "input"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Cursor {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
}

impl Cursor {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.i + off).copied()
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| f(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut cur = Cursor { chars: src.chars().collect(), i: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek(0) {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek(1) == Some('/') {
            cur.take_while(|c| c != '\n');
            continue;
        }
        if c == '/' && cur.peek(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match (cur.peek(0), cur.peek(1)) {
                    (None, _) => return Err(ParseError::new(pos, "unterminated block comment")),
                    (Some('*'), Some('/')) => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    _ => {
                        cur.bump();
                    }
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let s = cur.take_while(|c| c.is_ascii_digit());
            let v = s
                .parse::<i64>()
                .map_err(|_| ParseError::new(pos, format!("integer literal `{s}` out of range")))?;
            out.push((Tok::Int(v), pos));
            continue;
        }
        let two: Option<&'static str> = match (c, cur.peek(1)) {
            ('=', Some('=')) => Some("=="),
            ('!', Some('=')) => Some("!="),
            ('<', Some('=')) => Some("<="),
            _ => None,
        };
        if let Some(sym) = two {
            cur.bump();
            cur.bump();
            out.push((Tok::Sym(sym), pos));
            continue;
        }
        let sym = match c {
            '=' => "=",
            ';' => ";",
            '(' => "(",
            ')' => ")",
            '{' => "{",
            '}' => "}",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '<' => "<",
            '!' => "!",
            _ => return Err(ParseError::new(pos, format!("unexpected character `{c}`"))),
        };
        cur.bump();
        out.push((Tok::Sym(sym), pos));
    }
    out.push((Tok::Eof, cur.pos()));
    Ok(out)
}

/// Statement before globals are known.
#[derive(Debug)]
enum Raw {
    Assign { lhs: String, rhs: Expr },
    Create { x: String, thread: String, thread_pos: Pos },
    Input { x: String },
    Lock(String),
    Unlock(String),
    If { cond: Expr, then_branch: Vec<(Raw, Pos)>, else_branch: Vec<(Raw, Pos)> },
    While { cond: Expr, body: Vec<(Raw, Pos)> },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos(), format!("expected `{sym}`, found {}", self.peek())))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.bump() {
            (Tok::Ident(s), p) if !KEYWORDS.contains(&s.as_str()) => Ok((s, p)),
            (Tok::Ident(s), p) => {
                Err(ParseError::new(p, format!("keyword `{s}` cannot be used as a name")))
            }
            (t, p) => Err(ParseError::new(p, format!("expected identifier, found {t}"))),
        }
    }

    fn block(&mut self) -> Result<Vec<(Raw, Pos)>, ParseError> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat("}") {
            if *self.peek() == Tok::Eof {
                return Err(ParseError::new(self.pos(), "unexpected end of input, expected `}`"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<(Raw, Pos), ParseError> {
        let pos = self.pos();
        if self.is_keyword("lock") || self.is_keyword("unlock") {
            let is_lock = self.is_keyword("lock");
            self.bump();
            self.expect("(")?;
            let (m, _) = self.ident()?;
            self.expect(")")?;
            self.expect(";")?;
            return Ok((if is_lock { Raw::Lock(m) } else { Raw::Unlock(m) }, pos));
        }
        if self.is_keyword("if") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr(0)?;
            self.expect(")")?;
            let then_branch = self.block()?;
            let else_branch = if self.is_keyword("else") {
                self.bump();
                self.block()?
            } else {
                Vec::new()
            };
            return Ok((Raw::If { cond, then_branch, else_branch }, pos));
        }
        if self.is_keyword("while") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr(0)?;
            self.expect(")")?;
            let body = self.block()?;
            return Ok((Raw::While { cond, body }, pos));
        }
        let (lhs, _) = self.ident()?;
        self.expect("=")?;
        let raw = if self.is_keyword("create") {
            self.bump();
            self.expect("(")?;
            let (thread, thread_pos) = self.ident()?;
            self.expect(")")?;
            Raw::Create { x: lhs, thread, thread_pos }
        } else if self.is_keyword("input") {
            self.bump();
            self.expect("(")?;
            self.expect(")")?;
            Raw::Input { x: lhs }
        } else {
            Raw::Assign { lhs, rhs: self.expr(0)? }
        };
        self.expect(";")?;
        Ok((raw, pos))
    }

    fn binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("+") => Some(BinOp::Add),
            Tok::Sym("-") => Some(BinOp::Sub),
            Tok::Sym("*") => Some(BinOp::Mul),
            Tok::Sym("==") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            _ => None,
        }
    }

    // precedence climbing; comparisons are non-associative in practice but
    // parse left-associatively like the arithmetic operators
    fn expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = match op {
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le => 1,
                BinOp::Add | BinOp::Sub => 2,
                BinOp::Mul => 3,
            };
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.expr(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("-") {
            return Ok(match self.unary()? {
                Expr::Int(i) => Expr::Int(i.wrapping_neg()),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let e = self.expr(0)?;
            self.expect(")")?;
            return Ok(e);
        }
        match self.bump() {
            (Tok::Int(i), _) => Ok(Expr::Int(i)),
            (Tok::Ident(s), p) if KEYWORDS.contains(&s.as_str()) => Err(ParseError::new(
                p,
                format!("`{s}` may only appear as the whole right-hand side of an assignment"),
            )),
            (Tok::Ident(s), _) => Ok(Expr::Var(s)),
            (t, p) => Err(ParseError::new(p, format!("expected expression, found {t}"))),
        }
    }
}

struct Names {
    globals: BTreeSet<String>,
    threads: BTreeSet<String>,
    mutexes: BTreeMap<String, Pos>,
    assigned: BTreeSet<String>,
}

fn collect_names(stmts: &[(Raw, Pos)], names: &mut Names) {
    for (s, pos) in stmts {
        match s {
            Raw::Assign { lhs, .. } => {
                names.assigned.insert(lhs.clone());
            }
            Raw::Create { x, .. } | Raw::Input { x } => {
                names.assigned.insert(x.clone());
            }
            Raw::Lock(m) | Raw::Unlock(m) => {
                names.mutexes.entry(m.clone()).or_insert(*pos);
            }
            Raw::If { then_branch, else_branch, .. } => {
                collect_names(then_branch, names);
                collect_names(else_branch, names);
            }
            Raw::While { body, .. } => collect_names(body, names),
        }
    }
}

impl Names {
    /// Checks an identifier used as a local variable in an expression.
    fn check_local_use(&self, v: &str, pos: Pos) -> Result<(), ParseError> {
        if self.globals.contains(v) {
            Err(ParseError::new(
                pos,
                format!(
                    "global `{v}` used inside an expression; read it into a temporary local first"
                ),
            ))
        } else if v == SELF || self.assigned.contains(v) {
            Ok(())
        } else if self.threads.contains(v) {
            Err(ParseError::new(pos, format!("thread name `{v}` used as a variable")))
        } else if self.mutexes.contains_key(v) {
            Err(ParseError::new(pos, format!("mutex `{v}` used as a variable")))
        } else {
            Err(ParseError::new(pos, format!("undeclared global `{v}`")))
        }
    }

    fn check_expr(&self, e: &Expr, pos: Pos) -> Result<(), ParseError> {
        for v in e.vars() {
            self.check_local_use(v, pos)?;
        }
        Ok(())
    }

    fn classify(&self, stmts: Vec<(Raw, Pos)>) -> Result<Vec<Stmt>, ParseError> {
        stmts.into_iter().map(|(raw, pos)| self.classify_one(raw, pos)).collect()
    }

    fn check_local_target(&self, x: &str, pos: Pos) -> Result<(), ParseError> {
        if x == SELF {
            return Err(ParseError::new(pos, "assignment to reserved local `self`"));
        }
        if self.threads.contains(x) {
            return Err(ParseError::new(pos, format!("thread name `{x}` used as a variable")));
        }
        if self.mutexes.contains_key(x) {
            return Err(ParseError::new(pos, format!("mutex `{x}` used as a variable")));
        }
        Ok(())
    }

    fn classify_one(&self, raw: Raw, pos: Pos) -> Result<Stmt, ParseError> {
        let kind = match raw {
            Raw::Assign { lhs, rhs } => {
                if lhs == SELF {
                    return Err(ParseError::new(pos, "assignment to reserved local `self`"));
                }
                if self.globals.contains(&lhs) {
                    if let Expr::Var(v) = &rhs {
                        if self.globals.contains(v) {
                            return Err(ParseError::new(
                                pos,
                                format!(
                                    "copy between globals `{lhs}` and `{v}`; go through a temporary local"
                                ),
                            ));
                        }
                    }
                    self.check_expr(&rhs, pos)?;
                    StmtKind::WriteGlobal { g: lhs, e: rhs }
                } else {
                    self.check_local_target(&lhs, pos)?;
                    match rhs {
                        Expr::Var(g) if self.globals.contains(&g) => {
                            StmtKind::ReadGlobal { x: lhs, g }
                        }
                        e => {
                            self.check_expr(&e, pos)?;
                            StmtKind::AssignLocal { x: lhs, e }
                        }
                    }
                }
            }
            Raw::Create { x, thread, thread_pos } => {
                if self.globals.contains(&x) {
                    return Err(ParseError::new(
                        pos,
                        format!("`create` must assign a local, `{x}` is a global"),
                    ));
                }
                self.check_local_target(&x, pos)?;
                if !self.threads.contains(&thread) {
                    return Err(ParseError::new(
                        thread_pos,
                        format!("undeclared thread `{thread}`"),
                    ));
                }
                StmtKind::Create { x, thread }
            }
            Raw::Input { x } => {
                if self.globals.contains(&x) {
                    return Err(ParseError::new(
                        pos,
                        format!("`input` must assign a local, `{x}` is a global"),
                    ));
                }
                self.check_local_target(&x, pos)?;
                StmtKind::Input { x }
            }
            Raw::Lock(m) => StmtKind::Lock(m),
            Raw::Unlock(m) => StmtKind::Unlock(m),
            Raw::If { cond, then_branch, else_branch } => {
                self.check_expr(&cond, pos)?;
                StmtKind::If {
                    cond,
                    then_branch: self.classify(then_branch)?,
                    else_branch: self.classify(else_branch)?,
                }
            }
            Raw::While { cond, body } => {
                self.check_expr(&cond, pos)?;
                StmtKind::While { cond, body: self.classify(body)? }
            }
        };
        Ok(Stmt { kind, pos })
    }
}

/// Parses and validates a program.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut globals: Vec<(String, Pos)> = Vec::new();
    let mut threads: Vec<(String, Pos, Vec<(Raw, Pos)>)> = Vec::new();
    loop {
        match p.peek() {
            Tok::Eof => break,
            Tok::Ident(s) if s == "global" => {
                p.bump();
                let (name, pos) = p.ident()?;
                p.expect(";")?;
                if name == SELF {
                    return Err(ParseError::new(pos, "`self` cannot be declared global"));
                }
                if globals.iter().any(|(g, _)| *g == name) {
                    return Err(ParseError::new(pos, format!("duplicate global `{name}`")));
                }
                globals.push((name, pos));
            }
            Tok::Ident(s) if s == "thread" => {
                p.bump();
                let (name, pos) = p.ident()?;
                if threads.iter().any(|(t, _, _)| *t == name) {
                    return Err(ParseError::new(pos, format!("duplicate thread name `{name}`")));
                }
                let body = p.block()?;
                threads.push((name, pos, body));
            }
            t => {
                return Err(ParseError::new(
                    p.pos(),
                    format!("expected `global` or `thread`, found {t}"),
                ))
            }
        }
    }

    let mains = threads.iter().filter(|(n, _, _)| n == MAIN).count();
    if mains != 1 {
        return Err(ParseError::new(Pos { line: 1, col: 1 }, "program must define exactly one thread `main`"));
    }

    let mut names = Names {
        globals: globals.iter().map(|(g, _)| g.clone()).collect(),
        threads: threads.iter().map(|(t, _, _)| t.clone()).collect(),
        mutexes: BTreeMap::new(),
        assigned: BTreeSet::new(),
    };
    for (_, _, body) in &threads {
        collect_names(body, &mut names);
    }
    for (g, pos) in &globals {
        if names.threads.contains(g) {
            return Err(ParseError::new(*pos, format!("`{g}` is both a global and a thread")));
        }
    }
    for (m, pos) in &names.mutexes {
        if names.globals.contains(m) || names.threads.contains(m) || m == SELF {
            return Err(ParseError::new(*pos, format!("mutex `{m}` clashes with another name")));
        }
    }
    let locals: BTreeSet<&String> =
        names.assigned.iter().filter(|x| !names.globals.contains(*x)).collect();
    if locals.len() + 1 > MAX_SET_MEMBERS * 16 {
        return Err(ParseError::new(Pos::default(), "too many locals"));
    }
    if globals.len() > MAX_SET_MEMBERS {
        return Err(ParseError::new(Pos::default(), "at most 64 globals are supported"));
    }
    if names.mutexes.len() + globals.len() > MAX_SET_MEMBERS {
        return Err(ParseError::new(
            Pos::default(),
            "at most 64 mutexes (including one per global) are supported",
        ));
    }

    let mut out_threads = Vec::new();
    for (name, pos, body) in threads {
        if let Some((Raw::While { .. }, wpos)) = body.first() {
            return Err(ParseError::new(
                *wpos,
                format!(
                    "thread `{name}` starts with a loop, which makes its entry point reachable by ordinary control flow; add a statement before the loop"
                ),
            ));
        }
        let body = names.classify(body)?;
        out_threads.push(ThreadDecl { name, body, pos });
    }
    Ok(Program {
        globals: globals.into_iter().map(|(g, _)| g).collect(),
        threads: out_threads,
        instrumented: false,
    })
}

/// Parses an expression on its own (used by tests and tooling).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.expr(0)?;
    if *p.peek() != Tok::Eof {
        return Err(ParseError::new(p.pos(), format!("trailing input {}", p.peek())));
    }
    Ok(e)
}

impl From<ParseError> for String {
    fn from(e: ParseError) -> String {
        e.to_string()
    }
}
