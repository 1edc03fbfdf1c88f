use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Int,
    Unit,
    Matrix,
    Summary,
    Tuple(Vec<TypeExpr>),
    Io(Box<TypeExpr>),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn arrow(param: TypeExpr, result: TypeExpr) -> TypeExpr {
        TypeExpr::Arrow(Box::new(param), Box::new(result))
    }

    pub fn io(inner: TypeExpr) -> TypeExpr {
        TypeExpr::Io(Box::new(inner))
    }

    /// Number of parameters in the arrow chain.
    pub fn arity(&self) -> usize {
        match self {
            TypeExpr::Arrow(_, result) => 1 + result.arity(),
            _ => 0,
        }
    }

    /// Rightmost result of the arrow chain.
    pub fn result(&self) -> &TypeExpr {
        match self {
            TypeExpr::Arrow(_, result) => result.result(),
            other => other,
        }
    }

    pub fn params(&self) -> Vec<&TypeExpr> {
        let mut out = Vec::new();
        let mut cur = self;
        while let TypeExpr::Arrow(param, result) = cur {
            out.push(param.as_ref());
            cur = result;
        }
        out
    }

    pub(crate) fn contains_io(&self) -> bool {
        match self {
            TypeExpr::Io(_) => true,
            TypeExpr::Tuple(items) => items.iter().any(TypeExpr::contains_io),
            TypeExpr::Arrow(p, r) => p.contains_io() || r.contains_io(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purity {
    Pure,
    Effectful,
}

/// Effectful iff the final result of the arrow chain is `IO _`.
pub fn purity_of(signature: &TypeExpr) -> Purity {
    match signature.result() {
        TypeExpr::Io(_) => Purity::Effectful,
        _ => Purity::Pure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn apply(self, lhs: i64, rhs: i64) -> i64 {
        match self {
            BinOp::Add => lhs.wrapping_add(rhs),
            BinOp::Sub => lhs.wrapping_sub(rhs),
            BinOp::Mul => lhs.wrapping_mul(rhs),
        }
    }
}

/// Expression tree. `Const` never comes out of the parser: the scheduler
/// produces it when it substitutes already-computed values into a task
/// before shipping it to a worker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Lit(i64),
    Var(String),
    /// The empty tuple is the unit value `()`.
    Tuple(Vec<Expr>),
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    BinOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Const(Value),
}

impl Expr {
    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call { callee: callee.into(), args }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn binop(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// Callee of the outermost call, if the expression is a call.
    pub fn head_callee(&self) -> Option<&str> {
        match self {
            Expr::Call { callee, .. } => Some(callee),
            _ => None,
        }
    }

    /// True when the expression contains a call anywhere.
    pub fn has_call(&self) -> bool {
        match self {
            Expr::Call { .. } => true,
            Expr::Lit(_) | Expr::Var(_) | Expr::Const(_) => false,
            Expr::Tuple(items) => items.iter().any(Expr::has_call),
            Expr::If { cond, then_branch, else_branch } => {
                cond.has_call() || then_branch.has_call() || else_branch.has_call()
            }
            Expr::BinOp { lhs, rhs, .. } => lhs.has_call() || rhs.has_call(),
        }
    }

    /// Variables referenced by the expression, in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Lit(_) | Expr::Const(_) => {}
            Expr::Tuple(items) => items.iter().for_each(|e| e.collect_vars(out)),
            Expr::Call { args, .. } => args.iter().for_each(|e| e.collect_vars(out)),
            Expr::If { cond, then_branch, else_branch } => {
                cond.collect_vars(out);
                then_branch.collect_vars(out);
                else_branch.collect_vars(out);
            }
            Expr::BinOp { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
        }
    }

    /// Replaces every variable found in `values` with a `Const`.
    pub fn substitute(&self, values: &dyn Fn(&str) -> Option<Value>) -> Expr {
        match self {
            Expr::Var(name) => match values(name) {
                Some(v) => Expr::Const(v),
                None => self.clone(),
            },
            Expr::Lit(_) | Expr::Const(_) => self.clone(),
            Expr::Tuple(items) => Expr::Tuple(items.iter().map(|e| e.substitute(values)).collect()),
            Expr::Call { callee, args } => {
                Expr::Call { callee: callee.clone(), args: args.iter().map(|e| e.substitute(values)).collect() }
            }
            Expr::If { cond, then_branch, else_branch } => Expr::If {
                cond: Box::new(cond.substitute(values)),
                then_branch: Box::new(then_branch.substitute(values)),
                else_branch: Box::new(else_branch.substitute(values)),
            },
            Expr::BinOp { op, lhs, rhs } => {
                Expr::BinOp { op: *op, lhs: Box::new(lhs.substitute(values)), rhs: Box::new(rhs.substitute(values)) }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    Bind,
    Let,
    Bare,
}

impl fmt::Display for StmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StmtKind::Bind => "bind",
            StmtKind::Let => "let",
            StmtKind::Bare => "bare",
        })
    }
}

/// One do-block statement: `x <- e`, `let x = e`, or a bare `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub binds: Option<String>,
    pub rhs: Expr,
    pub pos: Pos,
}

impl Stmt {
    pub fn bind(name: impl Into<String>, rhs: Expr) -> Stmt {
        Stmt { kind: StmtKind::Bind, binds: Some(name.into()), rhs, pos: Pos::default() }
    }

    pub fn let_(name: impl Into<String>, rhs: Expr) -> Stmt {
        Stmt { kind: StmtKind::Let, binds: Some(name.into()), rhs, pos: Pos::default() }
    }

    pub fn bare(rhs: Expr) -> Stmt {
        Stmt { kind: StmtKind::Bare, binds: None, rhs, pos: Pos::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    Expr(Expr),
    Do(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub signature: TypeExpr,
    pub body: Body,
    pub pos: Pos,
}

impl FuncDef {
    pub fn purity(&self) -> Purity {
        purity_of(&self.signature)
    }
}

/// A parsed program: user definitions in source order plus the names of
/// the builtins it was parsed against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    defs: Vec<FuncDef>,
    index: BTreeMap<String, usize>,
    builtins: BTreeSet<String>,
}

impl Program {
    pub(crate) fn new(defs: Vec<FuncDef>, builtins: BTreeSet<String>) -> Program {
        let index = defs.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
        Program { defs, index, builtins }
    }

    pub fn defs(&self) -> &[FuncDef] {
        &self.defs
    }

    pub fn def(&self, name: &str) -> Option<&FuncDef> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    pub fn builtins(&self) -> &BTreeSet<String> {
        &self.builtins
    }

    /// Copy with every source position reset, for structural comparison.
    pub fn without_positions(&self) -> Program {
        let defs = self
            .defs
            .iter()
            .cloned()
            .map(|mut d| {
                d.pos = Pos::default();
                if let Body::Do(stmts) = &mut d.body {
                    stmts.iter_mut().for_each(|s| s.pos = Pos::default());
                }
                d
            })
            .collect();
        Program::new(defs, self.builtins.clone())
    }
}
