//! Name resolution, arity checks and purity constraints.
//!
//! Effectful calls may only appear as the outermost call of a `<-`
//! statement, a bare do-statement, or the expression body of an `IO`
//! function. Everywhere else (arguments, `let` right-hand sides, pure
//! function bodies) an effectful call is a purity violation.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Body, Expr, Pos, Program, Purity, StmtKind};
use super::LangError;
use crate::kernels::BUILTINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Builtin,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbol {
    pub arity: usize,
    pub purity: Purity,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Symbol>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn purity(&self, name: &str) -> Option<Purity> {
        self.get(name).map(|s| s.purity)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Symbol)> {
        self.symbols.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Table holding only the builtins; enough to check shipped task
    /// expressions that call no user code.
    pub fn builtins_only() -> SymbolTable {
        let symbols = BUILTINS
            .iter()
            .map(|b| (b.name.to_string(), Symbol { arity: b.arity, purity: b.purity, kind: SymbolKind::Builtin }))
            .collect();
        SymbolTable { symbols }
    }
}

pub fn resolve(program: &Program) -> Result<SymbolTable, LangError> {
    let mut table = SymbolTable::builtins_only();
    for def in program.defs() {
        table
            .symbols
            .insert(def.name.clone(), Symbol { arity: def.params.len(), purity: def.purity(), kind: SymbolKind::User });
    }

    for def in program.defs() {
        let mut scope = BTreeSet::new();
        let checker = Checker { table: &table, context: &def.name };
        for param in &def.params {
            checker.bind(&mut scope, param, def.pos)?;
        }
        match &def.body {
            Body::Expr(e) => {
                checker.expr(e, &scope, def.purity() == Purity::Effectful, def.pos)?;
            }
            Body::Do(stmts) => {
                for stmt in stmts {
                    match stmt.kind {
                        StmtKind::Bind => {
                            checker.expr(&stmt.rhs, &scope, true, stmt.pos)?;
                            let effectful =
                                stmt.rhs.head_callee().is_some_and(|c| table.purity(c) == Some(Purity::Effectful));
                            if !effectful {
                                return Err(checker.purity(
                                    "the right-hand side of `<-` must be a call to an IO function".into(),
                                    stmt.pos,
                                ));
                            }
                        }
                        StmtKind::Let => checker.expr(&stmt.rhs, &scope, false, stmt.pos)?,
                        StmtKind::Bare => checker.expr(&stmt.rhs, &scope, true, stmt.pos)?,
                    }
                    if let Some(name) = &stmt.binds {
                        checker.bind(&mut scope, name, stmt.pos)?;
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Checks one expression that a worker will evaluate with every free
/// variable already substituted.
pub(crate) fn check_task_expr(table: &SymbolTable, expr: &Expr) -> Result<(), LangError> {
    let checker = Checker { table, context: "task" };
    checker.expr(expr, &BTreeSet::new(), true, Pos::default())
}

struct Checker<'a> {
    table: &'a SymbolTable,
    context: &'a str,
}

impl Checker<'_> {
    fn purity(&self, message: String, pos: Pos) -> LangError {
        LangError::Purity { message, context: self.context.to_string(), pos }
    }

    fn bind(&self, scope: &mut BTreeSet<String>, name: &str, pos: Pos) -> Result<(), LangError> {
        if self.table.get(name).is_some() || !scope.insert(name.to_string()) {
            return Err(LangError::Rebound { name: name.to_string(), context: self.context.to_string(), pos });
        }
        Ok(())
    }

    /// `effect_at_head` allows the outermost call, and only it, to be effectful.
    fn expr(&self, expr: &Expr, scope: &BTreeSet<String>, effect_at_head: bool, pos: Pos) -> Result<(), LangError> {
        match expr {
            Expr::Lit(_) | Expr::Const(_) => Ok(()),
            Expr::Var(name) => {
                if scope.contains(name) {
                    Ok(())
                } else {
                    Err(LangError::UnknownIdentifier { name: name.clone(), context: self.context.to_string(), pos })
                }
            }
            Expr::Tuple(items) => items.iter().try_for_each(|e| self.expr(e, scope, false, pos)),
            Expr::Call { callee, args } => {
                let Some(symbol) = self.table.get(callee) else {
                    return Err(LangError::UnknownIdentifier {
                        name: callee.clone(),
                        context: self.context.to_string(),
                        pos,
                    });
                };
                if symbol.arity != args.len() {
                    return Err(LangError::Arity {
                        callee: callee.clone(),
                        expected: symbol.arity,
                        got: args.len(),
                        context: self.context.to_string(),
                        pos,
                    });
                }
                if symbol.purity == Purity::Effectful && !effect_at_head {
                    return Err(self.purity(format!("IO function `{callee}` called in a pure position"), pos));
                }
                args.iter().try_for_each(|e| self.expr(e, scope, false, pos))
            }
            Expr::If { cond, then_branch, else_branch } => {
                self.expr(cond, scope, false, pos)?;
                self.expr(then_branch, scope, false, pos)?;
                self.expr(else_branch, scope, false, pos)
            }
            Expr::BinOp { lhs, rhs, .. } => {
                self.expr(lhs, scope, false, pos)?;
                self.expr(rhs, scope, false, pos)
            }
        }
    }
}
