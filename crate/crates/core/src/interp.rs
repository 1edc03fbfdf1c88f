//! Sequential reference interpreter.
//!
//! Runs whole programs in source order (the single-thread baseline and the
//! oracle that distributed runs are compared against) and evaluates single
//! task expressions on workers. Evaluation is call-by-value, left to right,
//! with wrapping 64-bit arithmetic.

use std::collections::HashMap;

use thiserror::Error;

use crate::depgraph::TaskId;
use crate::kernels::{self, KernelError};
use crate::lang::{Body, Expr, Program, Purity, Stmt};
use crate::value::Value;

pub const DEFAULT_MAX_DEPTH: usize = 10_000;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROWTH: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{callee}` expects {expected} argument(s), got {got}")]
    Arity { callee: String, expected: usize, got: usize },
    #[error("call depth limit of {0} exceeded")]
    DepthExceeded(usize),
    #[error("{context} must be an Int, got {got}")]
    NotInt { context: &'static str, got: &'static str },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("do-block of `{0}` is empty")]
    EmptyBlock(String),
    #[error("entry `{0}` not found")]
    EntryNotFound(String),
    #[error("entry `{0}` must be a nullary IO function with a do-block")]
    BadEntry(String),
    #[error("statement {index}: {source}")]
    AtStatement { index: usize, source: Box<EvalError> },
}

/// Variable bindings of one activation plus its call depth.
#[derive(Debug, Clone, Default)]
pub struct Env {
    bindings: HashMap<String, Value>,
    depth: usize,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Env {
        self.bindings.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

/// Result of a whole-program sequential run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqRun {
    pub value: Value,
    pub output: String,
    /// Value of every entry statement, in execution order.
    pub steps: Vec<(TaskId, Value)>,
}

#[derive(Debug, Clone, Copy)]
pub struct Interpreter<'p> {
    program: &'p Program,
    max_depth: usize,
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p Program) -> Interpreter<'p> {
        Interpreter { program, max_depth: DEFAULT_MAX_DEPTH }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Evaluates `expr`, appending anything printed to `out`.
    pub fn eval(&self, env: &Env, expr: &Expr, out: &mut String) -> Result<Value, EvalError> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.eval_inner(env, expr, out))
    }

    fn eval_inner(&self, env: &Env, expr: &Expr, out: &mut String) -> Result<Value, EvalError> {
        match expr {
            Expr::Lit(n) => Ok(Value::Int(*n)),
            Expr::Const(v) => Ok(v.clone()),
            Expr::Var(name) => env.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Tuple(items) if items.is_empty() => Ok(Value::Unit),
            Expr::Tuple(items) => {
                let values = items.iter().map(|e| self.eval(env, e, out)).collect::<Result<_, _>>()?;
                Ok(Value::Tuple(values))
            }
            Expr::BinOp { op, lhs, rhs } => {
                let l = self.eval(env, lhs, out)?;
                let r = self.eval(env, rhs, out)?;
                let l = l.as_int().ok_or(EvalError::NotInt { context: "left operand", got: l.kind_name() })?;
                let r = r.as_int().ok_or(EvalError::NotInt { context: "right operand", got: r.kind_name() })?;
                Ok(Value::Int(op.apply(l, r)))
            }
            Expr::If { cond, then_branch, else_branch } => {
                let c = self.eval(env, cond, out)?;
                let c = c.as_int().ok_or(EvalError::NotInt { context: "if condition", got: c.kind_name() })?;
                self.eval(env, if c != 0 { then_branch } else { else_branch }, out)
            }
            Expr::Call { callee, args } => {
                let args = args.iter().map(|e| self.eval(env, e, out)).collect::<Result<Vec<_>, _>>()?;
                self.call(callee, args, env.depth, out)
            }
        }
    }

    fn call(&self, callee: &str, args: Vec<Value>, depth: usize, out: &mut String) -> Result<Value, EvalError> {
        let Some(def) = self.program.def(callee) else {
            if kernels::builtin(callee).is_none() {
                return Err(EvalError::UnknownFunction(callee.to_string()));
            }
            let outcome = kernels::call(callee, &args)?;
            out.push_str(&outcome.printed);
            return Ok(outcome.value);
        };
        if def.params.len() != args.len() {
            return Err(EvalError::Arity { callee: callee.to_string(), expected: def.params.len(), got: args.len() });
        }
        if depth >= self.max_depth {
            return Err(EvalError::DepthExceeded(self.max_depth));
        }
        let mut env = Env { bindings: HashMap::with_capacity(def.params.len()), depth: depth + 1 };
        for (name, value) in def.params.iter().zip(args) {
            env.bindings.insert(name.clone(), value);
        }
        match &def.body {
            Body::Expr(e) => self.eval(&env, e, out),
            Body::Do(stmts) => {
                let mut last = None;
                for stmt in stmts {
                    last = Some(self.exec(&mut env, stmt, out)?);
                }
                last.ok_or_else(|| EvalError::EmptyBlock(def.name.clone()))
            }
        }
    }

    fn exec(&self, env: &mut Env, stmt: &Stmt, out: &mut String) -> Result<Value, EvalError> {
        let value = self.eval(env, &stmt.rhs, out)?;
        if let Some(name) = &stmt.binds {
            env.bindings.insert(name.clone(), value.clone());
        }
        Ok(value)
    }

    /// Runs the entry's statements strictly in source order.
    pub fn run_sequential(&self, entry: &str) -> Result<SeqRun, EvalError> {
        let def = self.program.def(entry).ok_or_else(|| EvalError::EntryNotFound(entry.to_string()))?;
        let Body::Do(stmts) = &def.body else {
            return Err(EvalError::BadEntry(entry.to_string()));
        };
        if def.purity() != Purity::Effectful || !def.params.is_empty() {
            return Err(EvalError::BadEntry(entry.to_string()));
        }
        let mut env = Env::new();
        let mut output = String::new();
        let mut steps = Vec::with_capacity(stmts.len());
        for (index, stmt) in stmts.iter().enumerate() {
            let value = self
                .exec(&mut env, stmt, &mut output)
                .map_err(|e| EvalError::AtStatement { index, source: Box::new(e) })?;
            steps.push((TaskId(index), value));
        }
        // An empty entry does nothing and yields unit, as the scheduler does.
        let value = steps.last().map_or(Value::Unit, |(_, v)| v.clone());
        Ok(SeqRun { value, output, steps })
    }
}

/// Convenience wrapper over [`Interpreter::run_sequential`].
pub fn run_sequential(program: &Program, entry: &str) -> Result<SeqRun, EvalError> {
    Interpreter::new(program).run_sequential(entry)
}

/// Evaluates one self-contained task expression, returning its value and
/// printed text.
pub fn eval_task(program: &Program, expr: &Expr) -> Result<(Value, String), EvalError> {
    let mut out = String::new();
    let value = Interpreter::new(program).eval(&Env::new(), expr, &mut out)?;
    Ok((value, out))
}
