//! Source printer. Output re-parses to the same program, modulo positions.

use std::fmt::Write;

use super::ast::{Body, Expr, Program, TypeExpr};

pub fn pretty_type(ty: &TypeExpr) -> String {
    match ty {
        TypeExpr::Arrow(param, result) => {
            let lhs = match param.as_ref() {
                TypeExpr::Arrow(..) => format!("({})", pretty_type(param)),
                other => pretty_type(other),
            };
            format!("{lhs} -> {}", pretty_type(result))
        }
        TypeExpr::Io(inner) => match inner.as_ref() {
            TypeExpr::Arrow(..) | TypeExpr::Io(_) => format!("IO ({})", pretty_type(inner)),
            other => format!("IO {}", pretty_type(other)),
        },
        TypeExpr::Int => "Int".into(),
        TypeExpr::Unit => "()".into(),
        TypeExpr::Matrix => "Matrix".into(),
        TypeExpr::Summary => "Summary".into(),
        TypeExpr::Tuple(items) => {
            let parts: Vec<_> = items.iter().map(pretty_type).collect();
            format!("({})", parts.join(", "))
        }
    }
}

// Binding strength of the context an expression is printed into.
const TOP: u8 = 0;
const ADD: u8 = 1;
const MUL: u8 = 2;
const ARG: u8 = 3;

pub fn pretty_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, TOP);
    out
}

fn write_expr(out: &mut String, expr: &Expr, ctx: u8) {
    match expr {
        Expr::Lit(n) if *n < 0 => {
            // No negative literals in the grammar.
            let _ = write!(out, "(0 - {})", n.unsigned_abs());
        }
        Expr::Lit(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Const(v) => {
            let _ = write!(out, "<{v}>");
        }
        Expr::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, TOP);
            }
            out.push(')');
        }
        Expr::Call { callee, args } => {
            let wrap = !args.is_empty() && ctx >= ARG;
            if wrap {
                out.push('(');
            }
            out.push_str(callee);
            for arg in args {
                out.push(' ');
                write_expr(out, arg, ARG);
            }
            if wrap {
                out.push(')');
            }
        }
        Expr::If { cond, then_branch, else_branch } => {
            let wrap = ctx > TOP;
            if wrap {
                out.push('(');
            }
            out.push_str("if ");
            write_expr(out, cond, TOP);
            out.push_str(" then ");
            write_expr(out, then_branch, TOP);
            out.push_str(" else ");
            write_expr(out, else_branch, TOP);
            if wrap {
                out.push(')');
            }
        }
        Expr::BinOp { op, lhs, rhs } => {
            let level = match op {
                super::BinOp::Mul => MUL,
                _ => ADD,
            };
            let wrap = ctx > level;
            if wrap {
                out.push('(');
            }
            // Left associative: the right operand needs one level more.
            write_expr(out, lhs, level.max(ADD));
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, level + 1);
            if wrap {
                out.push(')');
            }
        }
    }
}

pub fn pretty_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, def) in program.defs().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{} :: {}", def.name, pretty_type(&def.signature));
        out.push_str(&def.name);
        for p in &def.params {
            out.push(' ');
            out.push_str(p);
        }
        match &def.body {
            Body::Expr(e) => {
                let _ = writeln!(out, " = {}", pretty_expr(e));
            }
            Body::Do(stmts) => {
                out.push_str(" = do\n");
                for stmt in stmts {
                    let rhs = pretty_expr(&stmt.rhs);
                    let _ = match (&stmt.kind, &stmt.binds) {
                        (super::StmtKind::Bind, Some(name)) => writeln!(out, "    {name} <- {rhs}"),
                        (super::StmtKind::Let, Some(name)) => writeln!(out, "    let {name} = {rhs}"),
                        _ => writeln!(out, "    {rhs}"),
                    };
                }
            }
        }
    }
    out
}
