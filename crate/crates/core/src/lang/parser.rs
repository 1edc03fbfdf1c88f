//! Line-oriented recursive descent parser.
//!
//! Tokens are grouped into physical lines first; layout decisions only look
//! at the column of the first token on a line. Inside a line the grammar is
//! ordinary recursive descent with `*` binding tighter than `+` and `-`.
//!
//! A bare identifier that names a top-level function or builtin parses as a
//! nullary call, so `x <- clean_files` becomes `Call(clean_files, [])`.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{BinOp, Body, Expr, FuncDef, Pos, Program, Stmt, StmtKind, TypeExpr};
use super::lexer::{Token, TokenKind};
use super::LangError;
use crate::kernels::BUILTINS;

struct Line<'a> {
    indent: u32,
    tokens: &'a [Token],
}

fn split_lines(tokens: &[Token]) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let line_no = tokens[start].pos.line;
        let len = tokens[start..].iter().take_while(|t| t.pos.line == line_no).count();
        lines.push(Line { indent: tokens[start].pos.col, tokens: &tokens[start..start + len] });
        start += len;
    }
    lines
}

fn is_signature(line: &Line<'_>) -> bool {
    matches!(line.tokens, [Token { kind: TokenKind::Ident(_), .. }, Token { kind: TokenKind::DoubleColon, .. }, ..])
}

fn syntax(pos: Pos, message: impl Into<String>) -> LangError {
    LangError::Syntax { pos, message: message.into() }
}

pub fn parse_program(tokens: &[Token]) -> Result<Program, LangError> {
    let builtins: BTreeSet<String> = BUILTINS.iter().map(|b| b.name.to_string()).collect();
    let lines = split_lines(tokens);

    let mut globals = builtins.clone();
    for line in lines.iter().filter(|l| is_signature(l)) {
        if let TokenKind::Ident(name) = &line.tokens[0].kind {
            globals.insert(name.clone());
        }
    }

    let mut signatures: BTreeMap<String, (TypeExpr, Pos)> = BTreeMap::new();
    let mut heads: Vec<(String, Vec<String>, Body, Pos)> = Vec::new();

    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let pos = line.tokens[0].pos;
        i += 1;
        if is_signature(line) {
            let TokenKind::Ident(name) = &line.tokens[0].kind else { unreachable!() };
            let signature = parse_signature(&line.tokens[2..], pos)?;
            if builtins.contains(name) {
                return Err(LangError::ShadowsBuiltin { name: name.clone(), pos });
            }
            if signatures.insert(name.clone(), (signature, pos)).is_some() {
                return Err(LangError::Duplicate { name: name.clone(), pos });
            }
            reject_continuation(&lines, &mut i, line.indent)?;
            continue;
        }

        let (name, params, rest) = parse_def_head(line.tokens)?;
        let body = match rest {
            [Token { kind: TokenKind::Do, .. }] => {
                let mut stmts = Vec::new();
                while i < lines.len() && lines[i].indent > line.indent {
                    stmts.push(parse_stmt(lines[i].tokens, &globals)?);
                    i += 1;
                }
                Body::Do(stmts)
            }
            _ => {
                if let Some(tok) = rest.iter().find(|t| t.kind == TokenKind::Do) {
                    return Err(syntax(tok.pos, "`do` must directly follow `=` and end its line"));
                }
                let body = parse_line_expr(rest, &globals, line.tokens.last().unwrap().pos)?;
                reject_continuation(&lines, &mut i, line.indent)?;
                Body::Expr(body)
            }
        };
        heads.push((name, params, body, pos));
    }

    let mut seen = BTreeSet::new();
    let mut defs = Vec::with_capacity(heads.len());
    for (name, params, body, pos) in heads {
        if builtins.contains(&name) {
            return Err(LangError::ShadowsBuiltin { name, pos });
        }
        if !seen.insert(name.clone()) {
            return Err(LangError::Duplicate { name, pos });
        }
        let Some((signature, _)) = signatures.get(&name) else {
            return Err(LangError::MissingSignature { name, pos });
        };
        let expected = signature.arity();
        if params.len() != expected {
            return Err(LangError::ParamCount { name, expected, got: params.len(), pos });
        }
        if matches!(body, Body::Do(_)) && !matches!(signature.result(), TypeExpr::Io(_)) {
            return Err(LangError::DoInPureFunction { name, pos });
        }
        defs.push(FuncDef { name, params, signature: signature.clone(), body, pos });
    }
    if let Some((name, (_, pos))) = signatures.iter().find(|(n, _)| !seen.contains(*n)) {
        return Err(LangError::MissingDefinition { name: name.clone(), pos: *pos });
    }

    Ok(Program::new(defs, builtins))
}

/// Signatures and expression bodies fit on one line; a deeper-indented line
/// after them is a layout error rather than a new top-level item.
fn reject_continuation(lines: &[Line<'_>], i: &mut usize, indent: u32) -> Result<(), LangError> {
    match lines.get(*i) {
        Some(next) if next.indent > indent => {
            Err(syntax(next.tokens[0].pos, "unexpected indentation (only do-block statements may be indented)"))
        }
        _ => Ok(()),
    }
}

fn parse_def_head(tokens: &[Token]) -> Result<(String, Vec<String>, &[Token]), LangError> {
    let mut names = Vec::new();
    for (idx, tok) in tokens.iter().enumerate() {
        match &tok.kind {
            TokenKind::Ident(n) => names.push(n.clone()),
            TokenKind::Equals if !names.is_empty() => {
                let rest = &tokens[idx + 1..];
                if rest.is_empty() {
                    return Err(syntax(tok.pos, "expected a body after `=`"));
                }
                let name = names.remove(0);
                return Ok((name, names, rest));
            }
            other => return Err(syntax(tok.pos, format!("expected a signature or definition, found {other}"))),
        }
    }
    let last = tokens.last().unwrap();
    Err(syntax(last.pos, "expected `=` in definition"))
}

fn parse_stmt(tokens: &[Token], globals: &BTreeSet<String>) -> Result<Stmt, LangError> {
    let pos = tokens[0].pos;
    let end = tokens.last().unwrap().pos;
    match tokens {
        [Token { kind: TokenKind::Let, .. }, Token { kind: TokenKind::Ident(name), .. }, Token { kind: TokenKind::Equals, .. }, rest @ ..] =>
        {
            let rhs = parse_line_expr(rest, globals, end)?;
            Ok(Stmt { kind: StmtKind::Let, binds: Some(name.clone()), rhs, pos })
        }
        [Token { kind: TokenKind::Let, .. }, ..] => Err(syntax(pos, "expected `let <name> = <expr>`")),
        [Token { kind: TokenKind::Ident(name), .. }, Token { kind: TokenKind::ArrowBind, .. }, rest @ ..] => {
            let rhs = parse_line_expr(rest, globals, end)?;
            Ok(Stmt { kind: StmtKind::Bind, binds: Some(name.clone()), rhs, pos })
        }
        _ => {
            let rhs = parse_line_expr(tokens, globals, end)?;
            Ok(Stmt { kind: StmtKind::Bare, binds: None, rhs, pos })
        }
    }
}

fn parse_line_expr(tokens: &[Token], globals: &BTreeSet<String>, end: Pos) -> Result<Expr, LangError> {
    let mut p = ExprParser { tokens, at: 0, globals, end };
    let expr = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(syntax(tok.pos, format!("unexpected {} after expression", tok.kind)));
    }
    Ok(expr)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    at: usize,
    globals: &'a BTreeSet<String>,
    end: Pos,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.at)
    }

    fn peek_kind(&self) -> Option<&'a TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn here(&self) -> Pos {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), LangError> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.at += 1;
                Ok(())
            }
            Some(tok) => Err(syntax(tok.pos, format!("expected {kind}, found {}", tok.kind))),
            None => Err(syntax(self.end, format!("expected {kind} before end of line"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.term()?;
            lhs = Expr::binop(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.app()?;
        while self.peek_kind() == Some(&TokenKind::Star) {
            self.at += 1;
            let rhs = self.app()?;
            lhs = Expr::binop(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Ident(_) | TokenKind::Int(_) | TokenKind::LParen | TokenKind::If))
    }

    fn app(&mut self) -> Result<Expr, LangError> {
        let head_pos = self.here();
        if let Some(TokenKind::Ident(name)) = self.peek_kind() {
            self.at += 1;
            let mut args = Vec::new();
            while self.starts_atom() {
                args.push(self.atom()?);
            }
            if args.is_empty() && !self.globals.contains(name) {
                return Ok(Expr::Var(name.clone()));
            }
            return Ok(Expr::call(name.clone(), args));
        }
        let head = self.atom()?;
        if self.starts_atom() {
            return Err(syntax(head_pos, "only named functions can be applied to arguments"));
        }
        Ok(head)
    }

    fn atom(&mut self) -> Result<Expr, LangError> {
        let pos = self.here();
        let Some(tok) = self.peek() else {
            return Err(syntax(self.end, "expected an expression before end of line"));
        };
        self.at += 1;
        match &tok.kind {
            TokenKind::Int(n) => Ok(Expr::Lit(*n)),
            TokenKind::Ident(name) if self.globals.contains(name) => Ok(Expr::call(name.clone(), vec![])),
            TokenKind::Ident(name) => Ok(Expr::Var(name.clone())),
            TokenKind::If => {
                let cond = self.expr()?;
                self.expect(TokenKind::Then)?;
                let then_branch = self.expr()?;
                self.expect(TokenKind::Else)?;
                let else_branch = self.expr()?;
                Ok(Expr::If {
                    cond: Box::new(cond),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            TokenKind::LParen => {
                if self.peek_kind() == Some(&TokenKind::RParen) {
                    self.at += 1;
                    return Ok(Expr::Tuple(vec![]));
                }
                let mut items = vec![self.expr()?];
                while self.peek_kind() == Some(&TokenKind::Comma) {
                    self.at += 1;
                    items.push(self.expr()?);
                }
                self.expect(TokenKind::RParen)?;
                Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Tuple(items) })
            }
            other => Err(syntax(pos, format!("expected an expression, found {other}"))),
        }
    }
}

fn parse_signature(tokens: &[Token], pos: Pos) -> Result<TypeExpr, LangError> {
    if tokens.is_empty() {
        return Err(syntax(pos, "expected a type after `::`"));
    }
    let end = tokens.last().unwrap().pos;
    let mut p = TypeParser { tokens, at: 0, end };
    let ty = p.ty()?;
    if let Some(tok) = tokens.get(p.at) {
        return Err(syntax(tok.pos, format!("unexpected {} in type", tok.kind)));
    }
    let io_in_params = ty.params().iter().any(|p| p.contains_io());
    let io_in_result = match ty.result() {
        TypeExpr::Io(inner) => inner.contains_io(),
        other => other.contains_io(),
    };
    if io_in_params || io_in_result {
        return Err(LangError::MisplacedIo { pos });
    }
    Ok(ty)
}

struct TypeParser<'a> {
    tokens: &'a [Token],
    at: usize,
    end: Pos,
}

impl TypeParser<'_> {
    fn next(&mut self) -> Result<&Token, LangError> {
        let tok = self.tokens.get(self.at).ok_or_else(|| syntax(self.end, "incomplete type"))?;
        self.at += 1;
        Ok(tok)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn ty(&mut self) -> Result<TypeExpr, LangError> {
        let param = self.atype()?;
        if self.peek_kind() == Some(&TokenKind::Arrow) {
            self.at += 1;
            let result = self.ty()?;
            return Ok(TypeExpr::arrow(param, result));
        }
        Ok(param)
    }

    fn atype(&mut self) -> Result<TypeExpr, LangError> {
        let tok = self.next()?;
        let pos = tok.pos;
        match &tok.kind {
            TokenKind::TyInt => Ok(TypeExpr::Int),
            TokenKind::TyMatrix => Ok(TypeExpr::Matrix),
            TokenKind::TySummary => Ok(TypeExpr::Summary),
            TokenKind::Io => Ok(TypeExpr::io(self.atype()?)),
            TokenKind::LParen => {
                if self.peek_kind() == Some(&TokenKind::RParen) {
                    self.at += 1;
                    return Ok(TypeExpr::Unit);
                }
                let mut items = vec![self.ty()?];
                while self.peek_kind() == Some(&TokenKind::Comma) {
                    self.at += 1;
                    items.push(self.ty()?);
                }
                match self.next()? {
                    Token { kind: TokenKind::RParen, .. } => {}
                    other => return Err(syntax(other.pos, format!("expected `)` in type, found {}", other.kind))),
                }
                Ok(if items.len() == 1 { items.pop().unwrap() } else { TypeExpr::Tuple(items) })
            }
            other => Err(syntax(pos, format!("expected a type, found {other}"))),
        }
    }
}
