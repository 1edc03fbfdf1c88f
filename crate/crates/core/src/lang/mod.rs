//! The source language: a small, pure-by-default functional language with
//! Haskell-flavoured surface syntax.
//!
//! Every top-level definition carries a signature. Purity is read straight
//! off that signature: a function whose final result type is `IO _` is
//! effectful, everything else is pure. There is no type inference.
//!
//! ```text
//! complex_evaluation :: Summary -> Int
//! main :: IO ()
//! main = do
//!     x <- clean_files
//!     let y = complex_evaluation x
//!     z <- semantic_analysis
//!     print (y, z)
//! ```
//!
//! Layout: `do` must be the last token on its line. The block holds the
//! following lines indented strictly deeper than the defining line, one
//! statement per line, and ends at the first line indented less or equal.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod resolve;

use thiserror::Error;

pub use ast::{purity_of, BinOp, Body, Expr, FuncDef, Pos, Program, Purity, Stmt, StmtKind, TypeExpr};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_program;
pub use pretty::{pretty_expr, pretty_program, pretty_type};
pub(crate) use resolve::check_task_expr;
pub use resolve::{resolve, Symbol, SymbolKind, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{pos}: lex error: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: definition of `{name}` has no signature")]
    MissingSignature { name: String, pos: Pos },
    #[error("{pos}: signature for `{name}` has no definition")]
    MissingDefinition { name: String, pos: Pos },
    #[error("{pos}: `{name}` is defined more than once")]
    Duplicate { name: String, pos: Pos },
    #[error("{pos}: `{name}` is a builtin and cannot be redefined")]
    ShadowsBuiltin { name: String, pos: Pos },
    #[error("{pos}: `{name}` uses a do-block but its signature is not IO")]
    DoInPureFunction { name: String, pos: Pos },
    #[error("{pos}: `{name}` has {got} parameter(s) but its signature takes {expected}")]
    ParamCount { name: String, expected: usize, got: usize, pos: Pos },
    #[error("{pos}: IO may only appear as the final result type")]
    MisplacedIo { pos: Pos },
    #[error("{pos}: in `{context}`: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, context: String, pos: Pos },
    #[error("{pos}: in `{context}`: `{callee}` takes {expected} argument(s), given {got}")]
    Arity { callee: String, expected: usize, got: usize, context: String, pos: Pos },
    #[error("{pos}: in `{context}`: purity violation: {message}")]
    Purity { message: String, context: String, pos: Pos },
    #[error("{pos}: in `{context}`: `{name}` is bound more than once")]
    Rebound { name: String, context: String, pos: Pos },
}

/// Tokenizes, parses against the builtin table and resolves in one step.
pub fn load(source: &str) -> Result<(Program, SymbolTable), LangError> {
    let tokens = tokenize(source)?;
    let program = parse_program(&tokens)?;
    let symbols = resolve(&program)?;
    Ok((program, symbols))
}
