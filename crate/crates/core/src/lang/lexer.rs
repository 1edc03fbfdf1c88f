use std::fmt;

use super::{LangError, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Do,
    Let,
    If,
    Then,
    Else,
    Io,
    TyInt,
    TyMatrix,
    TySummary,
    DoubleColon,
    Arrow,
    ArrowBind,
    Equals,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Int(n) => write!(f, "integer {n}"),
            other => {
                let text = match other {
                    TokenKind::Do => "do",
                    TokenKind::Let => "let",
                    TokenKind::If => "if",
                    TokenKind::Then => "then",
                    TokenKind::Else => "else",
                    TokenKind::Io => "IO",
                    TokenKind::TyInt => "Int",
                    TokenKind::TyMatrix => "Matrix",
                    TokenKind::TySummary => "Summary",
                    TokenKind::DoubleColon => "::",
                    TokenKind::Arrow => "->",
                    TokenKind::ArrowBind => "<-",
                    TokenKind::Equals => "=",
                    TokenKind::LParen => "(",
                    TokenKind::RParen => ")",
                    TokenKind::Comma => ",",
                    TokenKind::Plus => "+",
                    TokenKind::Minus => "-",
                    TokenKind::Star => "*",
                    TokenKind::Ident(_) | TokenKind::Int(_) => unreachable!(),
                };
                write!(f, "`{text}`")
            }
        }
    }
}

/// A token and where it starts. The layout rule reads indentation from
/// `pos.col` of the first token on each line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "do" => TokenKind::Do,
        "let" => TokenKind::Let,
        "if" => TokenKind::If,
        "then" => TokenKind::Then,
        "else" => TokenKind::Else,
        "IO" => TokenKind::Io,
        "Int" => TokenKind::TyInt,
        "Matrix" => TokenKind::TyMatrix,
        "Summary" => TokenKind::TySummary,
        _ => return None,
    })
}

const TAB_STOP: u32 = 8;

pub fn tokenize(source: &str) -> Result<Vec<Token>, LangError> {
    let mut tokens = Vec::new();
    for (line_idx, line) in source.lines().enumerate() {
        let line_no = line_idx as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut col = 1u32;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: line_no, col };
            if c == ' ' || c == '\r' {
                i += 1;
                col += 1;
                continue;
            }
            if c == '\t' {
                i += 1;
                col = ((col - 1) / TAB_STOP + 1) * TAB_STOP + 1;
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (kind, width) = match (c, next) {
                ('-', Some('-')) => break,
                ('-', Some('>')) => (TokenKind::Arrow, 2),
                ('<', Some('-')) => (TokenKind::ArrowBind, 2),
                (':', Some(':')) => (TokenKind::DoubleColon, 2),
                ('=', _) => (TokenKind::Equals, 1),
                ('(', _) => (TokenKind::LParen, 1),
                (')', _) => (TokenKind::RParen, 1),
                (',', _) => (TokenKind::Comma, 1),
                ('+', _) => (TokenKind::Plus, 1),
                ('-', _) => (TokenKind::Minus, 1),
                ('*', _) => (TokenKind::Star, 1),
                (d, _) if d.is_ascii_digit() => {
                    let len = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
                    let text: String = chars[i..i + len].iter().collect();
                    let n = text.parse::<i64>().map_err(|_| LangError::Syntax {
                        pos,
                        message: format!("integer literal {text} does not fit in 64 bits"),
                    })?;
                    (TokenKind::Int(n), len)
                }
                (a, _) if a.is_alphabetic() || a == '_' => {
                    let len =
                        chars[i..].iter().take_while(|c| c.is_alphanumeric() || **c == '_' || **c == '\'').count();
                    let word: String = chars[i..i + len].iter().collect();
                    (keyword(&word).unwrap_or(TokenKind::Ident(word)), len)
                }
                (other, _) => return Err(LangError::Lex { pos, message: format!("unrecognized character {other:?}") }),
            };
            tokens.push(Token { kind, pos });
            i += width;
            col += width as u32;
        }
    }
    Ok(tokens)
}
