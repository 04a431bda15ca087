//! One-variable arithmetic expressions for level trajectories `e_i(a)`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;
//! primary = number | "a" | "(" , expr , ")" ;
//! number  = digits , [ "." , [ digits ] ] , [ exponent ]
//!         | "." , digits , [ exponent ] ;
//! exponent = ( "e" | "E" ) , [ "+" | "-" ] , digits ;
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-a^2`
//! is `-(a^2)` and `2^-a` is `2^(-a)`. Whitespace is ignored between tokens.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree. Grouping parentheses do not survive parsing;
/// they only shape the tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedEnd,
    UnexpectedChar(char),
    UnknownIdentifier(String),
    UnbalancedParen,
    InvalidNumber(String),
    TrailingInput,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub offset: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::UnbalancedParen => write!(f, "unbalanced parenthesis"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::TrailingInput => write!(f, "trailing input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at a = {a}")]
    DivisionByZero { a: f64 },
    #[error("non-finite value at a = {a}")]
    NonFinite { a: f64 },
}

impl EvalError {
    pub fn parameter(&self) -> f64 {
        match *self {
            EvalError::DivisionByZero { a } | EvalError::NonFinite { a } => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Token {
    Num(f64),
    Var,
    Op(BinOp),
    Minus,
    Plus,
    LParen,
    RParen,
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting offset.
    fn next(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&b) = bytes.get(start) else {
            return Ok(None);
        };
        let tok = match b {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Op(BinOp::Mul),
            b'/' => Token::Op(BinOp::Div),
            b'^' => Token::Op(BinOp::Pow),
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => return self.number(start).map(Some),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let len = bytes[start..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == b'_')
                    .count();
                let ident = &self.src[start..start + len];
                if ident != "a" {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(ident.to_string()),
                        offset: start,
                    });
                }
                self.pos += len;
                return Ok(Some((Token::Var, start)));
            }
            _ => {
                let c = self.src[start..].chars().next().unwrap_or('\0');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(c),
                    offset: start,
                });
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }

    fn number(&mut self, start: usize) -> Result<(Token, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |from: usize| bytes[from..].iter().take_while(|c| c.is_ascii_digit()).count();
        let mut end = start;
        let int_len = digits(end);
        end += int_len;
        let mut frac_len = 0;
        if bytes.get(end) == Some(&b'.') {
            frac_len = digits(end + 1);
            end += 1 + frac_len;
        }
        if int_len == 0 && frac_len == 0 {
            return Err(ParseError {
                kind: ParseErrorKind::InvalidNumber(self.src[start..end].to_string()),
                offset: start,
            });
        }
        if matches!(bytes.get(end), Some(b'e' | b'E')) {
            let mut exp_end = end + 1;
            if matches!(bytes.get(exp_end), Some(b'+' | b'-')) {
                exp_end += 1;
            }
            let exp_digits = digits(exp_end);
            if exp_digits == 0 {
                return Err(ParseError {
                    kind: ParseErrorKind::InvalidNumber(self.src[start..exp_end].to_string()),
                    offset: start,
                });
            }
            end = exp_end + exp_digits;
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ParseError {
            kind: ParseErrorKind::InvalidNumber(text.to_string()),
            offset: start,
        })?;
        if !value.is_finite() {
            return Err(ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                offset: start,
            });
        }
        self.pos = end;
        Ok((Token::Num(value), start))
    }
}

struct Parser<'s> {
    lexer: Lexer<'s>,
    peeked: Option<(Token, usize)>,
    depth: usize,
}

impl<'s> Parser<'s> {
    fn peek(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next()?;
        }
        Ok(self.peeked)
    }

    fn bump(&mut self) {
        self.peeked = None;
    }

    fn end_offset(&self) -> usize {
        self.lexer.src.len()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()? {
                Some((Token::Plus, _)) => BinOp::Add,
                Some((Token::Minus, _)) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek()? {
                Some((Token::Op(op @ (BinOp::Mul | BinOp::Div)), _)) => op,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((Token::Minus, _)) = self.peek()? {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some((Token::Op(BinOp::Pow), _)) = self.peek()? {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some((tok, offset)) = self.peek()? else {
            return Err(ParseError {
                kind: ParseErrorKind::UnexpectedEnd,
                offset: self.end_offset(),
            });
        };
        self.bump();
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Var => Ok(Expr::Var),
            Token::LParen => {
                self.depth += 1;
                let inner = self.expr()?;
                match self.peek()? {
                    Some((Token::RParen, _)) => {
                        self.bump();
                        self.depth -= 1;
                        Ok(inner)
                    }
                    Some((_, at)) => Err(ParseError {
                        kind: ParseErrorKind::UnbalancedParen,
                        offset: at,
                    }),
                    None => Err(ParseError {
                        kind: ParseErrorKind::UnbalancedParen,
                        offset,
                    }),
                }
            }
            Token::RParen => Err(ParseError {
                kind: ParseErrorKind::UnbalancedParen,
                offset,
            }),
            Token::Plus => Err(ParseError {
                kind: ParseErrorKind::UnexpectedChar('+'),
                offset,
            }),
            Token::Minus => unreachable!("unary minus handled by caller"),
            Token::Op(op) => Err(ParseError {
                kind: ParseErrorKind::UnexpectedChar(op.symbol()),
                offset,
            }),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        peeked: None,
        depth: 0,
    };
    let expr = parser.expr()?;
    match parser.peek()? {
        None => Ok(expr),
        Some((Token::RParen, offset)) => Err(ParseError {
            kind: ParseErrorKind::UnbalancedParen,
            offset,
        }),
        Some((_, offset)) => Err(ParseError {
            kind: ParseErrorKind::TrailingInput,
            offset,
        }),
    }
}

impl Expr {
    /// Evaluates the tree at parameter `a` in plain IEEE double arithmetic.
    pub fn eval(&self, a: f64) -> Result<f64, EvalError> {
        let v = self.eval_inner(a)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { a })
        }
    }

    fn eval_inner(&self, a: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var => a,
            Expr::Neg(inner) => -inner.eval_inner(a)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval_inner(a)?;
                let r = rhs.eval_inner(a)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero { a });
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            // Debug formatting of f64 is the shortest round-trip representation.
            Expr::Num(v) => write!(f, "{v:?}")?,
            Expr::Var => f.write_str("a")?,
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_at(f, 3)?;
            }
            Expr::Binary(op, lhs, rhs) => {
                let (l, r) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                lhs.fmt_at(f, l)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_at(f, r)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Evaluates `ast` at `a`.
pub fn eval_expr(ast: &Expr, a: f64) -> Result<f64, EvalError> {
    ast.eval(a)
}
