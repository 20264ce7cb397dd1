//! Recursive-descent parser.
//!
//! ```text
//! expr    = term { ("+" | "-") term }
//! term    = unary { ("*" | "/") unary }
//! unary   = ("-" | "+") unary | power
//! power   = primary [ "^" unary ]
//! primary = number | "x" | "u" | "i" | name "(" expr ")" | "(" expr ")"
//! name    = sqrt | exp | log | ln | sin | cos | tan | sinh | cosh | tanh | coth
//! ```
//!
//! Decimal literals are converted to exact rationals.

use num::{BigInt, Zero};
use thiserror::Error;

use super::{Expr, Func};
use crate::ratfun::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownIdentifier { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token and its starting byte.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|n| (Tok::Num(n), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok((Tok::Ident(s), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        Err(ParseError::Syntax { pos: start, expected: "an operator, number, identifier or parenthesis".into() })
    }

    fn digits(&mut self) -> String {
        let s = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[s..self.pos]).unwrap().to_string()
    }

    fn number(&mut self, start: usize) -> Result<Rational, ParseError> {
        let int_part = self.digits();
        let mut frac_part = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = self.digits();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseError::Syntax { pos: start, expected: "a digit".into() });
        }
        let mut exp: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let d = self.digits();
            if d.is_empty() {
                self.pos = save;
            } else {
                exp = d.parse::<i64>().map_err(|_| ParseError::Syntax { pos: save, expected: "a small exponent".into() })?;
                if neg {
                    exp = -exp;
                }
            }
        }
        let mantissa: BigInt = format!("{int_part}{frac_part}").parse().unwrap_or_else(|_| BigInt::zero());
        let scale = exp - frac_part.len() as i64;
        let ten = BigInt::from(10);
        let p = num::pow::pow(ten, scale.unsigned_abs() as usize);
        Ok(if scale >= 0 {
            Rational::from_integer(mantissa * p)
        } else {
            Rational::new(mantissa, p)
        })
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lex = Lexer { src: src.as_bytes(), pos: 0 };
        let (tok, tok_pos) = lex.next()?;
        Ok(Parser { lex, tok, tok_pos })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, p) = self.lex.next()?;
        self.tok = t;
        self.tok_pos = p;
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.tok == Tok::Op(c) {
            self.bump()
        } else {
            Err(ParseError::Syntax { pos: self.tok_pos, expected: format!("`{c}`") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.bump()?;
                    acc = Expr::add(vec![acc, self.term()?]);
                }
                Tok::Op('-') => {
                    self.bump()?;
                    acc = Expr::sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.bump()?;
                    acc = Expr::mul(vec![acc, self.unary()?]);
                }
                Tok::Op('/') => {
                    self.bump()?;
                    acc = Expr::div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Tok::Op('-') => {
                self.bump()?;
                Ok(Expr::neg(self.unary()?))
            }
            Tok::Op('+') => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let e = self.unary()?;
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.tok_pos;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(q) => {
                self.bump()?;
                Ok(Expr::num(q))
            }
            Tok::Op('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => return Ok(Expr::x()),
                    "u" => return Ok(Expr::u()),
                    "i" => return Ok(Expr::i()),
                    _ => {}
                }
                let f = if name == "sqrt" {
                    None
                } else {
                    Some(Func::from_name(&name).ok_or(ParseError::UnknownIdentifier { name: name.clone(), pos })?)
                };
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(')')?;
                Ok(match f {
                    None => Expr::sqrt(a),
                    Some(f) => Expr::func(f, a),
                })
            }
            other => {
                self.tok = other;
                Err(ParseError::Syntax { pos, expected: "a number, identifier or `(`".into() })
            }
        }
    }
}

/// Parses infix text into an expression.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(ParseError::Syntax { pos: p.tok_pos, expected: "an operator or end of input".into() });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Node, Var};

    #[test]
    fn parses_variables_and_numbers() {
        assert_eq!(parse("x").unwrap().node(), &Node::Var(Var::X));
        assert_eq!(parse("0.25").unwrap(), Expr::frac(1, 4));
        assert_eq!(parse("1.5e2").unwrap(), Expr::int(150));
        assert_eq!(parse("2e-3").unwrap(), Expr::frac(1, 500));
    }

    #[test]
    fn reports_positions() {
        assert_eq!(parse("u + ").unwrap_err().position(), 4);
        assert!(matches!(parse("u + foo(x)"), Err(ParseError::UnknownIdentifier { pos: 4, .. })));
        assert!(matches!(parse("(x + 1"), Err(ParseError::Syntax { pos: 6, .. })));
        assert!(matches!(parse("x $ 1"), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("2 x"), Err(ParseError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse("-x^2").unwrap(), Expr::neg(Expr::powi(Expr::x(), 2)));
        assert_eq!(parse("x/2/u").unwrap(), parse("(x/2)/u").unwrap());
        assert_eq!(parse("1 - 2 - 3").unwrap(), Expr::int(-4));
    }

    #[test]
    fn euler_cauchy_rhs_parses() {
        let e = parse("u/(2*x) + (3/(2*x))*sqrt(u^2 - 4*x)").unwrap();
        assert!(matches!(e.node(), Node::Add(ts) if ts.len() == 2));
    }
}
