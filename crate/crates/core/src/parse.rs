//! Text grammar for nets, symbols and amplitudes.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/')? unary)*        juxtaposition multiplies: 2i, 3x1
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)?
//! primary := number | 'i' | 'eps' | 'negl' | variable | '(' expr ')'
//! ```
//!
//! `eps^p` takes a signed rational exponent (`eps^-3`, `eps^(-1/2)`); any other
//! base takes a signed integer, negative meaning the reciprocal.

use crate::coeff::{g_i, g_re, Rat};
use crate::error::{Error, Result};
use crate::nets::NetExpr;
use crate::symbolic::{amplitude_var_names, symbol_var_names, AmplitudeExpr, Poly, RationalExpr, SymbolExpr};
use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Op(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value = parse_decimal(&text).ok_or(Error::Parse {
                line: tl,
                column: tc,
                message: format!("bad number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if "+-*/^()".contains(c) {
            out.push(Token {
                tok: Tok::Op(c),
                line: tl,
                column: tc,
            });
            i += 1;
            col += 1;
            continue;
        }
        return Err(Error::Parse {
            line: tl,
            column: tc,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

fn parse_decimal(text: &str) -> Option<Rat> {
    let mut parts = text.split('.');
    let int = parts.next()?;
    let frac = parts.next().unwrap_or("");
    if parts.next().is_some() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = BigInt::from(10u32).pow(frac.len() as u32);
    Some(Rat::new(n, d))
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    names: &'a [String],
}

enum Value {
    Expr(RationalExpr),
    /// The bare `eps` atom, kept apart so that it can take a rational exponent.
    Eps,
}

impl<'a> Parser<'a> {
    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::Parse {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<RationalExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    let at = self.pos;
                    let d = self.unary()?;
                    acc = acc.div(&d).map_err(|e| {
                        self.pos = at;
                        self.err(e.to_string())
                    })?;
                }
                Tok::Num(_) | Tok::Ident(_) | Tok::Op('(') => {
                    acc = acc.mul(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RationalExpr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn signed_rational(&mut self) -> Result<Rational64> {
        let paren = *self.peek() == Tok::Op('(');
        if paren {
            self.bump();
        }
        let neg = match self.peek() {
            Tok::Op('-') => {
                self.bump();
                true
            }
            Tok::Op('+') => {
                self.bump();
                false
            }
            _ => false,
        };
        let num = match self.bump() {
            Tok::Num(r) => r,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected exponent"));
            }
        };
        let mut r = num;
        if *self.peek() == Tok::Op('/') && matches!(self.toks[self.pos + 1].tok, Tok::Num(_)) {
            self.bump();
            if let Tok::Num(d) = self.bump() {
                if d.is_zero() {
                    return Err(self.err("zero denominator in exponent"));
                }
                r /= d;
            }
        }
        if paren {
            self.expect_op(')')?;
        }
        if neg {
            r = -r;
        }
        let n = r.numer().to_i64().ok_or_else(|| self.err("exponent too large"))?;
        let d = r.denom().to_i64().ok_or_else(|| self.err("exponent too large"))?;
        Ok(Rational64::new(n, d))
    }

    fn power(&mut self) -> Result<RationalExpr> {
        let base = self.primary()?;
        let n = self.nvars();
        if *self.peek() != Tok::Op('^') {
            return Ok(match base {
                Value::Expr(e) => e,
                Value::Eps => RationalExpr::constant(n, NetExpr::eps_pow(Rational64::one())),
            });
        }
        self.bump();
        let at = self.pos;
        let p = self.signed_rational()?;
        match base {
            Value::Eps => Ok(RationalExpr::constant(n, NetExpr::eps_pow(p))),
            Value::Expr(e) => {
                if !p.is_integer() {
                    self.pos = at;
                    return Err(self.err("only eps takes a non-integer exponent"));
                }
                let k = *p.numer();
                let k = i32::try_from(k).map_err(|_| self.err("exponent too large"))?;
                e.powi(k).map_err(|err| {
                    self.pos = at;
                    self.err(err.to_string())
                })
            }
        }
    }

    fn primary(&mut self) -> Result<Value> {
        let n = self.nvars();
        match self.bump() {
            Tok::Num(r) => Ok(Value::Expr(RationalExpr::constant(n, NetExpr::constant(g_re(r))))),
            Tok::Ident(id) => match id.as_str() {
                "i" => Ok(Value::Expr(RationalExpr::constant(n, NetExpr::constant(g_i())))),
                "eps" => Ok(Value::Eps),
                "negl" => Ok(Value::Expr(RationalExpr::constant(n, NetExpr::negl_pow(1)))),
                name => match self.names.iter().position(|v| v == name) {
                    Some(k) => Ok(Value::Expr(RationalExpr::from_poly(Poly::var(n, k)))),
                    None => {
                        self.pos -= 1;
                        Err(self.err(format!("unknown identifier `{name}`")))
                    }
                },
            },
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(Value::Expr(e))
            }
            Tok::End => {
                self.pos = self.toks.len() - 1;
                Err(self.err("unexpected end of input"))
            }
            Tok::Op(c) => {
                self.pos -= 1;
                Err(self.err(format!("unexpected `{c}`")))
            }
        }
    }
}

/// Parses an expression over the given variable names.
pub fn parse_expr(src: &str, names: &[String]) -> Result<RationalExpr> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

fn max_index(src: &str, prefixes: &[&str]) -> usize {
    let mut best = 0;
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let id: String = bytes[start..i].iter().collect();
            for p in prefixes {
                if let Some(rest) = id.strip_prefix(p) {
                    if let Ok(k) = rest.parse::<usize>() {
                        best = best.max(k);
                    }
                }
            }
        } else {
            i += 1;
        }
    }
    best
}

/// Parses a symbol in x1..xn, xi1..xin; n is inferred from the largest index when absent.
pub fn parse_symbol(src: &str, n: Option<usize>) -> Result<SymbolExpr> {
    let n = n.unwrap_or_else(|| max_index(src, &["xi", "x"]).max(1));
    let body = parse_expr(src, &symbol_var_names(n))?;
    Ok(SymbolExpr::from_rational(n, body))
}

/// Parses an amplitude in x1..xn, y1..yn, xi1..xin.
pub fn parse_amplitude(src: &str, n: Option<usize>) -> Result<AmplitudeExpr> {
    let n = n.unwrap_or_else(|| max_index(src, &["xi", "x", "y"]).max(1));
    let body = parse_expr(src, &amplitude_var_names(n))?;
    Ok(AmplitudeExpr::new(n, body))
}

/// Parses a net such as `3/2*eps^(-1/2) + (1+i)*eps^2*negl`.
pub fn parse_net(src: &str) -> Result<NetExpr> {
    let e = parse_expr(src, &[])?;
    match e.as_poly().and_then(|p| p.as_constant()) {
        Some(c) => Ok(c),
        None => Err(Error::Parse {
            line: 1,
            column: 1,
            message: "not a closed-form net".into(),
        }),
    }
}
