//! Recursive-descent machinery shared by the format parsers: a token
//! cursor plus expression, interval, and time parsing.

use crate::diag::Diagnostic;
use crate::lexer::{lex, Spanned, Tok};
use num_rational::Ratio;
use tpnsec_core::expr::{CmpOp, Expr};
use tpnsec_core::time::{Rat, TimeBound, TimeInterval};

pub struct Cursor<'a> {
    pub file: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(file: &'a str, text: &str) -> Result<Cursor<'a>, Diagnostic> {
        Ok(Cursor {
            file,
            toks: lex(file, text)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    pub fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn err(&self, message: impl Into<String>) -> Diagnostic {
        let (line, col) = self.here();
        Diagnostic::error(self.file, line, col, message)
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    /// Matches a contextual keyword.
    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if let Tok::Ident(s) = self.peek() {
            if s == kw {
                self.bump();
                return true;
            }
        }
        false
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!(
                "expected `{}`, found {}",
                kw,
                self.peek().describe()
            )))
        }
    }

    /// An identifier or quoted name.
    pub fn ident(&mut self) -> Result<String, Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected a name, found {}", other.describe()))),
        }
    }

    pub fn string(&mut self) -> Result<String, Diagnostic> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!(
                "expected a quoted string, found {}",
                other.describe()
            ))),
        }
    }

    /// Plain (unit-less) integer.
    pub fn integer(&mut self) -> Result<i64, Diagnostic> {
        match self.peek().clone() {
            Tok::Number { raw, unit: None } if !raw.contains('.') => {
                let n = raw
                    .parse::<i64>()
                    .map_err(|_| self.err(format!("integer out of range: {}", raw)))?;
                self.bump();
                Ok(n)
            }
            other => Err(self.err(format!("expected an integer, found {}", other.describe()))),
        }
    }

    /// Nonnegative time literal with an optional unit suffix, normalized
    /// to the canonical unit (ms): `500`, `0.3ms`, `20us`, `1.5s`.
    pub fn time(&mut self) -> Result<Rat, Diagnostic> {
        match self.peek().clone() {
            Tok::Number { raw, unit } => {
                let value = parse_decimal(&raw)
                    .ok_or_else(|| self.err(format!("bad time literal `{}`", raw)))?;
                let scale: Rat = match unit.as_deref() {
                    None | Some("ms") => Ratio::from_integer(1),
                    Some("us") => Ratio::new(1, 1000),
                    Some("s") => Ratio::from_integer(1000),
                    Some(u) => {
                        return Err(self.err(format!(
                            "unknown time unit `{}`; use us, ms, or s",
                            u
                        )))
                    }
                };
                if value < Ratio::from_integer(0) {
                    return Err(self.err("time literals must be nonnegative"));
                }
                self.bump();
                Ok(value * scale)
            }
            other => Err(self.err(format!(
                "expected a time literal, found {}",
                other.describe()
            ))),
        }
    }

    /// Firing interval: `[a,b]`, `(a,b]`, `[a,inf)`, etc.
    pub fn interval(&mut self) -> Result<TimeInterval, Diagnostic> {
        let lower_closed = match self.bump() {
            Tok::LBrack => true,
            Tok::LParen => false,
            other => {
                return Err(self.err(format!(
                    "expected `[` or `(` opening an interval, found {}",
                    other.describe()
                )))
            }
        };
        let lower = self.time()?;
        self.expect(Tok::Comma)?;
        let upper = if self.eat_kw("inf") {
            TimeBound::Infinite
        } else {
            TimeBound::Finite(self.time()?)
        };
        let upper_closed = match self.bump() {
            Tok::RBrack => true,
            Tok::RParen => false,
            other => {
                return Err(self.err(format!(
                    "expected `]` or `)` closing an interval, found {}",
                    other.describe()
                )))
            }
        };
        let iv = TimeInterval {
            lower,
            upper,
            lower_closed,
            upper_closed,
        };
        if let Err(msg) = iv.check() {
            return Err(self.err(msg));
        }
        Ok(iv)
    }

    /// Boolean/integer expression with `|| < && < ! < cmp < +` precedence.
    pub fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.expr_or()
    }

    fn expr_or(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.expr_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.expr_and()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_and(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.expr_not()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.expr_not()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_not(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat(&Tok::Bang) {
            Ok(Expr::not(self.expr_not()?))
        } else {
            self.expr_cmp()
        }
    }

    fn expr_cmp(&mut self) -> Result<Expr, Diagnostic> {
        let lhs = self.expr_add()?;
        let op = match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.expr_add()?;
        Ok(Expr::cmp(op, lhs, rhs))
    }

    fn expr_add(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.expr_atom()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.expr_atom()?;
            lhs = Expr::add(lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_atom(&mut self) -> Result<Expr, Diagnostic> {
        match self.peek().clone() {
            Tok::Number { raw, unit: None } if !raw.contains('.') => {
                let n = raw
                    .parse::<i64>()
                    .map_err(|_| self.err(format!("integer out of range: {}", raw)))?;
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) if s == "M" && self.peek2() == &Tok::LParen => {
                self.bump();
                self.bump();
                let place = self.ident()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::marking(place))
            }
            Tok::Ident(_) | Tok::Str(_) => {
                let name = self.ident()?;
                Ok(Expr::var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.err(format!(
                "expected an expression, found {}",
                other.describe()
            ))),
        }
    }
}

/// Parses a decimal literal into an exact rational.
pub fn parse_decimal(raw: &str) -> Option<Rat> {
    let (sign, digits) = match raw.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, raw),
    };
    match digits.split_once('.') {
        None => {
            let n: i128 = digits.parse().ok()?;
            Some(Ratio::from_integer(sign * n))
        }
        Some((whole, frac)) => {
            if frac.is_empty() || frac.len() > 18 {
                return None;
            }
            let w: i128 = if whole.is_empty() {
                0
            } else {
                whole.parse().ok()?
            };
            let f: i128 = frac.parse().ok()?;
            let den = 10i128.pow(frac.len() as u32);
            Some(Ratio::new(sign * (w * den + f), den))
        }
    }
}
