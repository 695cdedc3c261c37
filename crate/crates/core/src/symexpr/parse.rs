//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | "+" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | name | name "(" expr ")" | "(" expr ")"
//! ```
//!
//! `**` is accepted for `^`. Decimal literals are read exactly.

use std::collections::BTreeMap;

use super::number::{Number, Rational};
use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unsupported function `{name}` at offset {pos}")]
    UnsupportedFunction { name: String, pos: usize },
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { msg: String, pos: usize },
}

/// Names a parser may resolve: chart variables stay symbolic, parameters
/// are replaced by their bound values.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    variables: Vec<String>,
    parameters: BTreeMap<String, Expr>,
}

impl ParseContext {
    pub fn new<S: AsRef<str>>(variables: &[S]) -> Self {
        ParseContext {
            variables: variables.iter().map(|s| s.as_ref().to_string()).collect(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_parameter(mut self, name: &str, value: Expr) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn bind(&mut self, name: &str, value: Expr) {
        self.parameters.insert(name.to_string(), value);
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    fn resolve(&self, name: &str) -> Option<Expr> {
        if let Some(v) = self.parameters.get(name) {
            return Some(v.clone());
        }
        if self.variables.iter().any(|v| v == name) {
            return Some(Expr::sym(name));
        }
        if name == "pi" {
            return Some(Expr::float(std::f64::consts::PI));
        }
        None
    }
}

pub fn parse(text: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, ctx };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError::Syntax { msg: msg.to_string(), pos: self.pos }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_pow(&mut self) -> bool {
        if self.eat(b'^') {
            return true;
        }
        if self.peek() == Some(b'*') && self.src.get(self.pos + 1) == Some(&b'*') {
            self.pos += 2;
            return true;
        }
        false
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::add_all(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.peek() == Some(b'*') && self.src.get(self.pos + 1) != Some(&b'*') {
                self.pos += 1;
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(self.unary()?.recip());
            } else {
                return Ok(Expr::mul_all(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_pow() {
            let exp = self.unary()?;
            return Ok(base.pow(&exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut mantissa = String::new();
        let mut frac_digits = 0i32;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                mantissa.push(c as char);
                if seen_dot {
                    frac_digits += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if mantissa.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exp10 = 0i32;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            match self.src.get(self.pos) {
                Some(b'-') => {
                    sign = -1;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                _ => {}
            }
            let ds = self.pos;
            while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if ds == self.pos {
                self.pos = save;
            } else {
                let digits = std::str::from_utf8(&self.src[ds..self.pos]).unwrap();
                exp10 = sign * digits.parse::<i32>().map_err(|_| self.error("exponent too large"))?;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(Expr::num(
            exact_decimal(&mantissa, exp10 - frac_digits)
                .unwrap_or_else(|| Number::Float(text.parse::<f64>().unwrap_or(f64::NAN))),
        ))
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            if name == "sqrt" {
                return Ok(arg.sqrt());
            }
            return match Func::from_name(&name) {
                Some(f) => Ok(Expr::fun(f, arg)),
                None => Err(ParseError::UnsupportedFunction { name, pos: start }),
            };
        }
        self.ctx.resolve(&name).ok_or(ParseError::UnknownIdentifier { name, pos: start })
    }
}

impl Expr {
    /// The shortest decimal that round-trips `x`, as an exact rational.
    pub fn from_decimal(x: f64) -> Expr {
        if !x.is_finite() {
            return Expr::num(Number::Float(x));
        }
        parse(&format!("{x:?}"), &ParseContext::default()).unwrap_or_else(|_| Expr::num(Number::Float(x)))
    }
}

fn exact_decimal(digits: &str, exp10: i32) -> Option<Number> {
    let m: i128 = digits.parse().ok()?;
    if exp10.unsigned_abs() > 36 {
        return None;
    }
    let scale = 10i128.checked_pow(exp10.unsigned_abs())?;
    let r = if exp10 >= 0 { Rational::from_integer(m.checked_mul(scale)?) } else { Rational::new(m, scale) };
    Some(Number::Rat(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ParseContext {
        ParseContext::new(&["q1", "q2", "p1", "p2", "x", "y"]).with_parameter("g", Expr::int(1))
    }

    #[test]
    fn canonical_identity() {
        let c = ctx();
        assert_eq!(parse("0*q1 + p1", &c).unwrap(), parse("p1", &c).unwrap());
        assert_eq!(parse("x*y - y*x", &c).unwrap(), Expr::zero());
    }

    #[test]
    fn parameters_are_bound() {
        let h = parse("p1^2/2 + p2^2/2 + g^2/(q1-q2)^2", &ctx()).unwrap();
        assert!(!h.free_symbols().contains("g"));
        assert_eq!(h.free_symbols().len(), 4);
    }

    #[test]
    fn precedence() {
        let c = ctx();
        assert_eq!(parse("-x^2", &c).unwrap(), -(Expr::sym("x").powi(2)));
        assert_eq!(parse("2^3^2", &c).unwrap(), Expr::int(512));
        assert_eq!(parse("x**2", &c).unwrap(), Expr::sym("x").powi(2));
        assert_eq!(parse("1/2*x", &c).unwrap(), Expr::rat(1, 2) * Expr::sym("x"));
        assert_eq!(parse("0.25", &c).unwrap(), Expr::rat(1, 4));
        assert_eq!(parse("1e-3", &c).unwrap(), Expr::rat(1, 1000));
        assert_eq!(parse("sqrt(4*x)", &c).unwrap(), 2 * Expr::sym("x").sqrt());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(Expr::from_decimal(0.1), Expr::rat(1, 10));
        assert_eq!(Expr::from_decimal(-2.5), Expr::rat(-5, 2));
        assert_eq!(Expr::from_decimal(1e-7), Expr::rat(1, 10_000_000));
    }

    #[test]
    fn errors() {
        let c = ctx();
        assert!(matches!(parse("z + 1", &c), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("cosh(x)", &c), Err(ParseError::UnsupportedFunction { .. })));
        assert!(matches!(parse("x +", &c), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("(x", &c), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x y", &c), Err(ParseError::Syntax { .. })));
    }
}
