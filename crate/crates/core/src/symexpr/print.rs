use std::fmt;

use super::number::Number;
use super::{Expr, Node};

// Precedence levels: sum < product < unary minus < power < atom.
const PREC_SUM: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, 0)
    }
}

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(n) => match n {
            _ if n.is_negative() => PREC_NEG,
            Number::Rat(r) if !r.is_integer() => PREC_MUL,
            _ => u8::MAX,
        },
        Node::Sym(_) | Node::Fun(..) => u8::MAX,
        Node::Add(_) => PREC_SUM,
        Node::Mul(_) => {
            if e.is_syntactically_negative() {
                PREC_NEG
            } else {
                PREC_MUL
            }
        }
        Node::Pow(_, ex) => {
            if is_half(ex) || ex.as_number().is_some_and(|n| n.is_negative()) {
                // printed as sqrt(..) or as a quotient
                if is_half(ex) {
                    u8::MAX
                } else {
                    PREC_MUL
                }
            } else {
                PREC_POW
            }
        }
    }
}

fn is_half(e: &Expr) -> bool {
    e.as_number() == Some(&Number::rat(1, 2))
}

fn write_wrapped(e: &Expr, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    if prec(e) <= min {
        f.write_str("(")?;
        write_expr(e, f, 0)?;
        f.write_str(")")
    } else {
        write_expr(e, f, min)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, _ctx: u8) -> fmt::Result {
    match e.node() {
        Node::Num(n) => write!(f, "{n}"),
        Node::Sym(s) => f.write_str(s),
        Node::Fun(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f, 0)?;
            f.write_str(")")
        }
        Node::Add(terms) => {
            // Non-constant terms first reads better; constants trail.
            let mut order: Vec<&Expr> = terms.iter().filter(|t| t.as_number().is_none()).collect();
            order.extend(terms.iter().filter(|t| t.as_number().is_some()));
            for (i, t) in order.iter().enumerate() {
                if i == 0 {
                    write_wrapped(t, f, PREC_SUM)?;
                } else if t.is_syntactically_negative() {
                    f.write_str(" - ")?;
                    write_wrapped(&-(*t), f, PREC_SUM)?;
                } else {
                    f.write_str(" + ")?;
                    write_wrapped(t, f, PREC_SUM)?;
                }
            }
            Ok(())
        }
        Node::Mul(_) => write_product(e, f),
        Node::Pow(b, ex) => {
            if is_half(ex) {
                f.write_str("sqrt(")?;
                write_expr(b, f, 0)?;
                return f.write_str(")");
            }
            if ex.as_number().is_some_and(|n| n.is_negative()) {
                f.write_str("1/")?;
                return write_wrapped(&b.pow(&-ex), f, PREC_POW - 1);
            }
            write_wrapped(b, f, PREC_POW)?;
            f.write_str("^")?;
            write_wrapped(ex, f, PREC_POW)
        }
    }
}

fn write_product(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let Node::Mul(fs) = e.node() else { unreachable!() };
    let mut factors: Vec<Expr> = fs.clone();
    if e.is_syntactically_negative() {
        f.write_str("-")?;
        let c = factors[0].as_number().unwrap().neg();
        if c.is_one() {
            factors.remove(0);
        } else {
            factors[0] = Expr::num(c);
        }
    }
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for x in factors {
        match x.node() {
            Node::Pow(b, ex) if ex.as_number().is_some_and(|n| n.is_negative()) => den.push(b.pow(&-ex)),
            Node::Num(Number::Rat(r)) if !r.is_integer() => {
                if *r.numer() != 1 {
                    num.push(Expr::from(super::Rational::from_integer(*r.numer())));
                }
                den.push(Expr::from(super::Rational::from_integer(*r.denom())));
            }
            _ => num.push(x),
        }
    }
    if num.is_empty() {
        f.write_str("1")?;
    }
    for (i, x) in num.iter().enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        write_wrapped(x, f, PREC_MUL)?;
    }
    if !den.is_empty() {
        f.write_str("/")?;
        if den.len() == 1 {
            write_wrapped(&den[0], f, PREC_POW - 1)?;
        } else {
            f.write_str("(")?;
            for (i, x) in den.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                write_wrapped(x, f, PREC_MUL)?;
            }
            f.write_str(")")?;
        }
    }
    Ok(())
}
