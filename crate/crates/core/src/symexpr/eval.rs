use std::collections::BTreeMap;

use super::number::Number;
use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    pub fn eval(&self, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name| point.get(name).copied())
    }

    /// Evaluates with a caller-supplied variable lookup.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Num(n) => n.to_f64(),
            Node::Sym(s) => lookup(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?,
            Node::Add(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval_with(lookup)?;
                }
                acc
            }
            Node::Mul(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval_with(lookup)?;
                }
                acc
            }
            Node::Pow(b, e) => {
                let bv = b.eval_with(lookup)?;
                pow_value(bv, e.as_number(), || e.eval_with(lookup))?
            }
            Node::Fun(f, a) => apply(*f, a.eval_with(lookup)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Compiles against a fixed variable order for repeated evaluation.
    pub fn compile<S: AsRef<str>>(&self, vars: &[S]) -> Result<CompiledExpr, EvalError> {
        let names: Vec<&str> = vars.iter().map(|s| s.as_ref()).collect();
        Ok(CompiledExpr { root: lower(self, &names)? })
    }
}

fn pow_value(bv: f64, exact: Option<&Number>, ev: impl FnOnce() -> Result<f64, EvalError>) -> Result<f64, EvalError> {
    if let Some(n) = exact {
        if let Some(k) = n.as_integer() {
            if bv == 0.0 && k < 0 {
                return Err(EvalError::DivisionByZero);
            }
            if let Ok(k) = i32::try_from(k) {
                return Ok(bv.powi(k));
            }
        }
        if let Some(r) = n.as_rational() {
            if bv < 0.0 {
                // real odd roots of negative numbers
                if r.denom() % 2 == 1 {
                    let mag = (-bv).powf(n.to_f64());
                    return Ok(if r.numer() % 2 == 0 { mag } else { -mag });
                }
                return Err(EvalError::Domain("even root of a negative number"));
            }
        }
    }
    let ev = ev()?;
    if bv == 0.0 && ev < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    if bv < 0.0 && ev.fract() != 0.0 {
        return Err(EvalError::Domain("non-integer power of a negative number"));
    }
    Ok(bv.powf(ev))
}

fn apply(f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Atan => x.atan(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(EvalError::Domain("logarithm of a non-positive number"));
            }
            x.ln()
        }
        Func::Exp => x.exp(),
    })
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Slot(usize),
    Add(Vec<Op>),
    Mul(Vec<Op>),
    Pow(Box<Op>, Option<Number>, Box<Op>),
    Fun(Func, Box<Op>),
}

/// An expression lowered to slot indices.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Op,
}

impl CompiledExpr {
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let v = run(&self.root, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn lower(e: &Expr, names: &[&str]) -> Result<Op, EvalError> {
    Ok(match e.node() {
        Node::Num(n) => Op::Const(n.to_f64()),
        Node::Sym(s) => {
            Op::Slot(names.iter().position(|n| *n == &**s).ok_or_else(|| EvalError::Unbound(s.to_string()))?)
        }
        Node::Add(xs) => Op::Add(xs.iter().map(|x| lower(x, names)).collect::<Result<_, _>>()?),
        Node::Mul(xs) => Op::Mul(xs.iter().map(|x| lower(x, names)).collect::<Result<_, _>>()?),
        Node::Pow(b, ex) => Op::Pow(Box::new(lower(b, names)?), ex.as_number().copied(), Box::new(lower(ex, names)?)),
        Node::Fun(f, a) => Op::Fun(*f, Box::new(lower(a, names)?)),
    })
}

fn run(op: &Op, x: &[f64]) -> Result<f64, EvalError> {
    Ok(match op {
        Op::Const(c) => *c,
        Op::Slot(i) => x[*i],
        Op::Add(xs) => {
            let mut acc = 0.0;
            for o in xs {
                acc += run(o, x)?;
            }
            acc
        }
        Op::Mul(xs) => {
            let mut acc = 1.0;
            for o in xs {
                acc *= run(o, x)?;
            }
            acc
        }
        Op::Pow(b, exact, e) => pow_value(run(b, x)?, exact.as_ref(), || run(e, x))?,
        Op::Fun(f, a) => apply(*f, run(a, x)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{parse, ParseContext};
    use super::*;

    fn point(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn hand_values() {
        let ctx = ParseContext::new(&["q1", "q2", "p1", "p2"]).with_parameter("g", Expr::int(1));
        let h = parse("p1^2/2 + p2^2/2 + g^2/(q1-q2)^2", &ctx).unwrap();
        let x = point(&[("q1", 1.0), ("q2", -1.0), ("p1", 0.0), ("p2", 0.0)]);
        assert_eq!(h.eval(&x).unwrap(), 0.25);
        let a = parse("atan(q1/p1)", &ctx).unwrap();
        let y = point(&[("q1", 1.0), ("p1", 1.0)]);
        assert_eq!(a.eval(&y).unwrap(), std::f64::consts::FRAC_PI_4);
        let c = h.compile(&["q1", "q2", "p1", "p2"]).unwrap();
        assert_eq!(c.eval(&[1.0, -1.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn errors() {
        let ctx = ParseContext::new(&["x"]);
        let at0 = point(&[("x", 0.0)]);
        assert_eq!(parse("1/x", &ctx).unwrap().eval(&at0), Err(EvalError::DivisionByZero));
        assert!(matches!(parse("ln(x)", &ctx).unwrap().eval(&at0), Err(EvalError::Domain(_))));
        assert!(matches!(parse("x", &ctx).unwrap().eval(&BTreeMap::new()), Err(EvalError::Unbound(_))));
        let r = parse("x^(1/3)", &ctx).unwrap().eval(&point(&[("x", -8.0)])).unwrap();
        assert!((r + 2.0).abs() < 1e-12);
    }
}
