//! Immutable symbolic expressions over named coordinates.
//!
//! Every [`Expr`] is built through simplifying constructors, so a value is
//! always in canonical form: sums and products are flattened, constants are
//! merged, like terms and like bases are collected, and operands are sorted
//! by a fixed total order. Two expressions with the same canonical form
//! compare equal.
//!
//! Quotients are products with negative powers and `sqrt(x)` is `x^(1/2)`.

mod diff;
mod eval;
mod expand;
pub mod matrix;
mod number;
mod order;
mod parse;
mod print;
mod simplify;
mod solve;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use eval::{CompiledExpr, EvalError};
pub use number::{rationalize, Number, Rational};
pub use parse::{parse, ParseContext, ParseError};
pub use solve::isolate;
pub use zero::{is_zero, is_zero_with, ZeroOptions, ZeroVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Ln,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Ln => "ln",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" | "arctan" => Func::Atan,
            "ln" | "log" => Func::Ln,
            "exp" => Func::Exp,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Num(Number),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Fun(Func, Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Expr {}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub(crate) fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Number) -> Self {
        Expr::from_node(Node::Num(n))
    }

    pub fn int(n: i64) -> Self {
        Expr::num(Number::int(n))
    }

    pub fn rat(num: i64, den: i64) -> Self {
        Expr::num(Number::rat(num, den))
    }

    pub fn float(x: f64) -> Self {
        Expr::num(Number::from_f64(x))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Self {
        Expr::from_node(Node::Sym(Arc::from(name)))
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// True only for the canonical zero node.
    pub fn is_zero_node(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_zero())
    }

    pub fn is_one_node(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_one())
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(s.to_string());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Pow(b, e) => {
                b.collect_symbols(out);
                e.collect_symbols(out);
            }
            Node::Fun(_, a) => a.collect_symbols(out),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(s) => &**s == var,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.depends_on(var)),
            Node::Pow(b, e) => b.depends_on(var) || e.depends_on(var),
            Node::Fun(_, a) => a.depends_on(var),
        }
    }

    pub fn depends_on_any<S: AsRef<str>>(&self, vars: &[S]) -> bool {
        vars.iter().any(|v| self.depends_on(v.as_ref()))
    }

    /// Simultaneous substitution of symbols, re-canonicalized.
    pub fn subs(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => map.get(&**s).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(xs) => Expr::add_all(xs.iter().map(|x| x.subs(map)).collect()),
            Node::Mul(xs) => Expr::mul_all(xs.iter().map(|x| x.subs(map)).collect()),
            Node::Pow(b, e) => b.subs(map).pow(&e.subs(map)),
            Node::Fun(f, a) => Expr::fun(*f, a.subs(map)),
        }
    }

    pub fn subs_one(&self, var: &str, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(var.to_string(), value.clone());
        self.subs(&map)
    }

    /// Canonical form followed by full expansion; idempotent.
    pub fn simplify(&self) -> Expr {
        self.expand()
    }

    /// Number of nodes, a rough size measure.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, e) => 1 + b.size() + e.size(),
            Node::Fun(_, a) => 1 + a.size(),
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Self {
        Expr::float(x)
    }
}

impl From<Number> for Expr {
    fn from(n: Number) -> Self {
        Expr::num(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Self {
        Expr::num(Number::Rat(r))
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
