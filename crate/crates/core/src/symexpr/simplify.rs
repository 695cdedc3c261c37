//! Simplifying constructors. Every public way of building a compound
//! expression goes through here.

use std::ops;

use super::number::{Number, Rational};
use super::{Expr, Func, Node};

impl Expr {
    pub fn add_all(terms: Vec<Expr>) -> Expr {
        simplify_sum(terms)
    }

    pub fn mul_all(factors: Vec<Expr>) -> Expr {
        simplify_product(factors)
    }

    pub fn pow(&self, exp: &Expr) -> Expr {
        simplify_power(self.clone(), exp.clone())
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(&Expr::int(n))
    }

    pub fn sqrt(&self) -> Expr {
        self.pow(&Expr::rat(1, 2))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn fun(f: Func, arg: Expr) -> Expr {
        simplify_function(f, arg)
    }

    pub fn sin(&self) -> Expr {
        Expr::fun(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::fun(Func::Cos, self.clone())
    }

    pub fn tan(&self) -> Expr {
        Expr::fun(Func::Tan, self.clone())
    }

    pub fn atan(&self) -> Expr {
        Expr::fun(Func::Atan, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::fun(Func::Ln, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::fun(Func::Exp, self.clone())
    }

    /// Splits a term into `(coefficient, rest)`.
    pub fn split_coefficient(&self) -> (Number, Expr) {
        match self.node() {
            Node::Num(n) => (*n, Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(n) => {
                    let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::from_node(Node::Mul(fs[1..].to_vec())) };
                    (*n, rest)
                }
                _ => (Number::one(), self.clone()),
            },
            _ => (Number::one(), self.clone()),
        }
    }

    /// Syntactically negative: a negative constant or a product with a
    /// negative leading coefficient.
    pub fn is_syntactically_negative(&self) -> bool {
        match self.node() {
            Node::Num(n) => n.is_negative(),
            Node::Mul(fs) => fs[0].as_number().is_some_and(|n| n.is_negative()),
            _ => false,
        }
    }
}

fn base_exp(x: &Expr) -> (Expr, Expr) {
    match x.node() {
        Node::Pow(b, e) => (b.clone(), e.clone()),
        _ => (x.clone(), Expr::one()),
    }
}

fn simplify_sum(terms: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(terms.len());
    for t in terms {
        match t.node() {
            Node::Add(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(t),
        }
    }
    if flat.len() == 1 {
        return flat.pop().unwrap();
    }

    let mut constant = Number::zero();
    let mut parts: Vec<(Expr, Number)> = Vec::with_capacity(flat.len());
    for t in flat {
        if let Some(n) = t.as_number() {
            constant = constant.add(n);
            continue;
        }
        let (c, rest) = t.split_coefficient();
        parts.push((rest, c));
    }
    parts.sort_by(|a, b| a.0.cmp(&b.0));

    let mut merged: Vec<(Expr, Number)> = Vec::with_capacity(parts.len());
    for (term, c) in parts {
        match merged.last_mut() {
            Some((last, lc)) if *last == term => *lc = lc.add(&c),
            _ => merged.push((term, c)),
        }
    }
    merged.retain(|(_, c)| !c.is_zero());

    if let Some(rewritten) = pythagorean(&merged) {
        let mut terms: Vec<Expr> = rewritten.into_iter().map(|(t, c)| with_coefficient(c, t)).collect();
        if !constant.is_zero() {
            terms.push(Expr::num(constant));
        }
        return simplify_sum(terms);
    }

    let mut out: Vec<Expr> = merged.into_iter().map(|(t, c)| with_coefficient(c, t)).collect();
    out.sort();
    if !constant.is_zero() {
        out.insert(0, Expr::num(constant));
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::from_node(Node::Add(out)),
    }
}

fn with_coefficient(c: Number, term: Expr) -> Expr {
    if c.is_one() {
        return term;
    }
    match term.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::num(c));
            v.extend(fs.iter().cloned());
            Expr::from_node(Node::Mul(v))
        }
        _ => Expr::from_node(Node::Mul(vec![Expr::num(c), term])),
    }
}

/// sin(u)^2 * R + cos(u)^2 * R -> R, for equal coefficients.
fn pythagorean(terms: &[(Expr, Number)]) -> Option<Vec<(Expr, Number)>> {
    let has_trig_square = |t: &Expr| factors_of(t).iter().any(|f| trig_square(f, Func::Sin).is_some());
    if !terms.iter().any(|(t, _)| has_trig_square(t)) {
        return None;
    }
    for (i, (ti, ci)) in terms.iter().enumerate() {
        let fs = factors_of(ti);
        for (k, f) in fs.iter().enumerate() {
            let Some(u) = trig_square(f, Func::Sin) else { continue };
            let mut rest: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| x.clone()).collect();
            let rest_expr = Expr::mul_all(rest.clone());
            rest.push(u.cos().powi(2));
            let partner = Expr::mul_all(rest);
            if let Some(j) = terms.iter().position(|(tj, cj)| *tj == partner && cj == ci) {
                let mut out: Vec<(Expr, Number)> = terms
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| *idx != i && *idx != j)
                    .map(|(_, x)| x.clone())
                    .collect();
                out.push((rest_expr, *ci));
                return Some(out);
            }
        }
    }
    None
}

fn factors_of(t: &Expr) -> Vec<Expr> {
    match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![t.clone()],
    }
}

fn trig_square(f: &Expr, which: Func) -> Option<Expr> {
    if let Node::Pow(b, e) = f.node() {
        if e.as_number().and_then(|n| n.as_integer()) == Some(2) {
            if let Node::Fun(g, u) = b.node() {
                if *g == which {
                    return Some(u.clone());
                }
            }
        }
    }
    None
}

fn simplify_product(factors: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f.node() {
            Node::Mul(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(f),
        }
    }
    if flat.len() == 1 {
        return flat.pop().unwrap();
    }

    let mut coef = Number::one();
    let mut exp_args: Vec<Expr> = Vec::new();
    let mut pairs: Vec<(Expr, Expr)> = Vec::with_capacity(flat.len());
    for f in flat {
        match f.node() {
            Node::Num(n) => coef = coef.mul(n),
            Node::Fun(Func::Exp, a) => exp_args.push(a.clone()),
            _ => pairs.push(base_exp(&f)),
        }
    }
    if coef.is_zero() {
        return Expr::num(coef);
    }

    let mut rerun = false;
    if exp_args.len() > 1 {
        let merged = Expr::fun(Func::Exp, Expr::add_all(exp_args));
        match merged.node() {
            Node::Fun(Func::Exp, _) => pairs.push((merged, Expr::one())),
            _ => {
                rerun = true;
                pairs.push((merged, Expr::one()));
            }
        }
    } else if let Some(a) = exp_args.pop() {
        pairs.push((Expr::from_node(Node::Fun(Func::Exp, a)), Expr::one()));
    }

    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Expr, Vec<Expr>)> = Vec::with_capacity(pairs.len());
    for (b, e) in pairs {
        match merged.last_mut() {
            Some((lb, es)) if *lb == b => es.push(e),
            _ => merged.push((b, vec![e])),
        }
    }

    let mut out: Vec<Expr> = Vec::with_capacity(merged.len());
    for (b, es) in merged {
        let single = es.len() == 1;
        let e = if single { es.into_iter().next().unwrap() } else { Expr::add_all(es) };
        let p = if single && e.is_one_node() { b } else { simplify_power(b, e) };
        match p.node() {
            Node::Num(n) => coef = coef.mul(n),
            Node::Mul(_) => {
                rerun = true;
                out.push(p);
            }
            _ => out.push(p),
        }
    }
    if coef.is_zero() {
        return Expr::num(coef);
    }
    if rerun {
        let mut all = out;
        if !coef.is_one() {
            all.push(Expr::num(coef));
        }
        return simplify_product(all);
    }
    if out.is_empty() {
        return Expr::num(coef);
    }
    out.sort();
    if out.len() == 1 && coef.is_one() {
        return out.pop().unwrap();
    }
    if !coef.is_one() {
        out.insert(0, Expr::num(coef));
    }
    Expr::from_node(Node::Mul(out))
}

fn simplify_power(base: Expr, exp: Expr) -> Expr {
    if let Some(e) = exp.as_number() {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
    }
    if let Some(b) = base.as_number() {
        if b.is_one() {
            return base;
        }
        if b.is_zero() {
            if exp.as_number().is_some_and(|e| !e.is_negative()) {
                return base;
            }
            return Expr::from_node(Node::Pow(base, exp));
        }
        if let Some(e) = exp.as_number() {
            return number_power(b, e).unwrap_or_else(|| Expr::from_node(Node::Pow(base.clone(), exp.clone())));
        }
        return Expr::from_node(Node::Pow(base, exp));
    }

    let int_exp = exp.as_number().and_then(|n| n.as_integer());
    if let Some(n) = int_exp {
        match base.node() {
            Node::Pow(b, e) => return b.pow(&Expr::mul_all(vec![e.clone(), Expr::int(n)])),
            Node::Mul(fs) => return Expr::mul_all(fs.iter().map(|f| f.powi(n)).collect()),
            Node::Fun(Func::Exp, a) => return Expr::fun(Func::Exp, Expr::mul_all(vec![Expr::int(n), a.clone()])),
            Node::Add(terms) => {
                let lead_term = terms.iter().find(|t| t.as_number().is_none()).unwrap_or(&terms[0]);
                let (lead, _) = lead_term.split_coefficient();
                if let Some(k) = lead.as_rational() {
                    if k != Rational::from_integer(1) {
                        let kinv = Expr::num(Number::Rat(k.recip()));
                        let monic =
                            Expr::add_all(terms.iter().map(|t| Expr::mul_all(vec![kinv.clone(), t.clone()])).collect());
                        return Expr::mul_all(vec![
                            Expr::num(Number::Rat(k)).powi(n),
                            Expr::from_node(Node::Pow(monic, exp)),
                        ]);
                    }
                }
            }
            _ => {}
        }
        return Expr::from_node(Node::Pow(base, exp));
    }

    if let Some(e) = exp.as_number() {
        // Non-integer constant exponent: only a positive numeric coefficient
        // may be pulled out.
        if let Node::Mul(fs) = base.node() {
            if let Some(c) = fs[0].as_number() {
                if !c.is_negative() {
                    let rest = Expr::mul_all(fs[1..].to_vec());
                    return Expr::mul_all(vec![
                        number_power(c, e).unwrap_or_else(|| Expr::from_node(Node::Pow(fs[0].clone(), exp.clone()))),
                        simplify_power(rest, exp.clone()),
                    ]);
                }
            }
        }
        if let Node::Fun(Func::Exp, a) = base.node() {
            return Expr::fun(Func::Exp, Expr::mul_all(vec![exp.clone(), a.clone()]));
        }
    }
    Expr::from_node(Node::Pow(base, exp))
}

fn number_power(b: &Number, e: &Number) -> Option<Expr> {
    if let Some(n) = e.as_integer() {
        return b.powi(n).map(Expr::num);
    }
    match (b, e) {
        (Number::Rat(_), Number::Rat(er)) => b.exact_root_pow(er).map(Expr::num),
        _ => {
            let (x, y) = (b.to_f64(), e.to_f64());
            if x > 0.0 {
                Some(Expr::num(Number::Float(x.powf(y))))
            } else {
                None
            }
        }
    }
}

fn simplify_function(f: Func, arg: Expr) -> Expr {
    if let Some(Number::Float(x)) = arg.as_number() {
        let v = match f {
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Tan => Some(x.tan()),
            Func::Atan => Some(x.atan()),
            Func::Ln if *x > 0.0 => Some(x.ln()),
            Func::Exp => Some(x.exp()),
            _ => None,
        };
        if let Some(v) = v {
            return Expr::num(Number::Float(v));
        }
    }
    let neg = arg.is_syntactically_negative();
    let negated = || Expr::mul_all(vec![Expr::int(-1), arg.clone()]);
    match f {
        Func::Sin | Func::Tan | Func::Atan => {
            if arg.is_zero_node() {
                return Expr::zero();
            }
            if f == Func::Tan {
                if let Node::Fun(Func::Atan, u) = arg.node() {
                    return u.clone();
                }
            }
            if neg {
                return Expr::mul_all(vec![Expr::int(-1), Expr::fun(f, negated())]);
            }
        }
        Func::Cos => {
            if arg.is_zero_node() {
                return Expr::one();
            }
            if neg {
                return Expr::fun(f, negated());
            }
        }
        Func::Ln => {
            if arg.is_one_node() {
                return Expr::zero();
            }
            if let Node::Fun(Func::Exp, u) = arg.node() {
                return u.clone();
            }
        }
        Func::Exp => {
            if arg.is_zero_node() {
                return Expr::one();
            }
            if let Node::Fun(Func::Ln, u) = arg.node() {
                return u.clone();
            }
            // exp(c ln u) = u^c
            if let Node::Mul(fs) = arg.node() {
                if let [c, l] = fs.as_slice() {
                    if let (Some(Number::Rat(_)), Node::Fun(Func::Ln, u)) = (c.as_number(), l.node()) {
                        return u.pow(c);
                    }
                }
            }
        }
    }
    Expr::from_node(Node::Fun(f, arg))
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::int(rhs))
            }
        }
        impl ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::int(rhs))
            }
        }
        impl ops::$tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs)
            }
        }
        impl ops::$tr<&Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add_all(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add_all(vec![a, Expr::mul_all(vec![Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| Expr::mul_all(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul_all(vec![a, b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all(vec![Expr::int(-1), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all(vec![Expr::int(-1), self.clone()])
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::add_all(iter.collect())
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::mul_all(iter.collect())
    }
}
