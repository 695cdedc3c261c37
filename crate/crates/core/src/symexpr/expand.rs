use super::{Expr, Node};

/// Positive integer powers of sums above this are left unexpanded.
const MAX_EXPAND_POWER: i64 = 12;

impl Expr {
    /// Distributes products over sums and multiplies out small positive
    /// integer powers of sums, recursing into function arguments and bases.
    pub fn expand(&self) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(terms) => Expr::add_all(terms.iter().map(Expr::expand).collect()),
            Node::Mul(fs) => {
                let parts: Vec<Expr> = fs.iter().map(Expr::expand).collect();
                distribute(&parts)
            }
            Node::Pow(b, e) => {
                let b = b.expand();
                let e = e.expand();
                if let Some(n) = e.as_number().and_then(|n| n.as_integer()) {
                    if n > 1 && n <= MAX_EXPAND_POWER {
                        if let Node::Add(_) = b.node() {
                            let mut acc = b.clone();
                            for _ in 1..n {
                                acc = distribute(&[acc, b.clone()]);
                            }
                            return acc;
                        }
                    }
                }
                let p = b.pow(&e);
                match p.node() {
                    // a power may re-canonicalize into a product or sum
                    Node::Mul(_) | Node::Add(_) if p != *self => p.expand_shallow(),
                    _ => p,
                }
            }
            Node::Fun(f, a) => Expr::fun(*f, a.expand()),
        }
    }

    fn expand_shallow(&self) -> Expr {
        match self.node() {
            Node::Mul(fs) => distribute(fs),
            _ => self.clone(),
        }
    }
}

fn distribute(factors: &[Expr]) -> Expr {
    let mut acc: Vec<Expr> = vec![Expr::one()];
    for f in factors {
        let terms: Vec<Expr> = match f.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![f.clone()],
        };
        let mut next = Vec::with_capacity(acc.len() * terms.len());
        for a in &acc {
            for t in &terms {
                next.push(a * t);
            }
        }
        acc = next;
    }
    // merged powers can reintroduce expandable sums
    let out = Expr::add_all(acc);
    let terms: Vec<Expr> = match out.node() {
        Node::Add(ts) => ts.clone(),
        _ => vec![out.clone()],
    };
    if terms.iter().any(needs_expansion) {
        return out.expand();
    }
    out
}

fn needs_expansion(t: &Expr) -> bool {
    let expandable = |f: &Expr| match f.node() {
        Node::Add(_) => true,
        Node::Pow(b, e) => {
            matches!(b.node(), Node::Add(_))
                && e.as_number().and_then(|n| n.as_integer()).is_some_and(|n| n > 1 && n <= MAX_EXPAND_POWER)
        }
        _ => false,
    };
    match t.node() {
        Node::Mul(fs) => fs.iter().any(expandable),
        _ => expandable(t) && !matches!(t.node(), Node::Add(_)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, ParseContext};
    use super::*;

    #[test]
    fn binomial() {
        let ctx = ParseContext::new(&["x", "y"]);
        let e = parse("(x+y)^2 - x^2 - 2*x*y - y^2", &ctx).unwrap();
        assert_eq!(e.expand(), Expr::zero());
        let f = parse("(x-y)*(x+y)", &ctx).unwrap().expand();
        assert_eq!(f, parse("x^2 - y^2", &ctx).unwrap());
    }

    #[test]
    fn inside_functions() {
        let ctx = ParseContext::new(&["x", "y"]);
        let e = parse("ln((x+y)^2) - ln(x^2 + 2*x*y + y^2)", &ctx).unwrap();
        assert_eq!(e.expand(), Expr::zero());
    }

    #[test]
    fn idempotent() {
        let ctx = ParseContext::new(&["x", "y"]);
        let e = parse("(x+1)^3*(y-x)/(x+y)^2 + exp(x)*(1+y)", &ctx).unwrap();
        let once = e.expand();
        assert_eq!(once.expand(), once);
    }
}
