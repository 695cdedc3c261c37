//! Total order on canonical expressions.
//!
//! Numbers precede everything. Symbols compare by name. Sums and products
//! compare operand lists from the last operand backwards. A product is
//! compared against a non-product by treating the latter as a one-factor
//! product; a power against a non-power by treating the latter as `v^1`;
//! a sum against a function or symbol by treating the latter as a one-term
//! sum. This keeps like terms and like bases adjacent after sorting.

use std::cmp::Ordering;

use super::{Expr, Node};

pub(crate) fn cmp_expr(u: &Expr, v: &Expr) -> Ordering {
    use Node::*;
    match (u.node(), v.node()) {
        (Num(a), Num(b)) => a.total_cmp(b),
        (Num(_), _) => Ordering::Less,
        (_, Num(_)) => Ordering::Greater,
        (Sym(a), Sym(b)) => a.cmp(b),
        (Add(a), Add(b)) | (Mul(a), Mul(b)) => cmp_rev(a, b),
        (Pow(b1, e1), Pow(b2, e2)) => cmp_expr(b1, b2).then_with(|| cmp_expr(e1, e2)),
        (Fun(f, a), Fun(g, b)) => f.name().cmp(g.name()).then_with(|| cmp_expr(a, b)),
        (Mul(a), _) => cmp_rev(a, std::slice::from_ref(v)),
        (_, Mul(b)) => cmp_rev(std::slice::from_ref(u), b),
        (Pow(b1, e1), _) => cmp_expr(b1, v).then_with(|| cmp_expr(e1, &Expr::one())),
        (_, Pow(b2, e2)) => cmp_expr(u, b2).then_with(|| cmp_expr(&Expr::one(), e2)),
        (Add(a), _) => cmp_rev(a, std::slice::from_ref(v)),
        (_, Add(b)) => cmp_rev(std::slice::from_ref(u), b),
        (Fun(f, _), Sym(s)) => f.name().cmp(s).then(Ordering::Greater),
        (Sym(s), Fun(f, _)) => (**s).cmp(f.name()).then(Ordering::Less),
    }
}

fn cmp_rev(a: &[Expr], b: &[Expr]) -> Ordering {
    let mut i = a.len();
    let mut j = b.len();
    while i > 0 && j > 0 {
        i -= 1;
        j -= 1;
        let c = cmp_expr(&a[i], &b[j]);
        if c != Ordering::Equal {
            return c;
        }
    }
    i.cmp(&j)
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_expr(self, other)
    }
}
