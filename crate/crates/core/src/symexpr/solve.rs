use super::{Expr, Func, Node};

/// Solves `lhs = rhs` for `var` by peeling invertible outer operations.
/// Returns `None` when `var` does not occur exactly along one invertible
/// path. Powers are inverted on the principal branch.
pub fn isolate(lhs: &Expr, rhs: &Expr, var: &str) -> Option<Expr> {
    if rhs.depends_on(var) {
        return isolate(&(lhs - rhs), &Expr::zero(), var);
    }
    peel(lhs, rhs.clone(), var)
}

fn peel(e: &Expr, r: Expr, var: &str) -> Option<Expr> {
    if !e.depends_on(var) {
        return None;
    }
    if let Some(v) = linear(e, &r, var) {
        return Some(v);
    }
    match e.node() {
        Node::Sym(_) => Some(r),
        Node::Add(ts) => {
            let (dep, rest): (Vec<&Expr>, Vec<&Expr>) = ts.iter().partition(|t| t.depends_on(var));
            if dep.len() != 1 {
                return None;
            }
            let rest = Expr::add_all(rest.into_iter().cloned().collect());
            peel(dep[0], r - rest, var)
        }
        Node::Mul(fs) => {
            let (dep, rest): (Vec<&Expr>, Vec<&Expr>) = fs.iter().partition(|f| f.depends_on(var));
            if dep.len() != 1 {
                return None;
            }
            let rest = Expr::mul_all(rest.into_iter().cloned().collect());
            peel(dep[0], r / rest, var)
        }
        Node::Pow(b, ex) => {
            if !ex.depends_on(var) {
                peel(b, r.pow(&ex.recip()), var)
            } else if !b.depends_on(var) {
                peel(ex, r.ln() / b.ln(), var)
            } else {
                None
            }
        }
        Node::Fun(f, a) => {
            let inner = match f {
                Func::Ln => r.exp(),
                Func::Exp => r.ln(),
                Func::Atan => r.tan(),
                Func::Tan => r.atan(),
                Func::Sin | Func::Cos => return None,
            };
            peel(a, inner, var)
        }
        Node::Num(_) => None,
    }
}

/// `a*var + b = r` with `a`, `b` free of `var`.
fn linear(e: &Expr, r: &Expr, var: &str) -> Option<Expr> {
    let ex = e.expand();
    let a = ex.diff(var).expand();
    if a.depends_on(var) || a.is_zero_node() {
        return None;
    }
    let b = (&ex - &a * Expr::sym(var)).expand();
    if b.depends_on(var) {
        return None;
    }
    Some((r - b) / a)
}
