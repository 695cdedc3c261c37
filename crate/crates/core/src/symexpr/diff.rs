use super::{Expr, Func, Node};

impl Expr {
    /// Partial derivative with respect to the symbol `var`.
    pub fn diff(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(s) => {
                if &**s == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(terms) => Expr::add_all(terms.iter().map(|t| t.diff(var)).collect()),
            Node::Mul(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (i, f) in fs.iter().enumerate() {
                    let df = f.diff(var);
                    if df.is_zero_node() {
                        continue;
                    }
                    let mut prod: Vec<Expr> =
                        fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect();
                    prod.push(df);
                    terms.push(Expr::mul_all(prod));
                }
                Expr::add_all(terms)
            }
            Node::Pow(b, e) => {
                if !e.depends_on(var) {
                    // d(b^e) = e b^(e-1) db
                    let em1 = e - 1;
                    Expr::mul_all(vec![e.clone(), b.pow(&em1), b.diff(var)])
                } else {
                    // d(b^e) = b^e (e' ln b + e b'/b)
                    let t1 = Expr::mul_all(vec![e.diff(var), b.ln()]);
                    let t2 = Expr::mul_all(vec![e.clone(), b.diff(var), b.recip()]);
                    Expr::mul_all(vec![self.clone(), t1 + t2])
                }
            }
            Node::Fun(f, a) => {
                let da = a.diff(var);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Tan => 1 + a.tan().powi(2),
                    Func::Atan => (1 + a.powi(2)).recip(),
                    Func::Ln => a.recip(),
                    Func::Exp => self.clone(),
                };
                outer * da
            }
        }
    }
}
