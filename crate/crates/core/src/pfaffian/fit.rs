//! Exact rewriting by least-squares fits with rational recovery. Every fit
//! is confirmed by a zero test before it is used.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::symexpr::{is_zero, rationalize, Expr, Node, Number, Rational};

const MAX_DEN: i64 = 1_000_000;

/// Exponent vectors of total degree `1..=degree` (and 0 when `constant`),
/// graded.
pub(crate) fn monomials(nvars: usize, degree: u32, constant: bool) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let start = if constant { 0 } else { 1 };
    for d in start..=degree {
        let mut cur = vec![0; nvars];
        push_degree(&mut out, &mut cur, 0, d);
    }
    out
}

fn push_degree(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() || cur.is_empty() {
        if let Some(k) = cur.len().checked_sub(1) {
            cur[k] = left;
            out.push(cur.clone());
            cur[k] = 0;
        } else if left == 0 {
            out.push(vec![]);
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        push_degree(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

pub(crate) fn monomial_value(exps: &[u32], x: &[f64]) -> f64 {
    exps.iter().zip(x).map(|(e, v)| v.powi(*e as i32)).product()
}

pub(crate) fn monomial_expr(exps: &[u32], gens: &[Expr]) -> Expr {
    Expr::mul_all(exps.iter().zip(gens).filter(|(e, _)| **e > 0).map(|(e, g)| g.powi(*e as i64)).collect())
}

/// Least squares `rows · c ≈ rhs` followed by rational recovery of `c`.
/// Returns `None` when the fit leaves a relative residual above `1e-8` or
/// a coefficient has no small-denominator rational.
pub(crate) fn rational_solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<Rational>> {
    if rows.is_empty() {
        return None;
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return if rhs.iter().all(|v| v.abs() < 1e-12) { Some(vec![]) } else { None };
    }
    // column scaling keeps high-degree monomials from dominating
    let mut scale = vec![0.0f64; ncols];
    for r in rows {
        for (j, v) in r.iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    let m = DMatrix::from_fn(rows.len(), ncols, |i, j| if scale[j] > 0.0 { rows[i][j] / scale[j] } else { 0.0 });
    let b = DVector::from_column_slice(rhs);
    let svd = m.clone().svd(true, true);
    let c = svd.solve(&b, 1e-11).ok()?;
    let resid = (&m * &c - &b).norm();
    if resid > 1e-8 * b.norm().max(1.0) {
        return None;
    }
    let mut out = Vec::with_capacity(ncols);
    for j in 0..ncols {
        let v = if scale[j] > 0.0 { c[j] / scale[j] } else { 0.0 };
        if v.abs() < 1e-9 {
            out.push(Rational::from_integer(0));
            continue;
        }
        out.push(rationalize(v, MAX_DEN, 1e-7)?);
    }
    Some(out)
}

/// Writes `target` as a polynomial with rational coefficients in `gens`
/// (expressions over the point variables). The result is returned in terms
/// of `symbols` and verified by substituting `gens` back.
pub(crate) fn express_in(
    target: &Expr,
    gens: &[Expr],
    symbols: &[Expr],
    points: &[BTreeMap<String, f64>],
    max_degree: u32,
) -> Option<Expr> {
    let mut tv = Vec::new();
    let mut gv = Vec::new();
    for p in points {
        let (Ok(t), Ok(g)) = (target.eval(p), gens.iter().map(|g| g.eval(p)).collect::<Result<Vec<_>, _>>()) else {
            continue;
        };
        tv.push(t);
        gv.push(g);
    }
    if tv.len() < 4 {
        return None;
    }
    for degree in 0..=max_degree {
        let monos = monomials(gens.len(), degree, true);
        if monos.len() * 2 > tv.len() {
            break;
        }
        let rows: Vec<Vec<f64>> = gv.iter().map(|g| monos.iter().map(|m| monomial_value(m, g)).collect()).collect();
        let Some(c) = rational_solve(&rows, &tv) else { continue };
        let build = |gs: &[Expr]| {
            Expr::add_all(
                monos
                    .iter()
                    .zip(&c)
                    .filter(|(_, c)| *c.numer() != 0)
                    .map(|(m, c)| Expr::from(*c) * monomial_expr(m, gs))
                    .collect(),
            )
        };
        if is_zero(&(target - build(gens))).is_zero() {
            return Some(build(symbols));
        }
    }
    None
}

/// Bases raised to negative integer powers, with the largest such power.
/// Bases that are themselves fractions are cleared of their own
/// denominators first.
pub(crate) fn denominators(e: &Expr) -> Vec<(Expr, i64)> {
    let mut out: Vec<(Expr, i64)> = Vec::new();
    collect_denominators(e, &mut out);
    out
}

fn collect_denominators(e: &Expr, out: &mut Vec<(Expr, i64)>) {
    match e.node() {
        Node::Pow(b, ex) => {
            if let Some(k) = ex.as_number().and_then(Number::as_integer) {
                if k < 0 {
                    let inner = denominators(b);
                    let base = if inner.is_empty() {
                        b.clone()
                    } else {
                        let clear = Expr::mul_all(inner.iter().map(|(d, j)| d.powi(*j)).collect());
                        (b * clear).expand()
                    };
                    if denominators(&base).is_empty() {
                        let k = -k;
                        match out.iter_mut().find(|(x, _)| *x == base) {
                            Some(entry) => entry.1 = entry.1.max(k),
                            None => out.push((base, k)),
                        }
                        return;
                    }
                }
            }
            collect_denominators(b, out);
            collect_denominators(ex, out);
        }
        Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| collect_denominators(x, out)),
        Node::Fun(_, a) => collect_denominators(a, out),
        Node::Num(_) | Node::Sym(_) => {}
    }
}

/// Rewrites a rational coefficient over `vars` as `polynomial / Π bᵏ` with
/// the smallest denominator that verifies. Leaves the expression alone
/// (simplified) when it involves other symbols or no rewrite verifies.
pub(crate) fn normalize_coefficient(
    c: &Expr,
    vars: &[String],
    points: &[BTreeMap<String, f64>],
    max_degree: u32,
) -> Expr {
    let c = c.simplify();
    if c.as_number().is_some() || !c.free_symbols().iter().all(|s| vars.contains(s)) {
        return c;
    }
    let used: Vec<String> = vars.iter().filter(|v| c.depends_on(v)).cloned().collect();
    let syms: Vec<Expr> = used.iter().map(|v| Expr::sym(v)).collect();
    let dens = denominators(&c);
    // candidate denominators ordered by total power
    let mut choices: Vec<Vec<i64>> = vec![vec![]];
    for (_, k) in &dens {
        choices = choices.into_iter().flat_map(|pre| (0..=*k).map(move |e| [pre.clone(), vec![e]].concat())).collect();
    }
    choices.sort_by_key(|ch| ch.iter().sum::<i64>());
    for ch in choices.iter().take(16) {
        let den = Expr::mul_all(dens.iter().zip(ch).map(|((b, _), k)| b.powi(*k)).collect());
        let numer = (&c * &den).simplify();
        if let Some(p) = express_in(&numer, &syms, &syms, points, max_degree) {
            let candidate = p / den;
            if is_zero(&(&candidate - &c)).is_zero() {
                return candidate;
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(2, 2, true).len(), 6);
        assert_eq!(monomials(3, 3, false).len(), 19);
        assert_eq!(monomials(0, 2, true), vec![Vec::<u32>::new()]);
    }

    #[test]
    fn rewrite_in_new_generators() {
        let (x, y) = (Expr::sym("x"), Expr::sym("y"));
        let target = (&x + &y).powi(2) - 2 * &x * &y;
        let gens = vec![&x + &y, &x * &y];
        let syms = vec![Expr::sym("u"), Expr::sym("v")];
        let pts: Vec<_> = (0..30)
            .map(|i| {
                let s = i as f64;
                BTreeMap::from([("x".to_string(), (1.3 * s).sin()), ("y".to_string(), (0.7 * s).cos() + 0.2)])
            })
            .collect();
        let r = express_in(&target, &gens, &syms, &pts, 2).unwrap();
        assert_eq!(r, Expr::sym("u").powi(2) - 2 * Expr::sym("v"));
    }

    #[test]
    fn normalization_cancels() {
        let (p, q) = (Expr::sym("p"), Expr::sym("q"));
        let s = p.powi(2) + q.powi(2);
        let c = &p.powi(2) / &s + &q.powi(2) / &s;
        let vars = vec!["p".to_string(), "q".to_string()];
        let pts: Vec<_> = (0..30)
            .map(|i| {
                let s = i as f64;
                BTreeMap::from([("p".to_string(), (1.1 * s).sin()), ("q".to_string(), (0.6 * s).cos() + 1.5)])
            })
            .collect();
        assert_eq!(normalize_coefficient(&c, &vars, &pts, 3), Expr::one());
        let nested = (&p / &q).powi(2) + 1;
        assert_eq!(denominators(&nested.recip()), vec![(s.clone(), 1)]);
        let d = (nested.recip() / &q).diff("p");
        let n = normalize_coefficient(&d, &vars, &pts, 3);
        assert!(is_zero(&(&n - &d)).is_zero());
        assert_eq!(denominators(&n), vec![(s, 2)]);
    }
}
