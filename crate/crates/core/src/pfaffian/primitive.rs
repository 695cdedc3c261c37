//! Primitives of closed 1-forms: a radial homotopy for polynomial
//! coefficients, then a fit against `ln`, `atan` and monomial candidates.

use std::collections::BTreeMap;

use serde::Serialize;

use super::fit::{monomial_expr, monomials, rational_solve};
use crate::exterior::DifferentialForm;
use crate::symexpr::{is_zero, Expr, Node, Number};

const HOMOTOPY: &str = "__s";

#[derive(Debug, Clone, Serialize)]
pub struct Primitive {
    pub expr: Expr,
    /// Period of the single `atan` term, when present.
    pub period: Option<f64>,
    pub method: &'static str,
}

/// A verified `I` with `dI = ω`, or `None` when no pattern applies.
pub fn find_primitive(form: &DifferentialForm, points: &[BTreeMap<String, f64>]) -> Option<Primitive> {
    if form.degree() != 1 {
        return None;
    }
    if form.terms().is_empty() {
        return Some(Primitive { expr: Expr::zero(), period: None, method: "zero" });
    }
    if let Some(e) = homotopy(form) {
        if verify(form, &e) {
            return Some(Primitive { expr: e, period: None, method: "homotopy" });
        }
    }
    candidate_fit(form, points)
}

fn verify(form: &DifferentialForm, e: &Expr) -> bool {
    let chart = form.chart();
    (0..chart.dim()).all(|i| is_zero(&(e.diff(chart.name(i)) - form.component(i))).is_zero())
}

/// `I(x) = ∫₀¹ Σ c_i(s x) x_i ds` when every `c_i(s x)` expands to a
/// polynomial in `s`.
fn homotopy(form: &DifferentialForm) -> Option<Expr> {
    let chart = form.chart();
    let s = Expr::sym(HOMOTOPY);
    let scaled: BTreeMap<String, Expr> = chart.names().iter().map(|v| (v.clone(), &s * Expr::sym(v))).collect();
    let mut total = Vec::new();
    for (idx, c) in form.terms() {
        let x = Expr::sym(chart.name(idx[0]));
        let e = c.subs(&scaled).expand();
        let terms = match e.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![e.clone()],
        };
        for t in terms {
            let (k, rest) = split_power(&t, &s)?;
            total.push(rest * &x / (k + 1));
        }
    }
    Some(Expr::add_all(total).expand())
}

/// `t = s^k · rest` with `rest` free of `s`.
fn split_power(t: &Expr, s: &Expr) -> Option<(i64, Expr)> {
    let factors = match t.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![t.clone()],
    };
    let mut k = 0;
    let mut rest = Vec::new();
    for f in factors {
        if &f == s {
            k += 1;
        } else if let Node::Pow(b, e) = f.node() {
            if b == s {
                let n = e.as_number().and_then(Number::as_integer)?;
                if n < 0 {
                    return None;
                }
                k += n;
            } else {
                rest.push(f.clone());
            }
        } else {
            rest.push(f);
        }
    }
    let rest = Expr::mul_all(rest);
    if rest.depends_on(HOMOTOPY) {
        return None;
    }
    Some((k, rest))
}

fn candidate_fit(form: &DifferentialForm, points: &[BTreeMap<String, f64>]) -> Option<Primitive> {
    let chart = form.chart();
    let vars = chart.names();
    let free_ok = form.terms().values().all(|c| c.free_symbols().iter().all(|s| vars.contains(s)));
    if !free_ok || points.is_empty() {
        return None;
    }
    let mut bases: Vec<Expr> = Vec::new();
    for c in form.terms().values() {
        for (b, _) in super::fit::denominators(c) {
            if !bases.contains(&b) {
                bases.push(b);
            }
        }
    }
    let mut cands: Vec<(Expr, bool)> = Vec::new();
    for b in &bases {
        let positive = points.iter().filter_map(|p| b.eval(p).ok()).all(|v| v > 0.0);
        let negative = points.iter().filter_map(|p| b.eval(p).ok()).all(|v| v < 0.0);
        if positive {
            cands.push((b.ln(), false));
        } else if negative {
            cands.push(((-b).ln(), false));
        }
        if let Some(r) = square_ratio(b, vars) {
            cands.push((r.atan(), true));
        }
    }
    let used: Vec<Expr> = vars
        .iter()
        .filter(|v| {
            form.terms().values().any(|c| c.depends_on(v))
                || form.terms().keys().any(|k| chart.name(k[0]) == v.as_str())
        })
        .map(|v| Expr::sym(v))
        .collect();
    for m in monomials(used.len(), 3, false) {
        cands.push((monomial_expr(&m, &used), false));
    }
    let derivs: Vec<Vec<Expr>> = cands.iter().map(|(c, _)| vars.iter().map(|v| c.diff(v)).collect()).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for p in points {
        for (i, _) in vars.iter().enumerate() {
            let Ok(target) = form.component(i).eval(p) else { continue };
            let Ok(row) = derivs.iter().map(|d| d[i].eval(p)).collect::<Result<Vec<_>, _>>() else { continue };
            if !target.is_finite() || row.iter().any(|v| !v.is_finite()) {
                continue;
            }
            rows.push(row);
            rhs.push(target);
        }
    }
    if rows.len() < cands.len() {
        return None;
    }
    let coeffs = rational_solve(&rows, &rhs)?;
    let mut period = None;
    let mut atans = 0;
    let mut terms = Vec::new();
    for ((c, is_atan), k) in cands.iter().zip(&coeffs) {
        if *k.numer() == 0 {
            continue;
        }
        if *is_atan {
            atans += 1;
            period = Some((*k.numer() as f64 / *k.denom() as f64).abs() * std::f64::consts::PI);
        }
        terms.push(Expr::from(*k) * c);
    }
    let expr = Expr::add_all(terms);
    if atans != 1 {
        period = None;
    }
    verify(form, &expr).then_some(Primitive { expr, period, method: "candidates" })
}

/// For `a·u² + b·v²` with `a, b > 0` and `u` before `v` in chart order,
/// the ratio `√a·u / (√b·v)`.
fn square_ratio(b: &Expr, vars: &[String]) -> Option<Expr> {
    let Node::Add(ts) = b.node() else { return None };
    if ts.len() != 2 {
        return None;
    }
    let mut parts = Vec::new();
    for t in ts.iter() {
        let (c, rest) = t.split_coefficient();
        if c.is_negative() || c.is_zero() {
            return None;
        }
        let Node::Pow(base, e) = rest.node() else { return None };
        if e.as_number().and_then(Number::as_integer) != Some(2) {
            return None;
        }
        let name = base.as_symbol()?;
        let pos = vars.iter().position(|v| v == name)?;
        parts.push((pos, Expr::num(c).sqrt() * base));
    }
    parts.sort_by_key(|(p, _)| *p);
    Some(&parts[0].1 / &parts[1].1)
}
