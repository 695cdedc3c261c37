use std::collections::BTreeMap;
use std::fmt;

use super::{Chart, ExteriorError, VectorField};
use crate::symexpr::{is_zero, EvalError, Expr, ZeroVerdict};

/// Sparse k-form: strictly increasing index tuples to coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn normalize(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl DifferentialForm {
    pub fn zero(chart: &Chart, degree: usize) -> DifferentialForm {
        DifferentialForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn scalar(chart: &Chart, f: Expr) -> DifferentialForm {
        let mut w = DifferentialForm::zero(chart, 0);
        w.insert(vec![], f);
        w
    }

    /// `dx_{i1} ∧ … ∧ dx_{ik}` in the given order.
    pub fn basis(chart: &Chart, idx: &[usize]) -> Result<DifferentialForm, ExteriorError> {
        if idx.len() > chart.dim() {
            return Err(ExteriorError::DegreeOverflow(idx.len(), chart.dim()));
        }
        let mut w = DifferentialForm::zero(chart, idx.len());
        w.insert(idx.to_vec(), Expr::one());
        Ok(w)
    }

    /// `dx_0 ∧ dx_1 ∧ … ∧ dx_{m-1}`.
    pub fn volume(chart: &Chart) -> DifferentialForm {
        let idx: Vec<usize> = (0..chart.dim()).collect();
        DifferentialForm::basis(chart, &idx).expect("volume degree equals dimension")
    }

    /// `df` for a function `f`.
    pub fn exact(chart: &Chart, f: &Expr) -> DifferentialForm {
        DifferentialForm::scalar(chart, f.clone()).d()
    }

    /// One-form from coefficients in chart order.
    pub fn one_form(chart: &Chart, coeffs: Vec<Expr>) -> Result<DifferentialForm, ExteriorError> {
        if coeffs.len() != chart.dim() {
            return Err(ExteriorError::Arity { expected: chart.dim(), got: coeffs.len() });
        }
        let mut w = DifferentialForm::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            w.insert(vec![i], c);
        }
        Ok(w)
    }

    /// Adds `c · dx_idx`, normalizing the index order.
    pub fn insert(&mut self, mut idx: Vec<usize>, c: Expr) {
        assert_eq!(idx.len(), self.degree, "index tuple length must equal degree");
        let Some(sign) = normalize(&mut idx) else { return };
        let c = if sign < 0 { -c } else { c };
        let merged = match self.terms.remove(&idx) {
            Some(old) => old + c,
            None => c,
        };
        if !merged.is_zero_node() {
            self.terms.insert(idx, merged);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        let mut key = idx.to_vec();
        match normalize(&mut key) {
            None => Expr::zero(),
            Some(s) => {
                let c = self.terms.get(&key).cloned().unwrap_or_else(Expr::zero);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Coefficient of `dx_i` for a one-form.
    pub fn component(&self, i: usize) -> Expr {
        self.coefficient(&[i])
    }

    /// Coefficient of `dx_name` for a one-form.
    pub fn component_by_name(&self, name: &str) -> Expr {
        self.chart.index_of(name).map_or_else(Expr::zero, |i| self.component(i))
    }

    fn check_chart(&self, other: &Chart) -> Result<(), ExteriorError> {
        if &self.chart == other {
            Ok(())
        } else {
            Err(ExteriorError::ChartMismatch)
        }
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(&other.chart)?;
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, f: &Expr) -> DifferentialForm {
        self.map(|c| f * c)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.insert(k.clone(), f(c));
        }
        out
    }

    /// Expands every coefficient and drops the proven zeros.
    pub fn simplified(&self) -> DifferentialForm {
        let mut out = DifferentialForm::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            let s = c.simplify();
            if is_zero(&s) != ZeroVerdict::ProvenZero {
                out.terms.insert(k.clone(), s);
            }
        }
        out
    }

    /// Index tuples whose coefficients are only numerically zero; these are
    /// kept in the form.
    pub fn numerically_zero_terms(&self) -> Vec<Vec<usize>> {
        self.terms.iter().filter(|(_, c)| is_zero(c) == ZeroVerdict::NumericallyZero).map(|(k, _)| k.clone()).collect()
    }

    /// Combined verdict over all coefficients.
    pub fn zero_verdict(&self) -> ZeroVerdict {
        let mut worst = ZeroVerdict::ProvenZero;
        for c in self.terms.values() {
            match is_zero(c) {
                ZeroVerdict::ProvenZero => {}
                ZeroVerdict::NumericallyZero => worst = ZeroVerdict::NumericallyZero,
                v => return v,
            }
        }
        worst
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(&other.chart)?;
        let deg = self.degree + other.degree;
        if deg > self.chart.dim() {
            return Err(ExteriorError::DegreeOverflow(deg, self.chart.dim()));
        }
        let mut out = DifferentialForm::zero(&self.chart, deg);
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let mut idx = i.clone();
                idx.extend_from_slice(j);
                out.insert(idx, a * b);
            }
        }
        Ok(out)
    }

    /// `ι_X w`, contracting into the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<DifferentialForm, ExteriorError> {
        self.check_chart(x.chart())?;
        if self.degree == 0 {
            return Err(ExteriorError::DegreeZero);
        }
        let mut out = DifferentialForm::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (r, &i) in idx.iter().enumerate() {
                let xi = x.coeff(i);
                if xi.is_zero_node() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(r);
                let term = c * xi;
                out.insert(rest, if r % 2 == 0 { term } else { -term });
            }
        }
        Ok(out)
    }

    /// Contracts `fields[0]` first, then `fields[1]`, and so on.
    pub fn interior_chain(&self, fields: &[&VectorField]) -> Result<DifferentialForm, ExteriorError> {
        let mut w = self.clone();
        for x in fields {
            w = w.interior(x)?;
        }
        Ok(w)
    }

    /// `w(X_1, …, X_k)` as a function.
    pub fn apply(&self, fields: &[&VectorField]) -> Result<Expr, ExteriorError> {
        assert_eq!(fields.len(), self.degree, "one field per slot");
        let w = self.interior_chain(fields)?;
        Ok(w.coefficient(&[]))
    }

    /// Exterior derivative over the chart coordinates. Top-degree input
    /// gives the zero form of the same degree.
    pub fn d(&self) -> DifferentialForm {
        let m = self.chart.dim();
        if self.degree >= m {
            return DifferentialForm::zero(&self.chart, self.degree);
        }
        let mut out = DifferentialForm::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for j in 0..m {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.diff(self.chart.name(j));
                if dc.is_zero_node() {
                    continue;
                }
                let mut k = vec![j];
                k.extend_from_slice(idx);
                out.insert(k, dc);
            }
        }
        out
    }

    /// Coefficients evaluated at a point.
    pub fn eval(&self, point: &BTreeMap<String, f64>) -> Result<NumericForm, EvalError> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            terms.insert(k.clone(), c.eval(point)?);
        }
        Ok(NumericForm { dim: self.chart.dim(), degree: self.degree, terms })
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            if idx.is_empty() {
                write!(f, "{c}")?;
                continue;
            }
            write!(f, "({c}) · ")?;
            let names: Vec<String> = idx.iter().map(|&i| format!("d{}", self.chart.name(i))).collect();
            f.write_str(&names.join("∧"))?;
        }
        Ok(())
    }
}

/// A form with numeric coefficients at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericForm {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, f64>,
}

impl NumericForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.terms
    }

    pub fn wedge(&self, other: &NumericForm) -> NumericForm {
        let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let mut idx = i.clone();
                idx.extend_from_slice(j);
                if let Some(s) = normalize(&mut idx) {
                    *terms.entry(idx).or_insert(0.0) += s as f64 * a * b;
                }
            }
        }
        NumericForm { dim: self.dim, degree: self.degree + other.degree, terms }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient magnitude, a scale for relative tests.
    pub fn norm(&self) -> f64 {
        self.max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Chart {
        Chart::new(&["x", "y"], None).unwrap()
    }

    #[test]
    fn basic_algebra() {
        let c = xy();
        let dx = DifferentialForm::basis(&c, &[0]).unwrap();
        let dy = DifferentialForm::basis(&c, &[1]).unwrap();
        assert_eq!(dx.wedge(&dx).unwrap().terms().len(), 0);
        let a = dx.wedge(&dy).unwrap();
        let b = dy.wedge(&dx).unwrap();
        assert_eq!(a.add(&b).unwrap().terms().len(), 0);
        let ex = VectorField::coordinate(&c, 0);
        assert_eq!(a.interior(&ex).unwrap(), dy);
        assert!(DifferentialForm::scalar(&c, Expr::one()).interior(&ex).is_err());
        assert!(a.wedge(&dx).is_err());
    }

    #[test]
    fn derivative() {
        let c = Chart::new(&["t", "F1"], Some(0)).unwrap();
        let w = DifferentialForm::basis(&c, &[0]).unwrap().scale(&Expr::sym("F1"));
        let expected =
            DifferentialForm::exact(&c, &Expr::sym("F1")).wedge(&DifferentialForm::basis(&c, &[0]).unwrap()).unwrap();
        assert_eq!(w.d(), expected);
        let f = Expr::sym("t").sin() * Expr::sym("F1").powi(3);
        assert_eq!(DifferentialForm::exact(&c, &f).d().simplified().terms().len(), 0);
        assert_eq!(DifferentialForm::volume(&c).d().degree(), 2);
    }

    #[test]
    fn display_is_stable() {
        let c = xy();
        let w = DifferentialForm::exact(&c, &(Expr::rat(1, 2) * Expr::sym("x")));
        assert_eq!(w.to_string(), "(1/2) · dx");
    }
}
