use std::collections::BTreeMap;

use super::{Chart, ExteriorError};
use crate::symexpr::{is_zero, EvalError, Expr, ZeroVerdict};

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    coeffs: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Chart, coeffs: Vec<Expr>) -> Result<VectorField, ExteriorError> {
        if coeffs.len() != chart.dim() {
            return Err(ExteriorError::Arity { expected: chart.dim(), got: coeffs.len() });
        }
        Ok(VectorField { chart: chart.clone(), coeffs })
    }

    pub fn zero(chart: &Chart) -> VectorField {
        VectorField { chart: chart.clone(), coeffs: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(chart: &Chart, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.coeffs[i] = Expr::one();
        v
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Expr {
        &self.coeffs[i]
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::add_all(
            self.coeffs
                .iter()
                .zip(self.chart.names())
                .filter(|(c, _)| !c.is_zero_node())
                .map(|(c, x)| c * f.diff(x))
                .collect(),
        )
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, ExteriorError> {
        self.same_chart(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, ExteriorError> {
        self.same_chart(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        self.map(|c| f * c)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Coefficients fully expanded.
    pub fn simplified(&self) -> VectorField {
        self.map(Expr::simplify)
    }

    fn zip_with(&self, other: &VectorField, f: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub(crate) fn same_chart(&self, other: &VectorField) -> Result<(), ExteriorError> {
        if self.chart == other.chart {
            Ok(())
        } else {
            Err(ExteriorError::ChartMismatch)
        }
    }

    pub fn eval(&self, point: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
        self.coeffs.iter().map(|c| c.eval(point)).collect()
    }

    /// Zero verdict per coefficient, combined: proven only if every
    /// coefficient is proven zero.
    pub fn zero_verdict(&self) -> ZeroVerdict {
        let mut worst = ZeroVerdict::ProvenZero;
        for c in &self.coeffs {
            match is_zero(c) {
                ZeroVerdict::ProvenZero => {}
                ZeroVerdict::NumericallyZero => worst = ZeroVerdict::NumericallyZero,
                v => return v,
            }
        }
        worst
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (c, x) in self.coeffs.iter().zip(self.chart.names()) {
            if c.is_zero_node() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c}) d/d{x}")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `X_H = Σ ∂H/∂p_i ∂_{q_i} − ∂H/∂q_i ∂_{p_i}`; zero time component.
pub fn hamiltonian_vector_field(h: &Expr, chart: &Chart) -> Result<VectorField, ExteriorError> {
    chart.require_phase()?;
    let mut v = VectorField::zero(chart);
    for i in 0..chart.dof() {
        let (qi, pi) = (chart.q_index(i), chart.p_index(i));
        v.coeffs[qi] = h.diff(chart.name(pi));
        v.coeffs[pi] = -h.diff(chart.name(qi));
    }
    Ok(v)
}

/// `{F, G} = Σ ∂F/∂q_i ∂G/∂p_i − ∂G/∂q_i ∂F/∂p_i`.
pub fn poisson_bracket(f: &Expr, g: &Expr, chart: &Chart) -> Result<Expr, ExteriorError> {
    chart.require_phase()?;
    let mut terms = Vec::with_capacity(2 * chart.dof());
    for (q, p) in chart.q_names().iter().zip(chart.p_names()) {
        terms.push(f.diff(q) * g.diff(p));
        terms.push(-(g.diff(q) * f.diff(p)));
    }
    Ok(Expr::add_all(terms))
}

/// `[X, Y]^i = X(Y^i) − Y(X^i)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, ExteriorError> {
    x.same_chart(y)?;
    let coeffs = x.coeffs.iter().zip(&y.coeffs).map(|(xi, yi)| x.apply(yi) - y.apply(xi)).collect();
    Ok(VectorField { chart: x.chart.clone(), coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, ParseContext};

    fn cm() -> (Chart, Expr) {
        let chart = Chart::standard(2, false);
        let ctx = ParseContext::new(chart.names());
        (chart, parse("p1^2/2 + p2^2/2 + 1/(q1-q2)^2", &ctx).unwrap())
    }

    #[test]
    fn cm_hamiltonian_field() {
        let (chart, h) = cm();
        let x = hamiltonian_vector_field(&h, &chart).unwrap();
        let ctx = ParseContext::new(chart.names());
        let force = parse("2/(q1-q2)^3", &ctx).unwrap();
        assert_eq!(x.coeffs(), &[Expr::sym("p1"), Expr::sym("p2"), force.clone(), -force]);
    }

    #[test]
    fn canonical_pair_and_involution() {
        let (chart, h) = cm();
        assert_eq!(poisson_bracket(&Expr::sym("q1"), &Expr::sym("p1"), &chart).unwrap(), Expr::one());
        let f1 = Expr::sym("p1") + Expr::sym("p2");
        let f2 = 2 * h.clone();
        assert!(is_zero(&poisson_bracket(&f1, &f2, &chart).unwrap()).is_zero());
    }

    #[test]
    fn coordinate_fields_commute() {
        let chart = Chart::standard(1, false);
        let b = lie_bracket(&VectorField::coordinate(&chart, 0), &VectorField::coordinate(&chart, 1)).unwrap();
        assert_eq!(b, VectorField::zero(&chart));
        assert!(poisson_bracket(&Expr::one(), &Expr::one(), &Chart::new(&["x"], None).unwrap()).is_err());
    }
}
