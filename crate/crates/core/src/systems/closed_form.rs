use std::collections::BTreeMap;

use serde::Serialize;

use super::{parameter, SystemError};
use crate::numeric::{IntegrationError, StateFunction};
use crate::structure::HamiltonianSystem;
use crate::symexpr::{is_zero_with, CompiledExpr, Expr, ZeroOptions, ZeroVerdict};

/// Phase-space coordinates as explicit functions of `t` and named constants.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormSolution {
    pub names: Vec<String>,
    #[serde(serialize_with = "as_strings")]
    pub coords: Vec<Expr>,
    /// Constants fixed by the initial condition.
    pub constants: BTreeMap<String, f64>,
    #[serde(skip)]
    compiled: Vec<CompiledExpr>,
}

fn as_strings<S: serde::Serializer>(v: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_string()))
}

impl ClosedFormSolution {
    fn new(names: Vec<String>, coords: Vec<Expr>, constants: BTreeMap<String, f64>) -> Result<Self, SystemError> {
        let mut slots = vec!["t".to_string()];
        slots.extend(constants.keys().cloned());
        let compiled = coords
            .iter()
            .map(|c| c.compile(&slots))
            .collect::<Result<_, _>>()
            .map_err(|_| SystemError::SingularInitialPoint)?;
        Ok(ClosedFormSolution { names, coords, constants, compiled })
    }

    fn slots(&self, t: f64) -> Vec<f64> {
        let mut x = vec![t];
        x.extend(self.constants.values().copied());
        x
    }

    /// Largest deviation from Hamilton's equations at the given times, using
    /// exact time derivatives of the closed form.
    pub fn equation_residual(&self, sys: &HamiltonianSystem, times: &[f64]) -> Result<f64, IntegrationError> {
        let rates: Vec<Expr> = self.coords.iter().map(|c| c.diff("t")).collect();
        let n = sys.dof();
        let mut field = Vec::with_capacity(2 * n);
        for p in sys.chart.p_names() {
            field.push(sys.hamiltonian.diff(p));
        }
        for q in sys.chart.q_names() {
            field.push(-sys.hamiltonian.diff(q));
        }
        let mut worst: f64 = 0.0;
        for &t in times {
            let mut point = self.constants.clone();
            point.insert("t".into(), t);
            let state = self.state_at(t)?;
            let at = sys.chart.point(&state);
            for (r, f) in rates.iter().zip(&field) {
                worst = worst.max((r.eval(&point)? - f.eval(&at)?).abs());
            }
        }
        Ok(worst)
    }

    /// Zero test of `d/dt x(t) - X_H(x(t))` with `t` and the constants left
    /// symbolic.
    pub fn symbolic_check(&self, sys: &HamiltonianSystem, opts: &ZeroOptions) -> Vec<ZeroVerdict> {
        let subs: BTreeMap<String, Expr> = sys.chart.names().iter().cloned().zip(self.coords.iter().cloned()).collect();
        let n = sys.dof();
        (0..2 * n)
            .map(|i| {
                let rhs = if i < n {
                    sys.hamiltonian.diff(&sys.chart.p_names()[i])
                } else {
                    -sys.hamiltonian.diff(&sys.chart.q_names()[i - n])
                };
                is_zero_with(&(self.coords[i].diff("t") - rhs.subs(&subs)), opts)
            })
            .collect()
    }
}

impl StateFunction for ClosedFormSolution {
    fn state_at(&self, t: f64) -> Result<Vec<f64>, IntegrationError> {
        let x = self.slots(t);
        Ok(self.compiled.iter().map(|c| c.eval(&x)).collect::<Result<_, _>>()?)
    }
}

/// `q_k = β_k/(m_k c_k) sin(c_k t - θ_k)`, `p_k = β_k cos(c_k t - θ_k)` with
/// `β_k = sqrt(p_k0² + (m_k c_k q_k0)²)` and `θ_k = atan2(-m_k c_k q_k0, p_k0)`.
pub fn ho_closed_form(sys: &HamiltonianSystem, x0: &[f64]) -> Result<ClosedFormSolution, SystemError> {
    let n = sys.dof();
    if x0.len() != 2 * n {
        return Err(SystemError::Arity { what: "initial values", expected: 2 * n, got: x0.len() });
    }
    let t = Expr::sym("t");
    let mut constants = BTreeMap::new();
    let mut qs = Vec::new();
    let mut ps = Vec::new();
    for k in 0..n {
        let m = parameter(sys, &format!("m{}", k + 1))?;
        let c = parameter(sys, &format!("c{}", k + 1))?;
        let (q0, p0) = (x0[k], x0[n + k]);
        let beta = p0.hypot(m * c * q0);
        if beta == 0.0 {
            return Err(SystemError::SingularInitialPoint);
        }
        let (bn, tn) = (format!("beta{}", k + 1), format!("theta{}", k + 1));
        constants.insert(bn.clone(), beta);
        constants.insert(tn.clone(), (-m * c * q0).atan2(p0));
        let (me, ce) = (Expr::from_decimal(m), Expr::from_decimal(c));
        let phase = &ce * &t - Expr::sym(&tn);
        qs.push(Expr::sym(&bn) / (&me * &ce) * phase.sin());
        ps.push(Expr::sym(&bn) * phase.cos());
    }
    qs.extend(ps);
    ClosedFormSolution::new(sys.chart.names().to_vec(), qs, constants)
}

/// Two-particle Calogero-Moser with `D = exp(-4 C4)`:
/// `q1 - q2 = σ sqrt(D (t + 2 C2)² + 4g²/D)`, `q1 + q2 = 2(C3 t - C1)`,
/// `p1 - p2 = D (t + 2 C2)/(q1 - q2)`, `p1 + p2 = 2 C3`.
pub fn cm_closed_form(sys: &HamiltonianSystem, x0: &[f64]) -> Result<ClosedFormSolution, SystemError> {
    if x0.len() != 4 {
        return Err(SystemError::Arity { what: "initial values", expected: 4, got: x0.len() });
    }
    let g = parameter(sys, "g")?;
    let (q1, q2, p1, p2) = (x0[0], x0[1], x0[2], x0[3]);
    let u0 = q1 - q2;
    if u0 == 0.0 {
        return Err(SystemError::SingularInitialPoint);
    }
    let v0 = p1 - p2;
    let d = v0 * v0 + 4.0 * g * g / (u0 * u0);
    let constants = BTreeMap::from([
        ("C1".to_string(), -(q1 + q2) / 2.0),
        ("C2".to_string(), u0 * v0 / (2.0 * d)),
        ("C3".to_string(), (p1 + p2) / 2.0),
        ("C4".to_string(), -d.ln() / 4.0),
    ]);
    let sigma = if u0 > 0.0 { 1 } else { -1 };
    let t = Expr::sym("t");
    let c = |i: usize| Expr::sym(&format!("C{i}"));
    let dd = (-4 * c(4)).exp();
    let gg = Expr::from_decimal(g);
    let shifted = &t + 2 * c(2);
    let u = sigma * (&dd * shifted.powi(2) + 4 * gg.powi(2) / &dd).sqrt();
    let s = 2 * (c(3) * &t - c(1));
    let v = &dd * &shifted / &u;
    let half = Expr::rat(1, 2);
    let coords = vec![&half * (&s + &u), &half * (&s - &u), c(3) + &half * &v, c(3) - &half * &v];
    ClosedFormSolution::new(sys.chart.names().to_vec(), coords, constants)
}
