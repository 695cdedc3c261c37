//! Benchmark catalog: harmonic oscillators and the two-particle rational
//! Calogero-Moser system, with closed-form solutions, Lax pair and
//! action-angle ground truth.

mod closed_form;
mod lax;

use std::collections::BTreeMap;

use crate::exterior::Chart;
use crate::structure::HamiltonianSystem;
use crate::symexpr::Expr;

pub use closed_form::{cm_closed_form, ho_closed_form, ClosedFormSolution};
pub use lax::{cm_lax_pair, ComplexExpr, ComplexMatrix, LaxPair, LaxResidual};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("parameter `{0}` must be positive")]
    NonPositive(String),
    #[error("coupling g must be nonzero")]
    ZeroCoupling,
    #[error("expected {expected} values for `{what}`, got {got}")]
    Arity { what: &'static str, expected: usize, got: usize },
    #[error("initial point lies on a singular set")]
    SingularInitialPoint,
    #[error("system `{0}` lacks parameter `{1}`")]
    MissingParameter(String, String),
}

/// `H = Σ p_k²/(2 m_k) + ½ m_k c_k² q_k²`, `F_k` the individual energies,
/// `G_k = atan(m_k c_k q_k / p_k)`.
pub fn harmonic_oscillators(n: usize, masses: &[f64], freqs: &[f64]) -> Result<HamiltonianSystem, SystemError> {
    if masses.len() != n {
        return Err(SystemError::Arity { what: "masses", expected: n, got: masses.len() });
    }
    if freqs.len() != n {
        return Err(SystemError::Arity { what: "frequencies", expected: n, got: freqs.len() });
    }
    let mut params = BTreeMap::new();
    for k in 0..n {
        for (name, v) in [("m", masses[k]), ("c", freqs[k])] {
            if !(v > 0.0) {
                return Err(SystemError::NonPositive(format!("{name}{}", k + 1)));
            }
            params.insert(format!("{name}{}", k + 1), v);
        }
    }
    let chart = Chart::standard(n, false);
    let mut integrals = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut singular = Vec::with_capacity(n);
    for k in 0..n {
        let (m, c) = (Expr::from_decimal(masses[k]), Expr::from_decimal(freqs[k]));
        let q = Expr::sym(&chart.q_names()[k]);
        let p = Expr::sym(&chart.p_names()[k]);
        integrals.push(p.powi(2) / (2 * &m) + Expr::rat(1, 2) * &m * c.powi(2) * q.powi(2));
        g.push((&m * &c * &q / &p).atan());
        singular.push((q.powi(2) + p.powi(2)).sqrt());
    }
    let h = Expr::add_all(integrals.clone());
    let name = format!(
        "ho:n={n},m={},c={}",
        masses.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        freqs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    );
    Ok(HamiltonianSystem::new(&name, chart, h, integrals)
        .with_g_functions(g)
        .with_singular(singular)
        .with_parameters(params))
}

/// `H = ½(p1² + p2²) + g²/(q1 − q2)²`, `F1 = p1 + p2`,
/// `F2 = p1² + p2² + 2g²/(q1 − q2)²`, `G1 = q1 + q2`,
/// `G2 = (q1 − q2)(p1 − p2)`.
pub fn calogero_moser_2(g: f64) -> Result<HamiltonianSystem, SystemError> {
    if g == 0.0 || !g.is_finite() {
        return Err(SystemError::ZeroCoupling);
    }
    let chart = Chart::standard(2, false);
    let gg = Expr::from_decimal(g);
    let (q1, q2, p1, p2) = (Expr::sym("q1"), Expr::sym("q2"), Expr::sym("p1"), Expr::sym("p2"));
    let u = &q1 - &q2;
    let pot = gg.powi(2) / u.powi(2);
    let h = Expr::rat(1, 2) * (p1.powi(2) + p2.powi(2)) + &pot;
    let f1 = &p1 + &p2;
    let f2 = p1.powi(2) + p2.powi(2) + 2 * &pot;
    let g1 = &q1 + &q2;
    let g2 = &u * (&p1 - &p2);
    let params = BTreeMap::from([("g".to_string(), g)]);
    Ok(HamiltonianSystem::new(&format!("cm2:g={g}"), chart, h, vec![f1, f2])
        .with_g_functions(vec![g1, g2])
        .with_singular(vec![u])
        .with_box(vec![(-2.0, 2.0), (-2.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)])
        .with_parameters(params))
}

/// Known action-angle variables in the original coordinates.
#[derive(Debug, Clone)]
pub struct ActionAngleTruth {
    pub actions: Vec<Expr>,
    pub angles: Vec<Expr>,
    /// The Hamiltonian as a function of symbols `P1..Pn`.
    pub hamiltonian: Expr,
}

/// `P1 = ½(p1 + p2)`, `P2 = ¼ ln((p1 − p2)² + 4g²/(q1 − q2)²)`,
/// `Q1 = q1 + q2`, `Q2 = (q1 − q2)(p1 − p2)`.
pub fn cm_action_angle_truth(g: f64) -> ActionAngleTruth {
    let gg = Expr::from_decimal(g);
    let (q1, q2, p1, p2) = (Expr::sym("q1"), Expr::sym("q2"), Expr::sym("p1"), Expr::sym("p2"));
    let p_1 = Expr::rat(1, 2) * (&p1 + &p2);
    let p_2 = Expr::rat(1, 4) * ((&p1 - &p2).powi(2) + 4 * gg.powi(2) / (&q1 - &q2).powi(2)).ln();
    let big_p1 = Expr::sym("P1");
    let big_p2 = Expr::sym("P2");
    ActionAngleTruth {
        actions: vec![p_1, p_2],
        angles: vec![&q1 + &q2, (&q1 - &q2) * (&p1 - &p2)],
        hamiltonian: big_p1.powi(2) + Expr::rat(1, 4) * (4 * big_p2).exp(),
    }
}

/// `P_k = (p_k² + (m_k c_k q_k)²)/(2 m_k c_k)`, `Q_k = atan(m_k c_k q_k/p_k)`.
pub fn ho_action_angle_truth(masses: &[f64], freqs: &[f64]) -> ActionAngleTruth {
    let n = masses.len();
    let chart = Chart::standard(n, false);
    let mut actions = Vec::new();
    let mut angles = Vec::new();
    let mut h = Vec::new();
    for k in 0..n {
        let mc = Expr::from_decimal(masses[k]) * Expr::from_decimal(freqs[k]);
        let q = Expr::sym(&chart.q_names()[k]);
        let p = Expr::sym(&chart.p_names()[k]);
        actions.push((p.powi(2) + (&mc * &q).powi(2)) / (2 * &mc));
        angles.push((&mc * &q / &p).atan());
        h.push(Expr::from_decimal(freqs[k]) * Expr::sym(&format!("P{}", k + 1)));
    }
    ActionAngleTruth { actions, angles, hamiltonian: Expr::add_all(h) }
}

pub(crate) fn parameter(sys: &HamiltonianSystem, name: &str) -> Result<f64, SystemError> {
    sys.parameters.get(name).copied().ok_or_else(|| SystemError::MissingParameter(sys.name.clone(), name.to_string()))
}
