//! Linear flow of the angles from the lower Pfaffian forms by Cramer's rule.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{jacobian_det, PfaffianError};
use crate::structure::{HamiltonianSystem, RelationCheck};
use crate::symexpr::matrix::Matrix;
use crate::symexpr::{is_zero, Expr, ZeroVerdict};

/// `det Δ` against `±λ^{n−1}` with the displayed and the derived sign.
#[derive(Debug, Clone, Serialize)]
pub struct ParityCheck {
    pub n: usize,
    pub stated_sign: i64,
    pub derived_sign: i64,
    pub stated_verdict: ZeroVerdict,
    pub derived_verdict: ZeroVerdict,
}

impl ParityCheck {
    fn new(n: usize, det: &Expr, lambda: &Expr) -> ParityCheck {
        let power = lambda.powi(n as i64 - 1);
        let stated_sign = stated_parity_sign(n);
        let derived_sign = derived_parity_sign(n);
        ParityCheck {
            n,
            stated_sign,
            derived_sign,
            stated_verdict: is_zero(&(det - stated_sign * &power)),
            derived_verdict: is_zero(&(det - derived_sign * &power)),
        }
    }
}

/// `(−1)^{n/2}` for even `n`, `(−1)^{(n+1)/2}` for odd `n`.
pub fn stated_parity_sign(n: usize) -> i64 {
    let e = if n.is_multiple_of(2) { n / 2 } else { n.div_ceil(2) };
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `(−1)^{n(n+3)/2}`: `Δ = diag((−1)^{i+1}) · cof(∂F/∂P)`, so
/// `det Δ = (−1)^{n(n+1)/2} det(∂F/∂P)^{n−1}` and `λ = (−1)^n det(∂F/∂P)`.
pub fn derived_parity_sign(n: usize) -> i64 {
    if (n * (n + 3) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRecovery {
    pub n: usize,
    pub lambda: Expr,
    /// Rows of `Δ`.
    pub delta: Vec<Vec<Expr>>,
    pub det_delta: Expr,
    /// `B_i = |∂(H, F_{≠i})/∂P| t + K_i`.
    pub b: Vec<Expr>,
    /// `K_i = Σ_j Δ_ij Q_{j0}`.
    pub k: Vec<Expr>,
    /// `∂H/∂P_j`.
    pub velocities: Vec<Expr>,
    /// `Q_j(t)` from Cramer's rule.
    pub angles: Vec<Expr>,
    /// `Q_j(t)` at the requested point.
    pub values: Vec<f64>,
    pub checks: Vec<RelationCheck>,
    pub parity: ParityCheck,
}

impl FlowRecovery {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_zero())
    }
}

/// `Δ_ij = (−1)^{j+1} |∂F_{≠i}/∂P_{≠j}|`.
fn delta_matrix(f: &[Expr], p: &[&str]) -> Matrix {
    let n = f.len();
    Matrix::from_fn(n, n, |i, j| {
        let rows: Vec<&Expr> = f.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, e)| e).collect();
        let cols: Vec<&str> = p.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, s)| *s).collect();
        let d = jacobian_det(&rows, &cols);
        if j % 2 == 0 {
            d
        } else {
            -d
        }
    })
}

fn with_column(m: &Matrix, j: usize, col: &[Expr]) -> Matrix {
    let mut out = m.clone();
    for (i, v) in col.iter().enumerate() {
        out.set(i, j, v.clone());
    }
    out
}

fn offset_name(j: usize) -> String {
    format!("Q{j}_0")
}

/// Builds `Δ`, `B` and `K` for an action-angle system, solves for `Q(t)`
/// by Cramer's rule and certifies `Q_j = (∂H/∂P_j) t + Q_{j0}`.
pub fn recover_linear_flow(
    sys: &HamiltonianSystem,
    q0: &[f64],
    t: f64,
    p_point: &[f64],
) -> Result<FlowRecovery, PfaffianError> {
    let n = sys.dof();
    if q0.len() != n || p_point.len() != n {
        return Err(PfaffianError::FieldCount { expected: n, got: q0.len().min(p_point.len()) });
    }
    let p: Vec<&str> = sys.chart.p_names().iter().map(|s| s.as_str()).collect();
    let f = &sys.integrals;
    let fr: Vec<&Expr> = f.iter().collect();
    let lambda = ((if n.is_multiple_of(2) { 1 } else { -1 }) * jacobian_det(&fr, &p)).simplify();
    let delta = delta_matrix(f, &p);
    let det_delta = delta.det();
    let ts = Expr::sym("t");
    let offsets: Vec<Expr> = (1..=n).map(|j| Expr::sym(&offset_name(j))).collect();
    let velocities: Vec<Expr> = p.iter().map(|v| sys.hamiltonian.diff(v)).collect();
    let mut k = Vec::with_capacity(n);
    let mut fi = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let mut rows = vec![&sys.hamiltonian];
        rows.extend(f.iter().enumerate().filter(|(r, _)| *r != i).map(|(_, e)| e));
        let fdet = jacobian_det(&rows, &p);
        let ki = Expr::add_all((0..n).map(|j| delta.get(i, j) * &offsets[j]).collect());
        b.push(&fdet * &ts + &ki);
        fi.push(fdet);
        k.push(ki);
    }
    let mut checks = Vec::new();
    let mut angles = Vec::with_capacity(n);
    for j in 0..n {
        let qj = (with_column(&delta, j, &b).det() / &det_delta).simplify();
        let d2 = with_column(&delta, j, &k).det();
        checks.push(RelationCheck::new(
            format!("Q{}(t) = ∂H/∂P{} t + {}", j + 1, j + 1, offset_name(j + 1)),
            is_zero(&(&qj - (&velocities[j] * &ts + &offsets[j]))),
        ));
        checks.push(RelationCheck::new(
            format!("dQ{}/dt = ∂H/∂P{}", j + 1, j + 1),
            is_zero(&(qj.diff("t") - &velocities[j])),
        ));
        checks.push(RelationCheck::new(
            format!("det Δ{}^(2) = det Δ · {}", j + 1, offset_name(j + 1)),
            is_zero(&(d2 - &det_delta * &offsets[j])),
        ));
        angles.push(qj);
    }
    for i in 0..n {
        let sum = Expr::add_all((0..n).map(|j| delta.get(i, j) * &velocities[j]).collect());
        checks.push(RelationCheck::new(
            format!("|∂(H, F≠{})/∂P| = Σ Δ{}j ∂H/∂Pj", i + 1, i + 1),
            is_zero(&(&fi[i] - sum)),
        ));
    }

    let mut env: BTreeMap<String, f64> = p.iter().map(|s| s.to_string()).zip(p_point.iter().copied()).collect();
    if det_delta.eval(&env)?.abs() < 1e-12 {
        return Err(PfaffianError::SingularDelta);
    }
    env.insert("t".into(), t);
    for (j, v) in q0.iter().enumerate() {
        env.insert(offset_name(j + 1), *v);
    }
    let values = angles.iter().map(|a| a.eval(&env)).collect::<Result<Vec<_>, _>>()?;
    let parity = ParityCheck::new(n, &det_delta, &lambda);
    Ok(FlowRecovery {
        n,
        delta: (0..n).map(|i| (0..n).map(|j| delta.get(i, j).clone()).collect()).collect(),
        lambda,
        det_delta,
        b,
        k,
        velocities,
        angles,
        values,
        checks,
        parity,
    })
}

/// `det Δ` by cofactor expansion against `±λ^{n−1}` for random polynomial
/// integrals `F(P)` of degree at most 3 with small integer coefficients.
pub fn determinant_identity(n: usize, seed: u64) -> ParityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<String> = (1..=n).map(|i| format!("P{i}")).collect();
    let syms: Vec<Expr> = p.iter().map(|s| Expr::sym(s)).collect();
    let monos = super::fit::monomials(n, 3, false);
    let f: Vec<Expr> = (0..n)
        .map(|i| {
            // the diagonal linear term keeps ∂F/∂P generically invertible
            let mut terms = Vec::new();
            for m in &monos {
                if rng.gen_bool(0.4) {
                    terms.push(rng.gen_range(-3i64..=3) * super::fit::monomial_expr(m, &syms));
                }
            }
            terms.push(syms[i].clone());
            Expr::add_all(terms)
        })
        .collect();
    let pr: Vec<&str> = p.iter().map(|s| s.as_str()).collect();
    let fr: Vec<&Expr> = f.iter().collect();
    let lambda = (if n.is_multiple_of(2) { 1 } else { -1 }) * jacobian_det(&fr, &pr);
    ParityCheck::new(n, &delta_matrix(&f, &pr).det(), &lambda)
}
