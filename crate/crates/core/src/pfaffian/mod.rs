//! Pfaffian forms of a solvable structure, triangular closure, descent by
//! quadratures, linear-flow recovery and action-angle extraction.

mod descent;
mod extract;
mod fit;
mod flow;
mod primitive;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::exterior::{Chart, DifferentialForm, ExteriorError, VectorField};
use crate::structure::{HamiltonianSystem, RelationCheck, StructureError};
use crate::symexpr::matrix::Matrix;
use crate::symexpr::{is_zero, EvalError, Expr, ZeroVerdict};

pub use descent::{descend_quadratures, DescentLevel, DescentResult};
pub use extract::{extract_action_angle, ActionAngle};
pub use flow::{
    derived_parity_sign, determinant_identity, recover_linear_flow, stated_parity_sign, FlowRecovery, ParityCheck,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum PfaffianError {
    #[error("expected {expected} fields, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error("lambda vanishes identically; the fields are dependent")]
    LambdaZero,
    #[error("lambda vanishes at sample {0:?}")]
    LambdaVanishes(Vec<f64>),
    #[error("could not rewrite `{0}` in the integral chart")]
    Rewrite(String),
    #[error("Jacobian of the integrals with respect to the momenta is singular")]
    SingularJacobian,
    #[error("det Δ vanishes at the given point")]
    SingularDelta,
    #[error("comparison mismatch: {0}")]
    Mismatch(String),
    #[error("descent halted: {0}")]
    Halted(String),
    #[error("Newton inversion failed at t = {0}")]
    Inversion(f64),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Ordered fields `A, Y_1..Y_{m-1}` with a volume form on one chart, plus
/// the chart coordinates as functions of the original `(t, q, p)`.
#[derive(Debug, Clone)]
pub struct StructureChart {
    pub chart: Chart,
    pub embedding: Vec<Expr>,
    pub fields: Vec<VectorField>,
    pub labels: Vec<String>,
    pub tau: DifferentialForm,
    /// Regular points in chart coordinates.
    pub samples: Vec<Vec<f64>>,
}

fn structure_fields(sys: &HamiltonianSystem) -> Result<(Vec<VectorField>, Vec<String>), PfaffianError> {
    let n = sys.dof();
    let mut fields = vec![sys.a_field()?];
    fields.extend(sys.integral_fields()?);
    fields.extend(sys.g_fields()?);
    let mut labels = vec!["A".to_string()];
    labels.extend((1..=n).map(|i| format!("X_F{i}")));
    labels.extend((1..=n).map(|i| format!("X_G{i}")));
    Ok((fields, labels))
}

/// Sampling exclusion radius for fits; keeps the monomial columns well
/// conditioned near the singular sets.
const FIT_EPS: f64 = 0.25;

/// The canonical structure on the extended chart `(t, q, p)` with the
/// coordinate volume form.
pub fn original_chart_structure(
    sys: &HamiltonianSystem,
    samples: usize,
    seed: u64,
) -> Result<StructureChart, PfaffianError> {
    let (fields, labels) = structure_fields(sys)?;
    let chart = sys.extended_chart();
    let embedding = chart.names().iter().map(|s| Expr::sym(s)).collect();
    Ok(StructureChart {
        tau: DifferentialForm::volume(&chart),
        samples: sys.extended_samples(samples, seed, FIT_EPS)?,
        chart,
        embedding,
        fields,
        labels,
    })
}

/// The canonical structure pushed forward to `(t, F_1..F_n, G_1..G_n)`.
/// Field components and the volume density are rewritten as polynomials
/// in the new coordinates and verified.
pub fn integral_chart_structure(
    sys: &HamiltonianSystem,
    samples: usize,
    seed: u64,
) -> Result<StructureChart, PfaffianError> {
    let n = sys.dof();
    let (fields, labels) = structure_fields(sys)?;
    let g = sys.resolved_g_functions()?;
    let mut names = vec!["t".to_string()];
    names.extend((1..=n).map(|i| format!("F{i}")));
    names.extend((1..=n).map(|i| format!("G{i}")));
    let chart = Chart::new(&names, Some(0))?;
    let mut embedding = vec![Expr::sym("t")];
    embedding.extend(sys.integrals.iter().cloned());
    embedding.extend(g.iter().cloned());
    let symbols: Vec<Expr> = names.iter().map(|s| Expr::sym(s)).collect();

    let orig = sys.extended_samples(samples.max(120), seed, FIT_EPS)?;
    let ext = sys.extended_chart();
    let points: Vec<BTreeMap<String, f64>> = orig.iter().map(|x| ext.point(x)).collect();
    let rewrite = |e: &Expr| -> Result<Expr, PfaffianError> {
        fit::express_in(e, &embedding, &symbols, &points, 3).ok_or_else(|| PfaffianError::Rewrite(e.to_string()))
    };

    let mut pushed = Vec::with_capacity(fields.len());
    for x in &fields {
        let coeffs = embedding.iter().map(|y| rewrite(&x.apply(y).simplify())).collect::<Result<Vec<_>, _>>()?;
        pushed.push(VectorField::new(&chart, coeffs)?);
    }
    let phase_vars: Vec<String> = sys.chart.names().to_vec();
    let funcs: Vec<Expr> = embedding[1..].to_vec();
    let jac = Matrix::from_fn(2 * n, 2 * n, |i, j| funcs[i].diff(&phase_vars[j]));
    let density = rewrite(&jac.det())?;
    let tau = DifferentialForm::volume(&chart).scale(&density.recip());
    let mapped = points
        .iter()
        .take(samples.max(1))
        .map(|p| embedding.iter().map(|y| y.eval(p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StructureChart { chart, embedding, fields: pushed, labels, tau, samples: mapped })
}

/// `λ` and the forms `ω_1..ω_{m-1}` of an ordered structure.
#[derive(Debug, Clone)]
pub struct PfaffianSet {
    pub chart: Chart,
    pub embedding: Vec<Expr>,
    pub lambda: Expr,
    /// `forms[i-1]` is `ω_i`, built with `fields[i]` omitted.
    pub forms: Vec<DifferentialForm>,
    pub labels: Vec<String>,
    pub fields: Vec<VectorField>,
    pub samples: Vec<Vec<f64>>,
    /// `ω_i(A)` per form.
    pub annihilation: Vec<ZeroVerdict>,
}

#[derive(Serialize)]
struct FormSummary<'a> {
    index: usize,
    omitted: &'a str,
    form: String,
    annihilates_a: ZeroVerdict,
}

#[derive(Serialize)]
struct SetSummary<'a> {
    chart: &'a [String],
    lambda: String,
    forms: Vec<FormSummary<'a>>,
}

impl Serialize for PfaffianSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SetSummary {
            chart: self.chart.names(),
            lambda: self.lambda.to_string(),
            forms: self
                .forms
                .iter()
                .enumerate()
                .map(|(i, w)| FormSummary {
                    index: i + 1,
                    omitted: &self.labels[i + 1],
                    form: w.to_string(),
                    annihilates_a: self.annihilation[i],
                })
                .collect(),
        }
        .serialize(s)
    }
}

pub(crate) fn sample_maps(chart: &Chart, samples: &[Vec<f64>]) -> Vec<BTreeMap<String, f64>> {
    samples.iter().map(|x| chart.point(x)).collect()
}

/// Drops coefficients with a zero verdict.
pub(crate) fn prune(w: &DifferentialForm) -> DifferentialForm {
    let mut out = DifferentialForm::zero(w.chart(), w.degree());
    for (idx, c) in w.terms() {
        if !is_zero(c).is_zero() {
            out.insert(idx.clone(), c.clone());
        }
    }
    out
}

pub(crate) fn normalize_form(w: &DifferentialForm, points: &[BTreeMap<String, f64>]) -> DifferentialForm {
    let vars = w.chart().names().to_vec();
    let mut out = DifferentialForm::zero(w.chart(), w.degree());
    for (idx, c) in w.terms() {
        if is_zero(c).is_zero() {
            continue;
        }
        out.insert(idx.clone(), fit::normalize_coefficient(c, &vars, points, 4));
    }
    out
}

/// `λ = Y_{m-1} ⌟ … ⌟ Y_1 ⌟ A ⌟ τ` and `ω_i = (1/λ) (same with Y_i
/// omitted)`, with coefficients rewritten over their smallest verified
/// denominators.
pub fn compute_pfaffian_set(sc: &StructureChart) -> Result<PfaffianSet, PfaffianError> {
    let m = sc.chart.dim();
    if sc.fields.len() != m {
        return Err(PfaffianError::FieldCount { expected: m, got: sc.fields.len() });
    }
    let points = sample_maps(&sc.chart, &sc.samples);
    let vars = sc.chart.names().to_vec();
    let refs: Vec<&VectorField> = sc.fields.iter().collect();
    let raw = sc.tau.interior_chain(&refs)?.coefficient(&[]);
    let lambda = fit::normalize_coefficient(&raw, &vars, &points, 4);
    if is_zero(&lambda).is_zero() {
        return Err(PfaffianError::LambdaZero);
    }
    for (x, p) in sc.samples.iter().zip(&points) {
        if lambda.eval(p)?.abs() < 1e-12 {
            return Err(PfaffianError::LambdaVanishes(x.clone()));
        }
    }
    let inv = lambda.recip();
    let mut forms = Vec::with_capacity(m - 1);
    for i in 1..m {
        let omitted: Vec<&VectorField> = refs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, f)| *f).collect();
        let k = normalize_form(&sc.tau.interior_chain(&omitted)?, &points);
        forms.push(normalize_form(&k.scale(&inv), &points));
    }
    let annihilation =
        forms.iter().map(|w| Ok(is_zero(&w.apply(&[&sc.fields[0]])?))).collect::<Result<Vec<_>, PfaffianError>>()?;
    Ok(PfaffianSet {
        chart: sc.chart.clone(),
        embedding: sc.embedding.clone(),
        lambda,
        forms,
        labels: sc.labels.clone(),
        fields: sc.fields.clone(),
        samples: sc.samples.clone(),
        annihilation,
    })
}

impl PfaffianSet {
    /// `ω_i` (1-based).
    pub fn form(&self, i: usize) -> &DifferentialForm {
        &self.forms[i - 1]
    }

    /// `ω_i(Y_j) = (−1)^{m−1−i} δ_ij`: contracting the omitted field last
    /// moves it past the `m − 1 − i` later fields.
    pub fn duality(&self) -> Result<Vec<RelationCheck>, PfaffianError> {
        let m = self.chart.dim();
        let mut out = Vec::new();
        for i in 1..m {
            for j in 1..m {
                let v = self.forms[i - 1].apply(&[&self.fields[j]])?;
                let expected = if i == j { duality_sign(m, i) } else { 0 };
                out.push(RelationCheck::new(
                    format!("ω{i}({}) = {expected}", self.labels[j]),
                    is_zero(&(v - expected)),
                ));
            }
        }
        Ok(out)
    }
}

pub(crate) fn duality_sign(m: usize, i: usize) -> i64 {
    if (m - 1 - i).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureEntry {
    pub index: usize,
    /// `closed` for the top form, `ideal` for the others.
    pub kind: &'static str,
    pub verdict: Option<ZeroVerdict>,
    pub max_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub entries: Vec<ClosureEntry>,
    pub passed: bool,
}

/// `dω_top = 0` symbolically and `dω_i ∧ ω_{i+1} ∧ … ∧ ω_top = 0` at the
/// samples, relative to the product of the factor norms.
pub fn certify_triangular_closure(
    forms: &[DifferentialForm],
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<ClosureReport, PfaffianError> {
    let mut entries = Vec::new();
    let top = forms.len();
    for i in (1..=top).rev() {
        let dw = forms[i - 1].d();
        if i == top {
            let v = dw.zero_verdict();
            entries.push(ClosureEntry {
                index: i,
                kind: "closed",
                verdict: Some(v),
                max_residual: 0.0,
                passed: v.is_zero(),
            });
            continue;
        }
        let mut worst: f64 = 0.0;
        for x in samples {
            let p = forms[i - 1].chart().point(x);
            let mut acc = dw.eval(&p)?;
            let mut scale = acc.norm();
            for w in &forms[i..] {
                let wv = w.eval(&p)?;
                scale *= wv.norm();
                acc = acc.wedge(&wv);
            }
            worst = worst.max(acc.max_abs() / scale.max(1.0));
        }
        entries.push(ClosureEntry {
            index: i,
            kind: "ideal",
            verdict: None,
            max_residual: worst,
            passed: worst <= tol,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(ClosureReport { entries, passed })
}

impl PfaffianSet {
    pub fn certify_closure(&self, tol: f64) -> Result<ClosureReport, PfaffianError> {
        certify_triangular_closure(&self.forms, &self.samples, tol)
    }
}

/// A system in action-angle form: chart `(Q, P)`, `H` and `F` functions of
/// `P` only, `g = identity`.
pub fn action_angle_system(name: &str, hamiltonian: Expr, integrals: Vec<Expr>) -> HamiltonianSystem {
    let n = integrals.len();
    let q: Vec<String> = (1..=n).map(|i| format!("Q{i}")).collect();
    let p: Vec<String> = (1..=n).map(|i| format!("P{i}")).collect();
    let chart = Chart::phase(&q, &p, false).expect("distinct names");
    HamiltonianSystem::new(name, chart, hamiltonian, integrals).with_g_matrix(Matrix::identity(n))
}

/// Determinant of `∂(rows)/∂(cols)`; the empty determinant is 1.
pub(crate) fn jacobian_det(rows: &[&Expr], cols: &[&str]) -> Expr {
    if rows.is_empty() {
        return Expr::one();
    }
    Matrix::from_fn(rows.len(), cols.len(), |i, j| rows[i].diff(cols[j])).det()
}

/// Closed-form Pfaffian set of an action-angle system on `(t, Q, P)`:
/// `λ = (−1)^n |∂F/∂P|`, `ω_{n+k} = (−1)^{n+k+1} dP_k` and
/// `ω_k = ((−1)^n/λ)(|∂(H, F_{≠k})/∂P| dt + Σ_j (−1)^j |∂F_{≠k}/∂P_{≠j}| dQ_j)`.
pub fn action_angle_pfaffians(sys: &HamiltonianSystem) -> Result<PfaffianSet, PfaffianError> {
    let n = sys.dof();
    let chart = sys.extended_chart();
    let p: Vec<&str> = sys.chart.p_names().iter().map(|s| s.as_str()).collect();
    let q_idx: Vec<usize> = sys.chart.q_names().iter().map(|s| chart.index_of(s).unwrap()).collect();
    let p_idx: Vec<usize> = p.iter().map(|s| chart.index_of(s).unwrap()).collect();
    let f: Vec<&Expr> = sys.integrals.iter().collect();
    let sign_n = if n.is_multiple_of(2) { 1 } else { -1 };
    let lambda = (sign_n * jacobian_det(&f, &p)).simplify();
    if is_zero(&lambda).is_zero() {
        return Err(PfaffianError::SingularJacobian);
    }
    let mut forms = Vec::with_capacity(2 * n);
    for k in 0..n {
        let others: Vec<&Expr> = f.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, e)| *e).collect();
        let mut rows = vec![&sys.hamiltonian];
        rows.extend(others.iter().copied());
        let pref = Expr::int(sign_n) / &lambda;
        let mut w = DifferentialForm::zero(&chart, 1);
        w.insert(vec![0], (&pref * jacobian_det(&rows, &p)).simplify());
        for j in 0..n {
            let cols: Vec<&str> = p.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, s)| *s).collect();
            let sj = if (j + 1) % 2 == 0 { 1 } else { -1 };
            w.insert(vec![q_idx[j]], (sj * &pref * jacobian_det(&others, &cols)).simplify());
        }
        forms.push(prune(&w));
    }
    for (k, &pi) in p_idx.iter().enumerate() {
        let s = if (n + k + 2).is_multiple_of(2) { 1 } else { -1 };
        let mut w = DifferentialForm::zero(&chart, 1);
        w.insert(vec![pi], Expr::int(s));
        forms.push(w);
    }
    let (fields, mut labels) = structure_fields(sys)?;
    labels.truncate(2 * n + 1);
    let annihilation =
        forms.iter().map(|w| Ok(is_zero(&w.apply(&[&fields[0]])?))).collect::<Result<Vec<_>, PfaffianError>>()?;
    Ok(PfaffianSet {
        embedding: chart.names().iter().map(|s| Expr::sym(s)).collect(),
        chart,
        lambda,
        forms,
        labels,
        fields,
        samples: vec![],
        annihilation,
    })
}

#[cfg(test)]
mod tests;
