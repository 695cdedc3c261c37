use nalgebra::DMatrix;
use serde::Serialize;

use super::{fit_span, is_symmetry, singular_ratio, HamiltonianSystem, StructureError, RANK_THRESHOLD};
use crate::exterior::{lie_bracket, Chart, VectorField};
use crate::symexpr::matrix::Matrix;
use crate::symexpr::{is_zero, Expr, ZeroVerdict};

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub verdict: ZeroVerdict,
    pub passed: bool,
}

impl RelationCheck {
    pub fn new(relation: String, verdict: ZeroVerdict) -> Self {
        RelationCheck { relation, passed: verdict.is_zero(), verdict }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeStep {
    pub index: usize,
    pub field: String,
    pub independent: bool,
    pub min_singular_ratio: f64,
    pub max_residual: f64,
    pub passed: bool,
    pub failing_sample: Option<usize>,
    pub failing_bracket: Option<String>,
}

/// Span coefficients of one bracket over `X_{F_1..n}`.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientEntry {
    pub bracket: String,
    pub i: usize,
    pub j: Option<usize>,
    /// Per sample, one coefficient per `X_{F_l}`.
    pub coefficients: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub symbolic: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceCheck {
    pub min_abs_det: f64,
    pub min_singular_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvableStructureReport {
    pub passed: bool,
    pub fields: Vec<String>,
    pub tol: f64,
    pub points: Vec<Vec<f64>>,
    pub cascade: Vec<CascadeStep>,
    pub relations: Vec<RelationCheck>,
    pub f_table: Vec<CoefficientEntry>,
    pub h_table: Vec<CoefficientEntry>,
    /// Largest residual relative to `max(1, |target|)`.
    pub max_residual: f64,
    pub independence: Option<IndependenceCheck>,
    pub violations: Vec<String>,
}

impl SolvableStructureReport {
    pub(crate) fn empty(fields: Vec<String>, samples: &[Vec<f64>], tol: f64) -> Self {
        SolvableStructureReport {
            passed: false,
            fields,
            tol,
            points: samples.to_vec(),
            cascade: vec![],
            relations: vec![],
            f_table: vec![],
            h_table: vec![],
            max_residual: 0.0,
            independence: None,
            violations: vec![],
        }
    }

    pub(crate) fn finish(&mut self) {
        let mut violations = Vec::new();
        for s in &self.cascade {
            self.max_residual = self.max_residual.max(s.max_residual);
            if !s.passed {
                let what = if !s.independent {
                    "not independent of the earlier fields".to_string()
                } else {
                    format!(
                        "{} is not in the span of the earlier fields",
                        s.failing_bracket.as_deref().unwrap_or("a bracket")
                    )
                };
                violations.push(format!(
                    "step {} ({}): {} at sample {}",
                    s.index,
                    s.field,
                    what,
                    s.failing_sample.unwrap_or(0)
                ));
            }
        }
        for r in &self.relations {
            if !r.passed {
                violations.push(format!("{} = 0 fails ({:?})", r.relation, r.verdict));
            }
        }
        for e in self.f_table.iter().chain(&self.h_table) {
            self.max_residual = self.max_residual.max(e.max_residual);
            if e.max_residual > self.tol {
                violations.push(format!("{} not in span of X_F (residual {:e})", e.bracket, e.max_residual));
            }
        }
        if let Some(ind) = &self.independence {
            if !ind.passed {
                violations.push(format!("fields dependent (min |det| {:e})", ind.min_abs_det));
            }
        }
        self.passed = violations.is_empty();
        self.violations = violations;
    }

    /// The table entry for `[X_{G_i}, X_{F_j}]` (1-based).
    pub fn f_entry(&self, i: usize, j: usize) -> Option<&CoefficientEntry> {
        self.f_table.iter().find(|e| e.i == i && e.j == Some(j))
    }

    /// The table entry for `[X_{G_i}, A]` (1-based).
    pub fn h_entry(&self, i: usize) -> Option<&CoefficientEntry> {
        self.h_table.iter().find(|e| e.i == i)
    }
}

pub(crate) fn cascade(
    fields: &[VectorField],
    labels: &[String],
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<CascadeStep>, StructureError> {
    let mut steps = Vec::new();
    for k in 1..fields.len() {
        let v = is_symmetry(&fields[k], &fields[..k], samples, tol)?;
        steps.push(CascadeStep {
            index: k,
            field: labels[k].clone(),
            independent: v.independent,
            min_singular_ratio: v.min_singular_ratio,
            max_residual: v.max_residual,
            passed: v.passed,
            failing_sample: v.failing_sample,
            failing_bracket: v.failing_bracket.map(|b| format!("[{},{}]", labels[k], labels[b])),
        });
    }
    Ok(steps)
}

fn fit_table(
    label: String,
    i: usize,
    j: Option<usize>,
    target: &VectorField,
    basis: &[VectorField],
    samples: &[Vec<f64>],
) -> Result<CoefficientEntry, StructureError> {
    let mut coefficients = Vec::with_capacity(samples.len());
    let mut max_residual: f64 = 0.0;
    for (s, x) in samples.iter().enumerate() {
        let p = target.chart().point(x);
        let b: Vec<Vec<f64>> = basis.iter().map(|f| f.eval(&p)).collect::<Result<_, _>>()?;
        let fit = fit_span(&target.eval(&p)?, &b)?;
        if !fit.residual.is_finite() {
            return Err(StructureError::ResidualOverflow(s));
        }
        max_residual = max_residual.max(fit.residual / fit.scale.max(1.0));
        coefficients.push(fit.coefficients);
    }
    Ok(CoefficientEntry { bracket: label, i, j, coefficients, max_residual, symbolic: None })
}

/// Assembles `{A, X_F, X_G}` on the extended chart, certifies the vanishing
/// brackets symbolically and fits the `f` and `h` coefficients at samples
/// (extended-chart points).
pub fn build_canonical_structure(
    sys: &HamiltonianSystem,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<SolvableStructureReport, StructureError> {
    if samples.is_empty() {
        return Err(StructureError::EmptySamples);
    }
    let n = sys.dof();
    let a = sys.a_field()?;
    let xf = sys.integral_fields()?;
    let xg = sys.g_fields()?;
    if xf.len() != n || xg.len() != n {
        return Err(StructureError::Count {
            what: "integrals and G-functions",
            expected: n,
            got: xf.len().min(xg.len()),
        });
    }

    let mut labels = vec!["A".to_string()];
    labels.extend((1..=n).map(|i| format!("X_F{i}")));
    labels.extend((1..=n).map(|i| format!("X_G{i}")));
    let mut report = SolvableStructureReport::empty(labels.clone(), samples, tol);

    // vanishing brackets
    let vanish = |x: &VectorField, y: &VectorField| -> Result<ZeroVerdict, StructureError> {
        Ok(lie_bracket(x, y)?.simplified().zero_verdict())
    };
    for i in 0..n {
        report.relations.push(RelationCheck::new(format!("[X_F{},A]", i + 1), vanish(&xf[i], &a)?));
        for j in i + 1..n {
            report.relations.push(RelationCheck::new(format!("[X_F{},X_F{}]", i + 1, j + 1), vanish(&xf[i], &xf[j])?));
            report.relations.push(RelationCheck::new(format!("[X_G{},X_G{}]", i + 1, j + 1), vanish(&xg[i], &xg[j])?));
        }
    }

    // independence of the full ordered set
    let mut fields = vec![a.clone()];
    fields.extend(xf.iter().cloned());
    fields.extend(xg.iter().cloned());
    let chart = a.chart().clone();
    let mut min_det = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for x in samples {
        let p = chart.point(x);
        let cols: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(&p)).collect::<Result<_, _>>()?;
        let m = DMatrix::from_fn(chart.dim(), cols.len(), |i, j| cols[j][i]);
        let ratio = singular_ratio(&m);
        if ratio <= RANK_THRESHOLD {
            return Err(StructureError::Independence { sample: x.clone(), ratio });
        }
        min_ratio = min_ratio.min(ratio);
        if m.is_square() {
            min_det = min_det.min(m.determinant().abs());
        }
    }
    report.independence = Some(IndependenceCheck { min_abs_det: min_det, min_singular_ratio: min_ratio, passed: true });

    // coefficient tables
    let symbolic = action_angle_coefficients(sys);
    for i in 0..n {
        for j in 0..n {
            let target = lie_bracket(&xg[i], &xf[j])?.simplified();
            let mut e = fit_table(format!("[X_G{},X_F{}]", i + 1, j + 1), i + 1, Some(j + 1), &target, &xf, samples)?;
            if let Some((f, _)) = &symbolic {
                e.symbolic = Some(f[i][j].iter().map(|c| c.to_string()).collect());
            }
            report.f_table.push(e);
        }
        let target = lie_bracket(&xg[i], &a)?.simplified();
        let mut e = fit_table(format!("[X_G{},A]", i + 1), i + 1, None, &target, &xf, samples)?;
        if let Some((_, h)) = &symbolic {
            e.symbolic = Some(h[i].iter().map(|c| c.to_string()).collect());
        }
        report.h_table.push(e);
    }

    report.cascade = cascade(&fields, &labels, samples, tol)?;
    report.finish();
    Ok(report)
}

type Tables = (Vec<Vec<Vec<Expr>>>, Vec<Vec<Expr>>);

/// `f^{(ij)} = (DF^{-1})ᵀ V^{(ij)}` and the analogous `h`, available when
/// the system lives in an action-angle chart: a g-matrix is given and H, F
/// depend on the momenta only.
pub(crate) fn action_angle_coefficients(sys: &HamiltonianSystem) -> Option<Tables> {
    let g = sys.g_matrix.as_ref()?;
    let q = sys.chart.q_names();
    if sys.hamiltonian.depends_on_any(q) || sys.integrals.iter().any(|f| f.depends_on_any(q)) {
        return None;
    }
    let n = sys.dof();
    let p = sys.chart.p_names();
    let df = Matrix::from_fn(n, n, |i, j| sys.integrals[i].diff(&p[j]));
    let det = df.det().simplify();
    if det.is_zero_node() {
        return None;
    }
    // (DF^T)^{-1} = adj(DF^T)/det; adj(DF^T)_{lk} = cofactor(DF^T)_{kl} = cofactor(DF)_{lk}
    let solve = |v: &[Expr]| -> Vec<Expr> {
        (0..n)
            .map(|l| {
                let s = Expr::add_all((0..n).map(|k| df.cofactor(l, k) * &v[k]).collect());
                (s / &det).simplify()
            })
            .collect()
    };
    let mut f = vec![vec![vec![]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v: Vec<Expr> = (0..n)
                .map(|k| {
                    let inner = Expr::add_all((0..n).map(|l| g.get(i, l) * sys.integrals[j].diff(&p[l])).collect());
                    -inner.diff(&p[k])
                })
                .collect();
            f[i][j] = solve(&v);
        }
    }
    let mut h = vec![vec![]; n];
    for (i, hi) in h.iter_mut().enumerate() {
        let inner = Expr::add_all((0..n).map(|k| g.get(i, k) * sys.hamiltonian.diff(&p[k])).collect());
        let v: Vec<Expr> = (0..n).map(|j| -inner.diff(&p[j])).collect();
        *hi = solve(&v);
    }
    Some((f, h))
}

#[derive(Debug, Clone, Serialize)]
pub struct GMatrixVerdict {
    pub relations: Vec<RelationCheck>,
    pub min_abs_det: f64,
    pub passed: bool,
}

/// Checks `Σ_k (g_ik ∂g_jl/∂P_k − g_jk ∂g_il/∂P_k) = 0` for all `i, j, l`
/// and `det g ≠ 0` at the samples (points in chart order).
pub fn check_g_matrix(g: &Matrix, chart: &Chart, samples: &[Vec<f64>]) -> Result<GMatrixVerdict, StructureError> {
    let n = g.rows();
    let q = chart.q_names();
    let p = chart.p_names();
    for i in 0..n {
        for j in 0..n {
            if g.get(i, j).depends_on_any(q) {
                return Err(StructureError::GDependsOnPosition(i + 1, j + 1));
            }
        }
    }
    let mut relations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let e = Expr::add_all(
                    (0..n)
                        .map(|k| g.get(i, k) * g.get(j, l).diff(&p[k]) - g.get(j, k) * g.get(i, l).diff(&p[k]))
                        .collect(),
                );
                relations.push(RelationCheck::new(format!("g({},{},{})", i + 1, j + 1, l + 1), is_zero(&e)));
            }
        }
    }
    let det = g.det();
    let mut min_abs_det = f64::INFINITY;
    if det.free_symbols().is_empty() {
        min_abs_det = det.eval(&Default::default())?.abs();
    } else {
        for x in samples {
            min_abs_det = min_abs_det.min(det.eval(&chart.point(x))?.abs());
        }
    }
    let passed = relations.iter().all(|r| r.passed) && min_abs_det > 0.0 && min_abs_det.is_finite();
    Ok(GMatrixVerdict { relations, min_abs_det, passed })
}
