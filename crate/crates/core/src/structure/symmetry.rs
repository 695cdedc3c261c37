use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{singular_ratio, SolvableStructureReport, StructureError, RANK_THRESHOLD};
use crate::exterior::{lie_bracket, VectorField};

/// Least-squares coefficients of a target in a span.
#[derive(Debug, Clone, Serialize)]
pub struct SpanFit {
    pub coefficients: Vec<f64>,
    pub residual: f64,
    /// Norm of the target, the scale for relative residual tests.
    pub scale: f64,
}

impl SpanFit {
    pub fn within(&self, tol: f64) -> bool {
        self.residual <= tol * self.scale.max(1.0)
    }
}

/// Solves `target ≈ Σ c_l basis_l` in the least-squares sense.
pub fn fit_span(target: &[f64], basis: &[Vec<f64>]) -> Result<SpanFit, StructureError> {
    let dim = target.len();
    let t = DVector::from_column_slice(target);
    if basis.is_empty() {
        return Ok(SpanFit { coefficients: vec![], residual: t.norm(), scale: t.norm() });
    }
    let b = DMatrix::from_fn(dim, basis.len(), |i, j| basis[j][i]);
    let ratio = singular_ratio(&b);
    if ratio <= RANK_THRESHOLD || basis.len() > dim {
        return Err(StructureError::RankDeficient(ratio));
    }
    // unit columns plus one refinement step keep small coefficients accurate
    // next to large ones
    let norms: Vec<f64> = b.column_iter().map(|c| c.norm()).collect();
    let scaled = DMatrix::from_fn(dim, basis.len(), |i, j| b[(i, j)] / norms[j]);
    let svd = scaled.svd(true, true);
    let mut c = svd.solve(&t, 0.0).map_err(|_| StructureError::RankDeficient(ratio))?;
    let r = &t - &b * c.component_div(&DVector::from_column_slice(&norms));
    c += svd.solve(&r, 0.0).map_err(|_| StructureError::RankDeficient(ratio))?;
    let c = c.component_div(&DVector::from_column_slice(&norms));
    let residual = (&b * &c - &t).norm();
    Ok(SpanFit { coefficients: c.iter().copied().collect(), residual, scale: t.norm() })
}

/// [`fit_span`] with symbolic fields evaluated at a point given in chart
/// order.
pub fn solve_span_coefficients(
    target: &VectorField,
    basis: &[VectorField],
    point: &[f64],
) -> Result<SpanFit, StructureError> {
    let p = target.chart().point(point);
    let t = target.eval(&p)?;
    let b: Vec<Vec<f64>> = basis.iter().map(|x| x.eval(&p)).collect::<Result<_, _>>()?;
    fit_span(&t, &b)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryVerdict {
    pub passed: bool,
    pub independent: bool,
    pub min_singular_ratio: f64,
    pub max_residual: f64,
    /// `[sample][generator]` -> span coefficients of `[Y, A_generator]`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub failing_sample: Option<usize>,
    pub failing_bracket: Option<usize>,
}

/// Checks pointwise independence of `generators ∪ {y}` and that each
/// `[y, A_i]` lies in the span of the generators.
pub fn is_symmetry(
    y: &VectorField,
    generators: &[VectorField],
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<SymmetryVerdict, StructureError> {
    if samples.is_empty() {
        return Err(StructureError::EmptySamples);
    }
    for g in generators {
        y.same_chart(g)?;
    }
    let brackets: Vec<VectorField> =
        generators.iter().map(|g| lie_bracket(y, g).map(|b| b.simplified())).collect::<Result<_, _>>()?;
    let mut verdict = SymmetryVerdict {
        passed: true,
        independent: true,
        min_singular_ratio: f64::INFINITY,
        max_residual: 0.0,
        coefficients: Vec::with_capacity(samples.len()),
        failing_sample: None,
        failing_bracket: None,
    };
    for (s, x) in samples.iter().enumerate() {
        let p = y.chart().point(x);
        let gens: Vec<Vec<f64>> = generators.iter().map(|g| g.eval(&p)).collect::<Result<_, _>>()?;
        let mut all = gens.clone();
        all.push(y.eval(&p)?);
        let m = DMatrix::from_fn(x.len(), all.len(), |i, j| all[j][i]);
        let ratio = if all.len() > x.len() { 0.0 } else { singular_ratio(&m) };
        verdict.min_singular_ratio = verdict.min_singular_ratio.min(ratio);
        if ratio <= RANK_THRESHOLD {
            verdict.independent = false;
            verdict.passed = false;
            verdict.failing_sample.get_or_insert(s);
            verdict.coefficients.push(vec![]);
            continue;
        }
        let mut row = Vec::with_capacity(brackets.len());
        for (k, b) in brackets.iter().enumerate() {
            let fit = fit_span(&b.eval(&p)?, &gens)?;
            if !fit.residual.is_finite() {
                return Err(StructureError::ResidualOverflow(s));
            }
            let rel = fit.residual / fit.scale.max(1.0);
            verdict.max_residual = verdict.max_residual.max(rel);
            if !fit.within(tol) && verdict.passed {
                verdict.passed = false;
                verdict.failing_sample = Some(s);
                verdict.failing_bracket = Some(k);
            }
            row.push(fit.coefficients);
        }
        verdict.coefficients.push(row);
    }
    Ok(verdict)
}

/// Cascade of [`is_symmetry`]: field `k` must be a symmetry of the span of
/// fields `0..k`.
pub fn verify_solvable_structure(
    fields: &[VectorField],
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<SolvableStructureReport, StructureError> {
    if fields.len() < 2 {
        return Err(StructureError::Count { what: "fields", expected: 2, got: fields.len() });
    }
    let labels: Vec<String> = (0..fields.len()).map(|k| format!("Y{k}")).collect();
    let mut report = SolvableStructureReport::empty(labels, samples, tol);
    report.cascade = super::canonical::cascade(fields, &report.fields, samples, tol)?;
    report.finish();
    Ok(report)
}
