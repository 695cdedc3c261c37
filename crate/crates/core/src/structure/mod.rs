//! Hamiltonian systems and solvable-structure verification.

mod canonical;
mod symmetry;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::exterior::{hamiltonian_vector_field, poisson_bracket, Chart, ExteriorError, VectorField};
use crate::numeric::sample_box;
use crate::symexpr::matrix::Matrix;
use crate::symexpr::{is_zero, EvalError, Expr, ZeroVerdict};

pub use canonical::{
    build_canonical_structure, check_g_matrix, CascadeStep, CoefficientEntry, GMatrixVerdict, IndependenceCheck,
    RelationCheck, SolvableStructureReport,
};
pub use symmetry::{
    fit_span, is_symmetry, solve_span_coefficients, verify_solvable_structure, SpanFit, SymmetryVerdict,
};

/// Smallest-to-largest singular value ratio below which vectors count as
/// dependent.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructureError {
    #[error("expected {expected} {what}, got {got}")]
    Count { what: &'static str, expected: usize, got: usize },
    #[error("integrals not in involution: {bracket} has verdict {verdict:?}")]
    Involution { bracket: String, verdict: ZeroVerdict },
    #[error("dependent vectors at sample {sample:?} (singular value ratio {ratio:e})")]
    Independence { sample: Vec<f64>, ratio: f64 },
    #[error("no samples supplied")]
    EmptySamples,
    #[error("rank-deficient basis (singular value ratio {0:e})")]
    RankDeficient(f64),
    #[error("g-matrix entry ({0},{1}) depends on a position coordinate")]
    GDependsOnPosition(usize, usize),
    #[error("no G-functions and no g-matrix in an action-angle chart")]
    MissingG,
    #[error("non-finite residual at sample {0}")]
    ResidualOverflow(usize),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// Phase-space chart, Hamiltonian, first integrals and optional data for the
/// canonical structure. Parameters are already substituted into every
/// expression.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub name: String,
    pub chart: Chart,
    pub hamiltonian: Expr,
    pub integrals: Vec<Expr>,
    pub g_functions: Option<Vec<Expr>>,
    pub g_matrix: Option<Matrix>,
    /// Distance-like expressions whose zero set is singular.
    pub singular: Vec<Expr>,
    pub parameters: BTreeMap<String, f64>,
    /// Sampling interval per phase coordinate.
    pub sample_box: Vec<(f64, f64)>,
    pub time_range: (f64, f64),
}

/// Outcome of the construction-time checks.
#[derive(Debug, Clone, Serialize)]
pub struct SystemCheck {
    pub involution: Vec<RelationCheck>,
    pub min_rank_ratio: f64,
    pub independent: bool,
    pub passed: bool,
}

impl HamiltonianSystem {
    pub fn new(name: &str, chart: Chart, hamiltonian: Expr, integrals: Vec<Expr>) -> Self {
        let dim = chart.dim();
        HamiltonianSystem {
            name: name.to_string(),
            chart,
            hamiltonian,
            integrals,
            g_functions: None,
            g_matrix: None,
            singular: Vec::new(),
            parameters: BTreeMap::new(),
            sample_box: vec![(-2.0, 2.0); dim],
            time_range: (0.0, 1.0),
        }
    }

    pub fn with_g_functions(mut self, g: Vec<Expr>) -> Self {
        self.g_functions = Some(g);
        self
    }

    pub fn with_g_matrix(mut self, g: Matrix) -> Self {
        self.g_matrix = Some(g);
        self
    }

    pub fn with_singular(mut self, s: Vec<Expr>) -> Self {
        self.singular = s;
        self
    }

    pub fn with_box(mut self, b: Vec<(f64, f64)>) -> Self {
        self.sample_box = b;
        self
    }

    pub fn with_parameters(mut self, p: BTreeMap<String, f64>) -> Self {
        self.parameters = p;
        self
    }

    pub fn dof(&self) -> usize {
        self.chart.dof()
    }

    pub fn extended_chart(&self) -> Chart {
        self.chart.extended()
    }

    /// Phase-space samples avoiding the singular sets.
    pub fn samples(&self, count: usize, seed: u64, eps: f64) -> Result<Vec<Vec<f64>>, StructureError> {
        sample_box(&self.chart, &self.sample_box, count, seed, &self.singular, eps)
            .map_err(|e| StructureError::Sampling(e.to_string()))
    }

    /// Samples on the extended chart `(t, q, p)`.
    pub fn extended_samples(&self, count: usize, seed: u64, eps: f64) -> Result<Vec<Vec<f64>>, StructureError> {
        let chart = self.extended_chart();
        let mut bounds = vec![self.time_range];
        bounds.extend(self.sample_box.iter().copied());
        sample_box(&chart, &bounds, count, seed, &self.singular, eps)
            .map_err(|e| StructureError::Sampling(e.to_string()))
    }

    /// `A = ∂_t + X_H` on the extended chart.
    pub fn a_field(&self) -> Result<VectorField, StructureError> {
        let chart = self.extended_chart();
        let mut a = hamiltonian_vector_field(&self.hamiltonian, &chart)?;
        let ti = chart.time_index().expect("extended chart has time");
        let mut coeffs = a.coeffs().to_vec();
        coeffs[ti] = Expr::one();
        a = VectorField::new(&chart, coeffs)?;
        Ok(a)
    }

    /// `X_{F_i}` on the extended chart.
    pub fn integral_fields(&self) -> Result<Vec<VectorField>, StructureError> {
        let chart = self.extended_chart();
        Ok(self.integrals.iter().map(|f| hamiltonian_vector_field(f, &chart)).collect::<Result<_, _>>()?)
    }

    /// The G-functions, built from the g-matrix as `G_i = Σ g_ij Q_j` when
    /// only the matrix is given.
    pub fn resolved_g_functions(&self) -> Result<Vec<Expr>, StructureError> {
        if let Some(g) = &self.g_functions {
            return Ok(g.clone());
        }
        let m = self.g_matrix.as_ref().ok_or(StructureError::MissingG)?;
        let q: Vec<Expr> = self.chart.q_names().iter().map(|n| Expr::sym(n)).collect();
        Ok((0..self.dof()).map(|i| Expr::add_all((0..self.dof()).map(|j| m.get(i, j) * &q[j]).collect())).collect())
    }

    pub fn g_fields(&self) -> Result<Vec<VectorField>, StructureError> {
        let chart = self.extended_chart();
        Ok(self
            .resolved_g_functions()?
            .iter()
            .map(|g| hamiltonian_vector_field(g, &chart))
            .collect::<Result<_, _>>()?)
    }

    /// Checks counts, involution and independence of the integrals.
    pub fn check(&self, samples: usize, seed: u64) -> Result<SystemCheck, StructureError> {
        let n = self.dof();
        if self.integrals.len() != n {
            return Err(StructureError::Count { what: "first integrals", expected: n, got: self.integrals.len() });
        }
        if let Some(g) = &self.g_functions {
            if g.len() != n {
                return Err(StructureError::Count { what: "G-functions", expected: n, got: g.len() });
            }
        }
        if self.sample_box.len() != self.chart.dim() {
            return Err(StructureError::Count {
                what: "sampling intervals",
                expected: self.chart.dim(),
                got: self.sample_box.len(),
            });
        }
        let mut involution = Vec::new();
        for i in 0..n {
            let b = poisson_bracket(&self.integrals[i], &self.hamiltonian, &self.chart)?;
            involution.push(RelationCheck::new(format!("{{F{},H}}", i + 1), is_zero(&b)));
            for j in i + 1..n {
                let b = poisson_bracket(&self.integrals[i], &self.integrals[j], &self.chart)?;
                involution.push(RelationCheck::new(format!("{{F{},F{}}}", i + 1, j + 1), is_zero(&b)));
            }
        }
        let pts = self.samples(samples, seed, 1e-2)?;
        let mut min_ratio = f64::INFINITY;
        for x in &pts {
            let point = self.chart.point(x);
            let mut jac = DMatrix::zeros(n, self.chart.dim());
            for (i, f) in self.integrals.iter().enumerate() {
                for (k, v) in self.chart.names().iter().enumerate() {
                    jac[(i, k)] = f.diff(v).eval(&point)?;
                }
            }
            min_ratio = min_ratio.min(singular_ratio(&jac));
        }
        let independent = min_ratio > RANK_THRESHOLD;
        let passed = independent && involution.iter().all(|r| r.passed);
        Ok(SystemCheck { involution, min_rank_ratio: min_ratio, independent, passed })
    }

    /// Like [`check`](Self::check) but turns the first failure into an error.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<(), StructureError> {
        let c = self.check(samples, seed)?;
        if let Some(r) = c.involution.iter().find(|r| !r.passed) {
            return Err(StructureError::Involution { bracket: r.relation.clone(), verdict: r.verdict });
        }
        if !c.independent {
            return Err(StructureError::Independence { sample: vec![], ratio: c.min_rank_ratio });
        }
        Ok(())
    }
}

/// Smallest over largest singular value; 0 for an all-zero matrix.
pub(crate) fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{calogero_moser_2, harmonic_oscillators};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-8 * b.abs().max(1.0)
    }

    #[test]
    fn cm_structure_coefficients() {
        let sys = calogero_moser_2(1.0).unwrap();
        let ext = sys.extended_chart();
        let pts = sys.extended_samples(40, 3, 1e-2).unwrap();
        let r = build_canonical_structure(&sys, &pts, 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.violations);
        assert!(r.max_residual < 1e-9);
        let g1f2 = r.f_entry(1, 2).unwrap();
        let g2a = r.h_entry(2).unwrap();
        for (k, x) in pts.iter().enumerate() {
            let p = ext.point(x);
            assert!(close(g1f2.coefficients[k][0], -2.0) && close(g1f2.coefficients[k][1], 0.0));
            assert!(close(g2a.coefficients[k][0], 2.0 * (p["p1"] + p["p2"])));
            assert!(close(g2a.coefficients[k][1], -2.0));
        }
    }

    #[test]
    fn ho_brackets_vanish() {
        let sys = harmonic_oscillators(2, &[1.0, 1.0], &[1.0, 2.0]).unwrap();
        let pts = sys.extended_samples(30, 4, 1e-2).unwrap();
        let r = build_canonical_structure(&sys, &pts, 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.violations);
        for e in r.f_table.iter().chain(&r.h_table) {
            assert!(e.coefficients.iter().flatten().all(|c| c.abs() < 1e-8), "{}", e.bracket);
        }
    }

    #[test]
    fn system_checks() {
        let cm = calogero_moser_2(1.0).unwrap();
        assert!(cm.check(20, 1).unwrap().passed);
        assert!(cm.validate(20, 1).is_ok());
        let chart = Chart::standard(1, false);
        let bad = HamiltonianSystem::new("bad", chart, Expr::sym("p1").powi(2), vec![Expr::sym("q1")]);
        assert!(matches!(bad.validate(10, 1), Err(StructureError::Involution { .. })));
        let fewer = HamiltonianSystem::new("few", Chart::standard(2, false), Expr::sym("p1"), vec![Expr::sym("p1")]);
        assert!(matches!(fewer.check(5, 1), Err(StructureError::Count { .. })));
    }

    #[test]
    fn symmetry_cascade() {
        let chart = Chart::new(&["x", "y"], None).unwrap();
        let dx = VectorField::coordinate(&chart, 0);
        let dy = VectorField::coordinate(&chart, 1);
        let pts = vec![vec![0.3, 0.4], vec![-1.0, 2.0]];
        assert!(verify_solvable_structure(&[dx.clone(), dy.clone()], &pts, 1e-9).unwrap().passed);
        let xdy = dy.scale(&Expr::sym("x"));
        let r = verify_solvable_structure(&[dx.clone(), xdy], &pts, 1e-9).unwrap();
        assert!(!r.passed && r.cascade[0].independent);
        let r = verify_solvable_structure(&[dx.clone(), dx.scale(&Expr::int(2))], &pts, 1e-9).unwrap();
        assert!(!r.cascade[0].independent);
        assert!(matches!(verify_solvable_structure(&[dx], &pts, 1e-9), Err(StructureError::Count { .. })));
    }

    #[test]
    fn g_matrix_conditions() {
        let chart = Chart::standard(2, false);
        let pts = vec![vec![0.1, 0.2, 0.3, 0.4]];
        assert!(check_g_matrix(&Matrix::identity(2), &chart, &pts).unwrap().passed);
        let mut g = Matrix::identity(2);
        g.set(1, 0, Expr::sym("p1"));
        assert!(!check_g_matrix(&g, &chart, &pts).unwrap().passed);
        g.set(1, 0, Expr::sym("q1"));
        assert!(matches!(check_g_matrix(&g, &chart, &pts), Err(StructureError::GDependsOnPosition(2, 1))));
    }

    #[test]
    fn action_angle_tables() {
        let q = vec!["Q1".to_string(), "Q2".to_string()];
        let p = vec!["P1".to_string(), "P2".to_string()];
        let chart = Chart::phase(&q, &p, false).unwrap();
        let (p1, p2) = (Expr::sym("P1"), Expr::sym("P2"));
        let h = p1.powi(2) + Expr::rat(1, 4) * (4 * &p2).exp();
        let f = vec![2 * &p1, 2 * p1.powi(2) + Expr::rat(1, 2) * (4 * &p2).exp()];
        let sys =
            HamiltonianSystem::new("aa", chart, h, f).with_g_matrix(Matrix::identity(2)).with_box(vec![(0.2, 1.0); 4]);
        let pts = sys.extended_samples(10, 2, 1e-2).unwrap();
        let r = build_canonical_structure(&sys, &pts, 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.violations);
        assert!(r.f_entry(1, 1).unwrap().symbolic.is_some());
    }
}
