use serde::Serialize;

use super::{parameter, SystemError};
use crate::exterior::hamiltonian_vector_field;
use crate::numeric::{five_point_derivative, Trajectory};
use crate::structure::HamiltonianSystem;
use crate::symexpr::{is_zero, EvalError, Expr, ZeroVerdict};

/// `re + i·im` with real symbolic parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExpr {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexExpr {
    pub fn new(re: Expr, im: Expr) -> Self {
        ComplexExpr { re, im }
    }

    pub fn zero() -> Self {
        ComplexExpr::new(Expr::zero(), Expr::zero())
    }

    pub fn add(&self, o: &ComplexExpr) -> ComplexExpr {
        ComplexExpr::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &ComplexExpr) -> ComplexExpr {
        ComplexExpr::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &ComplexExpr) -> ComplexExpr {
        ComplexExpr::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ComplexExpr {
        ComplexExpr::new(f(&self.re), f(&self.im))
    }
}

/// Square matrix of complex expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub entries: Vec<Vec<ComplexExpr>>,
}

impl ComplexMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn mul(&self, o: &ComplexMatrix) -> ComplexMatrix {
        let n = self.size();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(ComplexExpr::zero(), |acc, k| acc.add(&self.entries[i][k].mul(&o.entries[k][j])))
                    })
                    .collect()
            })
            .collect();
        ComplexMatrix { entries }
    }

    pub fn sub(&self, o: &ComplexMatrix) -> ComplexMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.sub(y)).collect())
            .collect();
        ComplexMatrix { entries }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ComplexMatrix {
        ComplexMatrix { entries: self.entries.iter().map(|r| r.iter().map(|e| e.map(&f)).collect()).collect() }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, o: &ComplexMatrix) -> ComplexMatrix {
        self.mul(o).sub(&o.mul(self))
    }

    /// Real and imaginary parts, flattened row-major.
    pub fn parts(&self) -> Vec<&Expr> {
        self.entries.iter().flatten().flat_map(|e| [&e.re, &e.im]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LaxPair {
    pub l: ComplexMatrix,
    pub m: ComplexMatrix,
}

/// Outcome of checking `dL/dt = [L, M]`.
#[derive(Debug, Clone, Serialize)]
pub struct LaxResidual {
    pub symbolic: Vec<ZeroVerdict>,
    /// Max abs deviation between a five-point derivative of `L` along a
    /// trajectory and `[L, M]`.
    pub numeric: f64,
}

/// `L_jk = p_j δ_jk + i g (1 − δ_jk)/(q_j − q_k)`,
/// `M_jj = i g Σ_{l≠j} (q_j − q_l)^-2`, `M_jk = −i g (q_j − q_k)^-2`.
pub fn cm_lax_pair(sys: &HamiltonianSystem) -> Result<LaxPair, SystemError> {
    let g = Expr::from_decimal(parameter(sys, "g")?);
    let n = sys.dof();
    let q: Vec<Expr> = sys.chart.q_names().iter().map(|s| Expr::sym(s)).collect();
    let p: Vec<Expr> = sys.chart.p_names().iter().map(|s| Expr::sym(s)).collect();
    let mut l = vec![vec![ComplexExpr::zero(); n]; n];
    let mut m = vec![vec![ComplexExpr::zero(); n]; n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                l[j][j] = ComplexExpr::new(p[j].clone(), Expr::zero());
                let s = Expr::add_all((0..n).filter(|&i| i != j).map(|i| (&q[j] - &q[i]).powi(-2)).collect());
                m[j][j] = ComplexExpr::new(Expr::zero(), &g * s);
            } else {
                let d = &q[j] - &q[k];
                l[j][k] = ComplexExpr::new(Expr::zero(), &g / &d);
                m[j][k] = ComplexExpr::new(Expr::zero(), -(&g * d.powi(-2)));
            }
        }
    }
    Ok(LaxPair { l: ComplexMatrix { entries: l }, m: ComplexMatrix { entries: m } })
}

impl LaxPair {
    /// `X_H(L) − [L, M]` entrywise.
    pub fn symbolic_defect(&self, sys: &HamiltonianSystem) -> ComplexMatrix {
        let xh = hamiltonian_vector_field(&sys.hamiltonian, &sys.chart).expect("phase chart");
        let dl = self.l.map(|e| xh.apply(e));
        dl.sub(&self.l.commutator(&self.m))
    }

    /// Checks the Lax equation symbolically and along `traj`.
    pub fn residual(&self, sys: &HamiltonianSystem, traj: &Trajectory) -> Result<LaxResidual, EvalError> {
        let defect = self.symbolic_defect(sys);
        let symbolic = defect.parts().into_iter().map(is_zero).collect();
        let l_parts: Vec<_> =
            self.l.parts().into_iter().map(|e| e.compile(sys.chart.names())).collect::<Result<_, _>>()?;
        let comm = self.l.commutator(&self.m);
        let c_parts: Vec<_> =
            comm.parts().into_iter().map(|e| e.compile(sys.chart.names())).collect::<Result<_, _>>()?;
        let series: Vec<Vec<f64>> = l_parts
            .iter()
            .map(|c| traj.states.iter().map(|x| c.eval(x)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let mut worst: f64 = 0.0;
        for i in 2..traj.len().saturating_sub(2) {
            for (k, s) in series.iter().enumerate() {
                let Some(d) = five_point_derivative(s, i, traj.step) else { continue };
                worst = worst.max((d - c_parts[k].eval(&traj.states[i])?).abs());
            }
        }
        Ok(LaxResidual { symbolic, numeric: worst })
    }
}
