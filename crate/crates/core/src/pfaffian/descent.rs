//! Descent through the level sets `I_{m-1} = C_{m-1}, I_{m-2} = C_{m-2}, …`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::primitive::find_primitive;
use super::{prune, sample_maps, PfaffianError, PfaffianSet};
use crate::exterior::{hamiltonian_vector_field, Chart, DifferentialForm};
use crate::numeric::{time_grid, Trajectory};
use crate::structure::HamiltonianSystem;
use crate::symexpr::{isolate, CompiledExpr, Expr, Node, ZeroVerdict};

#[derive(Debug, Clone, Serialize)]
pub struct DescentLevel {
    pub index: usize,
    /// `ω_i` pulled back to the current level set.
    pub restricted: String,
    /// Constraints in force, e.g. `I4 = C4`.
    pub constraints: Vec<String>,
    pub closed: ZeroVerdict,
    pub primitive: Option<Expr>,
    pub method: Option<&'static str>,
    pub constant: String,
    /// Chart coordinate eliminated by `I_i = C_i`, with its solution.
    pub elimination: Option<(String, Expr)>,
    /// The constraint, when no coordinate could be eliminated.
    pub side_relation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentResult {
    pub chart: Chart,
    pub embedding: Vec<Expr>,
    /// Completed levels from `m − 1` down.
    pub levels: Vec<DescentLevel>,
    /// Current solution of every eliminated coordinate.
    pub eliminations: Vec<(String, Expr)>,
    pub periods: BTreeMap<usize, f64>,
    /// Reason the descent stopped early.
    pub halted: Option<String>,
}

pub(crate) fn constant_name(i: usize) -> String {
    format!("C{i}")
}

fn has_fractional_power(e: &Expr) -> bool {
    match e.node() {
        Node::Pow(b, x) => {
            x.as_number().is_none_or(|n| n.as_integer().is_none()) || has_fractional_power(b) || has_fractional_power(x)
        }
        Node::Add(xs) | Node::Mul(xs) => xs.iter().any(has_fractional_power),
        Node::Fun(_, a) => has_fractional_power(a),
        Node::Num(_) | Node::Sym(_) => false,
    }
}

/// Pullback of `w` along `y_e = φ_e(free)`.
fn restrict(w: &DifferentialForm, elim: &[(usize, Expr)]) -> DifferentialForm {
    let chart = w.chart();
    let map: BTreeMap<String, Expr> = elim.iter().map(|(i, e)| (chart.name(*i).to_string(), e.clone())).collect();
    let mut out = DifferentialForm::zero(chart, 1);
    for j in 0..chart.dim() {
        if elim.iter().any(|(i, _)| *i == j) {
            continue;
        }
        let mut c = vec![w.component(j)];
        for (e, phi) in elim {
            c.push(w.component(*e) * phi.diff(chart.name(j)));
        }
        out.insert(vec![j], Expr::add_all(c).subs(&map).simplify());
    }
    prune(&out)
}

/// Integrates `ω_{m−1}, ω_{m−2}, …` in turn, each restricted to the level
/// sets of the integrals found above it.
pub fn descend_quadratures(set: &PfaffianSet) -> Result<DescentResult, PfaffianError> {
    let chart = &set.chart;
    let m = chart.dim();
    let points = sample_maps(chart, &set.samples);
    let mut elim: Vec<(usize, Expr)> = Vec::new();
    let mut levels: Vec<DescentLevel> = Vec::new();
    let mut periods = BTreeMap::new();
    let mut halted = None;
    for i in (1..m).rev() {
        let restricted = restrict(&set.forms[i - 1], &elim);
        let closed = restricted.d().zero_verdict();
        let constraints: Vec<String> = levels.iter().map(|l| format!("I{} = {}", l.index, l.constant)).collect();
        let mut level = DescentLevel {
            index: i,
            restricted: restricted.to_string(),
            constraints,
            closed,
            primitive: None,
            method: None,
            constant: constant_name(i),
            elimination: None,
            side_relation: None,
        };
        if !closed.is_zero() {
            halted = Some(format!("ω{i} is not closed on the level set"));
            levels.push(level);
            break;
        }
        let Some(prim) = find_primitive(&restricted, &points) else {
            halted = Some(format!("no recognized primitive for ω{i}"));
            levels.push(level);
            break;
        };
        if let Some(p) = prim.period {
            periods.insert(i, p);
        }
        let c = Expr::sym(&constant_name(i));
        let solved = (0..m)
            .rev()
            .filter(|&j| Some(j) != chart.time_index() && prim.expr.depends_on(chart.name(j)))
            .find_map(|j| {
                let s = isolate(&prim.expr, &c, chart.name(j))?.simplify();
                (!has_fractional_power(&s)).then_some((j, s))
            });
        match solved {
            Some((j, s)) => {
                let var = chart.name(j).to_string();
                for (_, e) in elim.iter_mut() {
                    *e = e.subs_one(&var, &s).simplify();
                }
                elim.push((j, s.clone()));
                level.elimination = Some((var, s));
            }
            None => level.side_relation = Some(format!("{} = {}", prim.expr, c)),
        }
        level.primitive = Some(prim.expr);
        level.method = Some(prim.method);
        levels.push(level);
    }
    Ok(DescentResult {
        chart: chart.clone(),
        embedding: set.embedding.clone(),
        levels,
        eliminations: elim.into_iter().map(|(j, e)| (chart.name(j).to_string(), e)).collect(),
        periods,
        halted,
    })
}

impl DescentResult {
    pub fn is_complete(&self) -> bool {
        self.halted.is_none() && self.levels.len() + 1 == self.chart.dim()
    }

    /// `I_i` (1-based level index), if reached.
    pub fn integral(&self, i: usize) -> Option<&Expr> {
        self.levels.iter().find(|l| l.index == i)?.primitive.as_ref()
    }

    /// The constants `C_i` at a chart point, evaluated from the top level
    /// down since lower primitives involve the upper constants.
    pub fn constants_at(&self, y: &[f64]) -> Result<BTreeMap<String, f64>, PfaffianError> {
        let mut env = self.chart.point(y);
        let mut out = BTreeMap::new();
        for l in &self.levels {
            let p = l.primitive.as_ref().ok_or_else(|| PfaffianError::Halted(format!("level {}", l.index)))?;
            let v = p.eval(&env)?;
            env.insert(l.constant.clone(), v);
            out.insert(l.constant.clone(), v);
        }
        Ok(out)
    }

    /// Solution of Hamilton's equations by inverting `I_i(t, x) = C_i` with
    /// Newton's method on the RK4 time grid. Angle-like levels are matched
    /// modulo their period.
    pub fn reconstruct(
        &self,
        sys: &HamiltonianSystem,
        x0: &[f64],
        t0: f64,
        t1: f64,
        h: f64,
    ) -> Result<Trajectory, PfaffianError> {
        if !self.is_complete() {
            return Err(PfaffianError::Halted(self.halted.clone().unwrap_or_else(|| "incomplete descent".into())));
        }
        let ext = sys.extended_chart();
        let mut start = vec![t0];
        start.extend_from_slice(x0);
        let start_map = ext.point(&start);
        let y0 = self.embedding.iter().map(|e| e.eval(&start_map)).collect::<Result<Vec<_>, _>>()?;
        let consts = self.constants_at(&y0)?;
        let mut subs: BTreeMap<String, Expr> =
            self.chart.names().iter().cloned().zip(self.embedding.iter().cloned()).collect();
        subs.extend(consts.iter().map(|(k, v)| (k.clone(), Expr::float(*v))));
        let names = ext.names();
        let phase = sys.chart.names();
        let mut eqs: Vec<CompiledExpr> = Vec::new();
        let mut jac: Vec<Vec<CompiledExpr>> = Vec::new();
        let mut targets = Vec::new();
        let mut period = Vec::new();
        for l in &self.levels {
            let e = l.primitive.as_ref().unwrap().subs(&subs).simplify();
            jac.push(phase.iter().map(|v| e.diff(v).compile(names)).collect::<Result<_, _>>()?);
            eqs.push(e.compile(names)?);
            targets.push(consts[&l.constant]);
            period.push(self.periods.get(&l.index).copied());
        }
        let xh = hamiltonian_vector_field(&sys.hamiltonian, &sys.chart)?;
        let rates: Vec<CompiledExpr> = xh.coeffs().iter().map(|c| c.compile(phase)).collect::<Result<_, _>>()?;
        let ints: Vec<CompiledExpr> = sys.integrals.iter().map(|f| f.compile(phase)).collect::<Result<_, _>>()?;
        let eval_all = |fs: &[CompiledExpr], x: &[f64]| fs.iter().map(|f| f.eval(x)).collect::<Result<Vec<_>, _>>();

        let mut traj = Trajectory {
            names: phase.to_vec(),
            integral_names: (1..=sys.integrals.len()).map(|i| format!("F{i}")).collect(),
            step: h,
            times: vec![],
            states: vec![],
            rates: vec![],
            integrals: vec![],
        };
        let mut x = x0.to_vec();
        for t in time_grid(t0, t1, h) {
            let mut arg = vec![t];
            arg.extend_from_slice(&x);
            let mut ok = false;
            for _ in 0..60 {
                arg[1..].copy_from_slice(&x);
                let mut r = DVector::zeros(eqs.len());
                for (k, f) in eqs.iter().enumerate() {
                    let mut d = f.eval(&arg)? - targets[k];
                    if let Some(p) = period[k] {
                        d -= p * (d / p).round();
                    }
                    r[k] = d;
                }
                let rn = r.amax();
                let mut jm = DMatrix::zeros(eqs.len(), x.len());
                for (k, row) in jac.iter().enumerate() {
                    for (j, f) in row.iter().enumerate() {
                        jm[(k, j)] = f.eval(&arg)?;
                    }
                }
                let Some(dx) = jm.lu().solve(&(-r)) else { break };
                for (xi, di) in x.iter_mut().zip(dx.iter()) {
                    *xi += di;
                }
                let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if dx.amax() < 1e-12 * scale || rn < 1e-15 {
                    ok = true;
                    break;
                }
            }
            if !ok || x.iter().any(|v| !v.is_finite()) {
                return Err(PfaffianError::Inversion(t));
            }
            traj.times.push(t);
            traj.rates.push(eval_all(&rates, &x)?);
            traj.integrals.push(eval_all(&ints, &x)?);
            traj.states.push(x.clone());
        }
        Ok(traj)
    }
}
