//! Action-angle variables by comparing computed Pfaffian forms with the
//! action-angle template.

use std::collections::BTreeMap;

use serde::Serialize;

use super::descent::DescentResult;
use super::fit::express_in;
use super::primitive::find_primitive;
use super::{
    action_angle_pfaffians, action_angle_system, normalize_form, prune, sample_maps, PfaffianError, PfaffianSet,
    FIT_EPS,
};
use crate::exterior::{poisson_bracket, DifferentialForm};
use crate::structure::{HamiltonianSystem, RelationCheck};
use crate::symexpr::matrix::Matrix;
use crate::symexpr::{is_zero, isolate, Expr};

#[derive(Debug, Clone, Serialize)]
pub struct ActionAngle {
    /// `P_k(q, p)`.
    pub actions: Vec<Expr>,
    /// `Q_k(q, p)`.
    pub angles: Vec<Expr>,
    /// `H(P)`.
    pub hamiltonian: Expr,
    /// `F_k(P)`.
    pub integrals: Vec<Expr>,
    /// Computed `dt` coefficients against the template.
    pub dt_checks: Vec<RelationCheck>,
    pub canonicity: Vec<RelationCheck>,
    pub passed: bool,
}

fn action_symbols(n: usize) -> Vec<Expr> {
    (1..=n).map(|k| Expr::sym(&format!("P{k}"))).collect()
}

/// Solves `P_k(y) = P_k` for the `F` coordinates of the chart one equation
/// at a time.
fn invert_through_chart(set: &PfaffianSet, actions_y: &[Expr], n: usize) -> Option<Vec<Expr>> {
    let fnames: Vec<String> = (1..=n).map(|k| format!("F{k}")).collect();
    if !fnames.iter().all(|f| set.chart.index_of(f).is_some()) {
        return None;
    }
    let syms = action_symbols(n);
    let mut solved: BTreeMap<String, Expr> = BTreeMap::new();
    let mut used = vec![false; n];
    while solved.len() < n {
        let mut progress = false;
        for k in 0..n {
            if used[k] {
                continue;
            }
            let e = actions_y[k].subs(&solved).simplify();
            let open: Vec<&String> = fnames.iter().filter(|f| !solved.contains_key(*f) && e.depends_on(f)).collect();
            if open.len() != 1 {
                continue;
            }
            let var = open[0].clone();
            let s = isolate(&e, &syms[k], &var)?.simplify();
            for v in solved.values_mut() {
                *v = v.subs_one(&var, &s).simplify();
            }
            solved.insert(var, s);
            used[k] = true;
            progress = true;
        }
        if !progress {
            return None;
        }
    }
    Some(fnames.iter().map(|f| solved[f].clone()).collect())
}

/// Reads `P_k` from the exact forms `ω_{n+k}`, rewrites `H` and `F` in `P`,
/// builds the template forms and integrates `dQ = b⁻¹ (ω − a dt)`.
pub fn extract_action_angle(
    sys: &HamiltonianSystem,
    descent: &DescentResult,
    set: &PfaffianSet,
) -> Result<ActionAngle, PfaffianError> {
    let n = sys.dof();
    let chart = &set.chart;
    let to_phase: BTreeMap<String, Expr> = chart.names().iter().cloned().zip(set.embedding.iter().cloned()).collect();
    let points = sample_maps(chart, &set.samples);

    let mut actions_y = Vec::with_capacity(n);
    for k in 1..=n {
        let sign = if (n + k + 1).is_multiple_of(2) { 1 } else { -1 };
        let from_descent =
            descent.integral(n + k).filter(|e| !e.free_symbols().iter().any(|s| !chart.names().contains(s)));
        let prim = match from_descent {
            Some(e) => e.clone(),
            None => {
                find_primitive(&set.forms[n + k - 1], &points)
                    .ok_or_else(|| PfaffianError::Mismatch(format!("ω{} has no recognized primitive", n + k)))?
                    .expr
            }
        };
        actions_y.push((sign * prim).simplify());
    }
    let actions: Vec<Expr> = actions_y.iter().map(|a| a.subs(&to_phase).simplify()).collect();
    let syms = action_symbols(n);
    let ext = sys.extended_chart();
    let orig_points: Vec<BTreeMap<String, f64>> =
        sys.extended_samples(150, 11, FIT_EPS)?.iter().map(|x| ext.point(x)).collect();
    let back: BTreeMap<String, Expr> = (1..=n).map(|k| format!("P{k}")).zip(actions.iter().cloned()).collect();
    let agrees = |target: &Expr, in_p: &Expr| is_zero(&(target - in_p.subs(&back))).is_zero();

    let integrals =
        match sys.integrals.iter().map(|f| express_in(f, &actions, &syms, &orig_points, 3)).collect::<Option<Vec<_>>>()
        {
            Some(v) => v,
            None => invert_through_chart(set, &actions_y, n)
                .ok_or_else(|| PfaffianError::Mismatch("F is not expressible in the actions".into()))?,
        };
    if !sys.integrals.iter().zip(&integrals).all(|(f, fp)| agrees(f, fp)) {
        return Err(PfaffianError::Mismatch("F(P) does not reproduce F".into()));
    }
    let hamiltonian = match express_in(&sys.hamiltonian, &actions, &syms, &orig_points, 3) {
        Some(h) => h,
        None => {
            let fsyms: Vec<Expr> = (1..=n).map(|k| Expr::sym(&format!("F{k}"))).collect();
            let hf = express_in(&sys.hamiltonian, &sys.integrals, &fsyms, &orig_points, 3)
                .ok_or_else(|| PfaffianError::Mismatch("H is not expressible in the actions".into()))?;
            let fmap: BTreeMap<String, Expr> =
                (1..=n).map(|k| format!("F{k}")).zip(integrals.iter().cloned()).collect();
            hf.subs(&fmap).simplify()
        }
    };
    if !agrees(&sys.hamiltonian, &hamiltonian) {
        return Err(PfaffianError::Mismatch("H(P) does not reproduce H".into()));
    }

    let aa = action_angle_system("action-angle", hamiltonian.clone(), integrals.clone());
    let template = action_angle_pfaffians(&aa)?;
    let p_of_y: BTreeMap<String, Expr> = (1..=n).map(|k| format!("P{k}")).zip(actions_y.iter().cloned()).collect();
    let ti = chart.time_index().ok_or_else(|| PfaffianError::Mismatch("chart has no time coordinate".into()))?;
    let tq: Vec<usize> = (1..=n).map(|j| template.chart.index_of(&format!("Q{j}")).unwrap()).collect();
    let mut dt_checks = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let b = Matrix::from_fn(n, n, |k, j| template.forms[k].component(tq[j]).subs(&p_of_y).simplify());
    for k in 0..n {
        let computed = &set.forms[k];
        let a = template.forms[k].component(0).subs(&p_of_y);
        dt_checks
            .push(RelationCheck::new(format!("ω{} dt coefficient", k + 1), is_zero(&(computed.component(ti) - &a))));
        let mut bk = computed.clone();
        bk.insert(vec![ti], -computed.component(ti));
        beta.push(prune(&bk));
    }
    let det = b.det();
    if is_zero(&det).is_zero() {
        return Err(PfaffianError::SingularJacobian);
    }
    let mut angles_y = Vec::with_capacity(n);
    for j in 0..n {
        let mut dq = DifferentialForm::zero(chart, 1);
        for (k, bk) in beta.iter().enumerate() {
            let coef = if n == 1 { det.recip() } else { b.cofactor(k, j) / &det };
            dq = dq.add(&bk.scale(&coef))?;
        }
        let dq = normalize_form(&dq, &points);
        let prim = find_primitive(&dq, &points)
            .ok_or_else(|| PfaffianError::Mismatch(format!("dQ{} = {dq} has no recognized primitive", j + 1)))?;
        angles_y.push(prim.expr);
    }
    let angles: Vec<Expr> = angles_y.iter().map(|q| q.subs(&to_phase).simplify()).collect();

    let mut canonicity = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { 1 } else { 0 };
            let qp = poisson_bracket(&angles[i], &actions[j], &sys.chart)?;
            canonicity.push(RelationCheck::new(format!("{{Q{}, P{}}} = {d}", i + 1, j + 1), is_zero(&(qp - d))));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let qq = poisson_bracket(&angles[i], &angles[j], &sys.chart)?;
            canonicity.push(RelationCheck::new(format!("{{Q{}, Q{}}} = 0", i + 1, j + 1), is_zero(&qq)));
            let pp = poisson_bracket(&actions[i], &actions[j], &sys.chart)?;
            canonicity.push(RelationCheck::new(format!("{{P{}, P{}}} = 0", i + 1, j + 1), is_zero(&pp)));
        }
    }
    let passed = dt_checks.iter().chain(&canonicity).all(|c| c.verdict.is_zero());
    Ok(ActionAngle { actions, angles, hamiltonian, integrals, dt_checks, canonicity, passed })
}
