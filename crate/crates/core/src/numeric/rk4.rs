use std::fmt::Write as _;

use serde::Serialize;

use crate::structure::HamiltonianSystem;
use crate::symexpr::{CompiledExpr, EvalError};

#[derive(Debug, Clone, Copy)]
pub struct Rk4Options {
    /// Exclusion radius around the singular sets.
    pub eps: f64,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Rk4Options { eps: 1e-2 }
    }
}

/// Time-stamped phase-space samples with first-integral values.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub integral_names: Vec<String>,
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Time derivatives of the states, used for Hermite interpolation.
    pub rates: Vec<Vec<f64>>,
    pub integrals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum IntegrationError {
    #[error("step size must be positive")]
    Step,
    #[error("expected {expected} initial values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("initial point lies on a singular set")]
    SingularStart,
    #[error("trajectory entered a singular neighborhood at t = {t}")]
    Singular { t: f64, partial: Box<Trajectory> },
    #[error("time {0} outside the trajectory range")]
    OutOfRange(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Anything that yields a phase-space state at a time.
pub trait StateFunction {
    fn state_at(&self, t: f64) -> Result<Vec<f64>, IntegrationError>;
}

struct Rhs {
    field: Vec<CompiledExpr>,
    integrals: Vec<CompiledExpr>,
    singular: Vec<CompiledExpr>,
}

impl Rhs {
    fn new(sys: &HamiltonianSystem) -> Result<Rhs, EvalError> {
        let chart = &sys.chart;
        let names = chart.names();
        let n = sys.dof();
        let mut field = Vec::with_capacity(2 * n);
        for p in chart.p_names() {
            field.push(sys.hamiltonian.diff(p).compile(names)?);
        }
        for q in chart.q_names() {
            field.push((-sys.hamiltonian.diff(q)).compile(names)?);
        }
        let integrals = sys.integrals.iter().map(|f| f.compile(names)).collect::<Result<_, _>>()?;
        let singular = sys.singular.iter().map(|s| s.compile(names)).collect::<Result<_, _>>()?;
        Ok(Rhs { field, integrals, singular })
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.field.iter().map(|f| f.eval(x)).collect()
    }

    fn integrals(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.integrals.iter().map(|f| f.eval(x)).collect()
    }

    fn regular(&self, x: &[f64], eps: f64) -> bool {
        self.singular.iter().all(|s| s.eval(x).is_ok_and(|d| d.abs() >= eps))
    }
}

/// Classical fixed-step RK4 from `t0` to `t1`; the last step is shortened
/// so that the final time equals `t1` exactly.
pub fn integrate_rk4(
    sys: &HamiltonianSystem,
    x0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    opts: Rk4Options,
) -> Result<Trajectory, IntegrationError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegrationError::Step);
    }
    let dim = sys.chart.dim();
    if x0.len() != dim {
        return Err(IntegrationError::Arity { expected: dim, got: x0.len() });
    }
    let rhs = Rhs::new(sys)?;
    if !rhs.regular(x0, opts.eps) {
        return Err(IntegrationError::SingularStart);
    }
    let mut traj = Trajectory {
        names: sys.chart.names().to_vec(),
        integral_names: (1..=sys.integrals.len()).map(|i| format!("F{i}")).collect(),
        step: h,
        times: vec![t0],
        states: vec![x0.to_vec()],
        rates: vec![rhs.eval(x0)?],
        integrals: vec![rhs.integrals(x0)?],
    };
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let steps = (span / h).floor() as usize;
    let mut x = x0.to_vec();
    let mut t = t0;
    let total = if (steps as f64) * h < span * (1.0 - 1e-14) { steps + 1 } else { steps };
    for k in 0..total {
        let dt = if k + 1 == total { t1 - t } else { dir * h };
        if dt == 0.0 {
            break;
        }
        x = rk4_step(&rhs, &x, dt)?;
        t = if k + 1 == total { t1 } else { t0 + dir * h * (k + 1) as f64 };
        if !rhs.regular(&x, opts.eps) {
            return Err(IntegrationError::Singular { t, partial: Box::new(traj) });
        }
        traj.times.push(t);
        traj.rates.push(rhs.eval(&x)?);
        traj.integrals.push(rhs.integrals(&x)?);
        traj.states.push(x.clone());
    }
    Ok(traj)
}

fn rk4_step(rhs: &Rhs, x: &[f64], dt: f64) -> Result<Vec<f64>, EvalError> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + s * v).collect() };
    let k1 = rhs.eval(x)?;
    let k2 = rhs.eval(&axpy(x, dt / 2.0, &k1))?;
    let k3 = rhs.eval(&axpy(x, dt / 2.0, &k2))?;
    let k4 = rhs.eval(&axpy(x, dt, &k3))?;
    Ok((0..x.len()).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (f64, &[f64]) {
        (*self.times.last().unwrap(), self.states.last().unwrap())
    }

    /// `|F_k(t) − F_k(t0)|` per step and integral.
    pub fn drift(&self) -> Vec<Vec<f64>> {
        let f0 = &self.integrals[0];
        self.integrals.iter().map(|f| f.iter().zip(f0).map(|(a, b)| (a - b).abs()).collect()).collect()
    }

    /// Largest drift relative to `max(1, |F_k(t0)|)`, per unit of elapsed
    /// time (elapsed times below one count as one).
    pub fn drift_rate(&self) -> f64 {
        let t0 = self.times[0];
        let f0 = &self.integrals[0];
        let mut worst: f64 = 0.0;
        for (i, f) in self.integrals.iter().enumerate() {
            let dt = (self.times[i] - t0).abs().max(1.0);
            for (a, b) in f.iter().zip(f0) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0) / dt);
            }
        }
        worst
    }

    /// Cubic Hermite interpolation between stored steps.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>, IntegrationError> {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        let (lo, hi) = if first <= last { (first, last) } else { (last, first) };
        let slack = 1e-12 * hi.abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(IntegrationError::OutOfRange(t));
        }
        let forward = first <= last;
        let idx = self.times.partition_point(|&s| if forward { s < t } else { s > t });
        if idx < self.times.len() && self.times[idx] == t {
            return Ok(self.states[idx].clone());
        }
        let i = idx.clamp(1, self.times.len() - 1) - 1;
        if self.times.len() == 1 {
            return Ok(self.states[0].clone());
        }
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let hseg = tb - ta;
        let s = (t - ta) / hseg;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        Ok((0..self.states[i].len())
            .map(|k| {
                h00 * self.states[i][k]
                    + h10 * hseg * self.rates[i][k]
                    + h01 * self.states[i + 1][k]
                    + h11 * hseg * self.rates[i + 1][k]
            })
            .collect())
    }

    /// CSV with header `t,<coordinates>,<integrals>`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        header.extend(self.integral_names.iter().cloned());
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.times.len() {
            let _ = write!(out, "{:.16e}", self.times[i]);
            for v in self.states[i].iter().chain(&self.integrals[i]) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

impl StateFunction for Trajectory {
    fn state_at(&self, t: f64) -> Result<Vec<f64>, IntegrationError> {
        self.interpolate(t)
    }
}

/// `t0, t0 ± h, …` with a shortened last step ending exactly at `t1`.
pub fn time_grid(t0: f64, t1: f64, h: f64) -> Vec<f64> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let steps = (span / h).floor() as usize;
    let total = if (steps as f64) * h < span * (1.0 - 1e-14) { steps + 1 } else { steps };
    let mut out = vec![t0];
    for k in 0..total {
        out.push(if k + 1 == total { t1 } else { t0 + dir * h * (k + 1) as f64 });
    }
    out
}

/// Samples `f` on the RK4 time grid, recording rates and integral values.
pub fn tabulate(
    sys: &HamiltonianSystem,
    f: &dyn StateFunction,
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Trajectory, IntegrationError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegrationError::Step);
    }
    let rhs = Rhs::new(sys)?;
    let mut traj = Trajectory {
        names: sys.chart.names().to_vec(),
        integral_names: (1..=sys.integrals.len()).map(|i| format!("F{i}")).collect(),
        step: h,
        times: vec![],
        states: vec![],
        rates: vec![],
        integrals: vec![],
    };
    for t in time_grid(t0, t1, h) {
        let x = f.state_at(t)?;
        traj.times.push(t);
        traj.rates.push(rhs.eval(&x)?);
        traj.integrals.push(rhs.integrals(&x)?);
        traj.states.push(x);
    }
    Ok(traj)
}

/// Max sup-norm state difference over `times`.
pub fn compare_trajectories(a: &Trajectory, b: &dyn StateFunction, times: &[f64]) -> Result<f64, IntegrationError> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let x = a.interpolate(t)?;
        let y = b.state_at(t)?;
        for (u, v) in x.iter().zip(&y) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}
