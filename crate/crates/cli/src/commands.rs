use anyhow::anyhow;
use serde::Serialize;
use serde_json::json;
use solvstruct::numeric::{integrate_rk4, tabulate, IntegrationError, Rk4Options, Trajectory};
use solvstruct::pfaffian::{
    compute_pfaffian_set, descend_quadratures, extract_action_angle, integral_chart_structure,
    original_chart_structure, DescentResult, PfaffianError, PfaffianSet,
};
use solvstruct::structure::{build_canonical_structure, HamiltonianSystem, StructureError};
use solvstruct::systems::{cm_closed_form, ho_closed_form, SystemError};

use crate::system::{Catalog, Loaded, SystemFile};

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Verification or runtime failure (1).
    Failure(anyhow::Error),
    /// Unreadable or invalid input (2).
    Input(anyhow::Error),
    /// The library cannot carry out the request (3).
    Gap(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Input(_) => 2,
            CliError::Gap(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        let (CliError::Failure(e) | CliError::Input(e) | CliError::Gap(e)) = self;
        format!("{e:#}")
    }
}

impl From<StructureError> for CliError {
    fn from(e: StructureError) -> Self {
        match e {
            StructureError::Count { .. } | StructureError::Sampling(_) => CliError::Input(e.into()),
            StructureError::MissingG => CliError::Gap(e.into()),
            _ => CliError::Failure(e.into()),
        }
    }
}

impl From<PfaffianError> for CliError {
    fn from(e: PfaffianError) -> Self {
        match e {
            PfaffianError::Structure(s) => s.into(),
            PfaffianError::Halted(_) | PfaffianError::Rewrite(_) => CliError::Gap(e.into()),
            _ => CliError::Failure(e.into()),
        }
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        match e {
            IntegrationError::Step | IntegrationError::Arity { .. } => CliError::Input(e.into()),
            _ => CliError::Failure(e.into()),
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::SingularInitialPoint => CliError::Failure(e.into()),
            _ => CliError::Input(e.into()),
        }
    }
}

/// A command's output and whether it counts as a pass.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn json(value: &impl Serialize, passed: bool) -> Result<Outcome, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.into()))?;
        text.push('\n');
        Ok(Outcome { text, passed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    ClosedForm,
    Rk4,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ChartChoice {
    /// Original chart first, the integral chart when that descent halts.
    Auto,
    Original,
    Integral,
}

pub struct Settings {
    pub samples: Option<usize>,
    pub seed: u64,
    pub tol: f64,
}

const VERIFY_SAMPLES: usize = 200;
const CHART_SAMPLES: usize = 60;

pub fn verify(loaded: &Loaded, s: &Settings) -> Result<Outcome, CliError> {
    let sys = &loaded.system;
    let samples = s.samples.unwrap_or(VERIFY_SAMPLES);
    let check = sys.check(samples.clamp(1, 50), s.seed)?;
    if !check.passed {
        let report = json!({ "system": sys.name, "passed": false, "check": check, "structure": null });
        return Outcome::json(&report, false);
    }
    let points = sys.extended_samples(samples, s.seed, 1e-2)?;
    let structure = build_canonical_structure(sys, &points, s.tol)?;
    let passed = structure.passed;
    Outcome::json(&json!({ "system": sys.name, "passed": passed, "check": check, "structure": structure }), passed)
}

fn pfaffian_set(sys: &HamiltonianSystem, chart: ChartChoice, s: &Settings) -> Result<PfaffianSet, CliError> {
    let samples = s.samples.unwrap_or(CHART_SAMPLES);
    let sc = match chart {
        ChartChoice::Integral => integral_chart_structure(sys, samples, s.seed)?,
        _ => original_chart_structure(sys, samples, s.seed)?,
    };
    Ok(compute_pfaffian_set(&sc)?)
}

fn descent(
    sys: &HamiltonianSystem,
    chart: ChartChoice,
    s: &Settings,
) -> Result<(PfaffianSet, DescentResult), CliError> {
    let set = pfaffian_set(sys, chart, s)?;
    let d = descend_quadratures(&set)?;
    if chart == ChartChoice::Auto && !d.is_complete() {
        if let Ok(set2) = pfaffian_set(sys, ChartChoice::Integral, s) {
            if let Ok(d2) = descend_quadratures(&set2) {
                if d2.is_complete() {
                    return Ok((set2, d2));
                }
            }
        }
    }
    Ok((set, d))
}

pub fn pfaffian(loaded: &Loaded, chart: ChartChoice, s: &Settings) -> Result<Outcome, CliError> {
    let sys = &loaded.system;
    let (set, d) = descent(sys, chart, s)?;
    let closure = set.certify_closure(s.tol)?;
    let duality = set.duality()?;
    let passed = closure.passed && duality.iter().all(|r| r.passed);
    let report = json!({
        "system": sys.name,
        "passed": passed,
        "pfaffian": set,
        "duality": duality,
        "closure": closure,
        "descent": d,
    });
    Outcome::json(&report, passed)
}

pub fn action_angle(loaded: &Loaded, chart: ChartChoice, s: &Settings) -> Result<Outcome, CliError> {
    let sys = &loaded.system;
    let (set, d) = descent(sys, chart, s)?;
    if let Some(h) = &d.halted {
        return Err(CliError::Gap(anyhow!("quadrature descent halted: {h}")));
    }
    let aa = extract_action_angle(sys, &d, &set).map_err(|e| CliError::Gap(e.into()))?;
    let passed = aa.passed;
    Outcome::json(&json!({ "system": sys.name, "action_angle": aa }), passed)
}

pub struct Span {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

pub fn integrate(
    loaded: &Loaded,
    method: Method,
    span: &Span,
    chart: ChartChoice,
    s: &Settings,
) -> Result<Outcome, CliError> {
    let sys = &loaded.system;
    let dim = sys.chart.dim();
    if span.x0.len() != dim {
        return Err(CliError::Input(anyhow!("--x0: expected {dim} values, got {}", span.x0.len())));
    }
    if !(span.step > 0.0) || !span.step.is_finite() {
        return Err(CliError::Input(anyhow!("--step: must be positive")));
    }
    // every method refuses a singular starting point
    integrate_rk4(sys, &span.x0, span.t0, span.t0, span.step, Rk4Options::default())?;
    let traj: Trajectory = match method {
        Method::Rk4 => integrate_rk4(sys, &span.x0, span.t0, span.t1, span.step, Rk4Options::default())?,
        Method::ClosedForm => {
            let solution = match &loaded.catalog {
                Some(Catalog::Oscillators { .. }) => ho_closed_form(sys, &span.x0)?,
                Some(Catalog::CalogeroMoser { .. }) => cm_closed_form(sys, &span.x0)?,
                None => return Err(CliError::Gap(anyhow!("no closed-form solution is known for `{}`", sys.name))),
            };
            tabulate(sys, &solution, span.t0, span.t1, span.step)?
        }
        Method::Quadrature => {
            let (_, d) = descent(sys, chart, s)?;
            if let Some(h) = &d.halted {
                return Err(CliError::Gap(anyhow!("quadrature descent halted: {h}")));
            }
            d.reconstruct(sys, &span.x0, span.t0, span.t1, span.step)?
        }
    };
    Ok(Outcome { text: traj.to_csv(), passed: true })
}

pub fn export(loaded: &Loaded) -> Result<Outcome, CliError> {
    Outcome::json(&SystemFile::from_system(&loaded.system), true)
}
