//! Exterior calculus on a single coordinate chart.

mod field;
mod form;

use std::collections::BTreeMap;

use serde::Serialize;

pub use field::{hamiltonian_vector_field, lie_bracket, poisson_bracket, VectorField};
pub use form::{DifferentialForm, NumericForm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExteriorError {
    #[error("chart is not a phase-space chart")]
    NotPhaseSpace,
    #[error("chart mismatch")]
    ChartMismatch,
    #[error("degree {0} exceeds chart dimension {1}")]
    DegreeOverflow(usize, usize),
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("expected {expected} coefficients, got {got}")]
    Arity { expected: usize, got: usize },
}

/// Ordered coordinate names with an optional time coordinate and, for
/// phase-space charts, the `(q, p)` pairing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chart {
    names: Vec<String>,
    time: Option<usize>,
    dof: usize,
    phase: bool,
}

impl Chart {
    /// Generic chart without a phase-space pairing.
    pub fn new<S: AsRef<str>>(names: &[S], time: Option<usize>) -> Result<Chart, ExteriorError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ExteriorError::DuplicateName(n.clone()));
            }
        }
        Ok(Chart { names, time, dof: 0, phase: false })
    }

    /// Phase-space chart `(t?, q_1..q_n, p_1..p_n)`.
    pub fn phase<S: AsRef<str>>(q: &[S], p: &[S], with_time: bool) -> Result<Chart, ExteriorError> {
        assert_eq!(q.len(), p.len(), "q and p must pair up");
        let mut names: Vec<String> = Vec::new();
        if with_time {
            names.push("t".to_string());
        }
        names.extend(q.iter().map(|s| s.as_ref().to_string()));
        names.extend(p.iter().map(|s| s.as_ref().to_string()));
        let mut c = Chart::new(&names, with_time.then_some(0))?;
        c.dof = q.len();
        c.phase = true;
        Ok(c)
    }

    /// `(q1..qn, p1..pn)`, optionally preceded by `t`.
    pub fn standard(n: usize, with_time: bool) -> Chart {
        let q: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        let p: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
        Chart::phase(&q, &p, with_time).expect("standard names are unique")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time
    }

    pub fn is_phase(&self) -> bool {
        self.phase
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    fn offset(&self) -> usize {
        usize::from(self.time.is_some())
    }

    pub fn q_index(&self, i: usize) -> usize {
        self.offset() + i
    }

    pub fn p_index(&self, i: usize) -> usize {
        self.offset() + self.dof + i
    }

    pub fn q_names(&self) -> &[String] {
        &self.names[self.offset()..self.offset() + self.dof]
    }

    pub fn p_names(&self) -> &[String] {
        &self.names[self.offset() + self.dof..self.offset() + 2 * self.dof]
    }

    /// The same phase space with a leading time coordinate.
    pub fn extended(&self) -> Chart {
        if self.time.is_some() {
            return self.clone();
        }
        let mut names = vec!["t".to_string()];
        names.extend(self.names.iter().cloned());
        Chart { names, time: Some(0), dof: self.dof, phase: self.phase }
    }

    /// The phase space without the time coordinate.
    pub fn spatial(&self) -> Chart {
        match self.time {
            None => self.clone(),
            Some(ti) => {
                let names = self.names.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, n)| n.clone()).collect();
                Chart { names, time: None, dof: self.dof, phase: self.phase }
            }
        }
    }

    /// Binds coordinate values given in chart order.
    pub fn point(&self, values: &[f64]) -> BTreeMap<String, f64> {
        assert_eq!(values.len(), self.dim(), "point arity");
        self.names.iter().cloned().zip(values.iter().copied()).collect()
    }

    pub(crate) fn require_phase(&self) -> Result<(), ExteriorError> {
        if self.phase {
            Ok(())
        } else {
            Err(ExteriorError::NotPhaseSpace)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layout() {
        let c = Chart::standard(2, true);
        assert_eq!(c.names(), ["t", "q1", "q2", "p1", "p2"]);
        assert_eq!(c.q_index(1), 2);
        assert_eq!(c.p_index(0), 3);
        assert_eq!(c.spatial().names(), ["q1", "q2", "p1", "p2"]);
        assert_eq!(c.spatial().extended(), c);
        assert!(Chart::new(&["x", "x"], None).is_err());
    }
}
