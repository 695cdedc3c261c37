use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exterior::Chart;
use crate::symexpr::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("bounds for `{0}` are not ordered")]
    Bounds(String),
    #[error("expected {expected} intervals, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("negative exclusion radius")]
    Epsilon,
    #[error("rejection rate above 99% ({accepted} of {attempts} accepted)")]
    Degenerate { accepted: usize, attempts: usize },
}

/// Uniform samples in `bounds` (chart order), rejecting points where any
/// singular expression has magnitude below `eps` or cannot be evaluated.
pub fn sample_box(
    chart: &Chart,
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
    singular: &[Expr],
    eps: f64,
) -> Result<Vec<Vec<f64>>, SampleError> {
    if bounds.len() != chart.dim() {
        return Err(SampleError::Arity { expected: chart.dim(), got: bounds.len() });
    }
    for (i, (lo, hi)) in bounds.iter().enumerate() {
        if !(lo <= hi) {
            return Err(SampleError::Bounds(chart.name(i).to_string()));
        }
    }
    if eps < 0.0 {
        return Err(SampleError::Epsilon);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = 100 * count;
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= max_attempts {
            return Err(SampleError::Degenerate { accepted: out.len(), attempts });
        }
        attempts += 1;
        let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) }).collect();
        if is_regular(chart, &x, singular, eps) {
            out.push(x);
        }
    }
    Ok(out)
}

pub(crate) fn is_regular(chart: &Chart, x: &[f64], singular: &[Expr], eps: f64) -> bool {
    if singular.is_empty() {
        return true;
    }
    let p = chart.point(x);
    singular.iter().all(|s| s.eval(&p).is_ok_and(|d| d.abs() >= eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_and_determinism() {
        let chart = Chart::standard(2, false);
        let sing = vec![Expr::sym("q1") - Expr::sym("q2")];
        let b = [(-2.0, 2.0), (-2.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)];
        let a = sample_box(&chart, &b, 50, 7, &sing, 1e-2).unwrap();
        assert!(a.iter().all(|x| (x[0] - x[1]).abs() > 1e-2));
        assert_eq!(a, sample_box(&chart, &b, 50, 7, &sing, 1e-2).unwrap());
        assert!(sample_box(&chart, &b, 0, 7, &sing, 1e-2).unwrap().is_empty());
    }

    #[test]
    fn degenerate_box() {
        let chart = Chart::standard(1, false);
        let sing = vec![Expr::sym("q1")];
        let b = [(0.0, 1e-6), (0.0, 1.0)];
        assert!(matches!(sample_box(&chart, &b, 5, 1, &sing, 1e-2), Err(SampleError::Degenerate { .. })));
        assert!(sample_box(&chart, &[(1.0, 0.0), (0.0, 1.0)], 5, 1, &[], 0.0).is_err());
    }
}
