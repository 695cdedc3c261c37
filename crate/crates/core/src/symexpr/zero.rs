//! Two-tier zero test: symbolic canonicalization, then random evaluation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{EvalError, Expr, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroVerdict {
    ProvenZero,
    ProvenNonzero,
    NumericallyZero,
    Unknown,
}

impl ZeroVerdict {
    /// Proven or numerically zero.
    pub fn is_zero(self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero | ZeroVerdict::NumericallyZero)
    }

    pub fn is_nonzero(self) -> bool {
        self == ZeroVerdict::ProvenNonzero
    }
}

#[derive(Clone, Debug)]
pub struct ZeroOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Default sampling interval for every free symbol.
    pub range: (f64, f64),
    /// Per-symbol overrides of `range`.
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions { samples: 32, seed: 42, tol: 1e-10, range: (-2.5, 2.5), ranges: BTreeMap::new() }
    }
}

pub fn is_zero(e: &Expr) -> ZeroVerdict {
    is_zero_with(e, &ZeroOptions::default())
}

pub fn is_zero_with(e: &Expr, opts: &ZeroOptions) -> ZeroVerdict {
    if e.is_zero_node() {
        return ZeroVerdict::ProvenZero;
    }
    if e.as_number().is_some() {
        return ZeroVerdict::ProvenNonzero;
    }
    let expanded = e.expand();
    if expanded.is_zero_node() {
        return ZeroVerdict::ProvenZero;
    }
    if expanded.as_number().is_some() {
        return ZeroVerdict::ProvenNonzero;
    }
    numeric_verdict(&expanded, opts)
}

fn numeric_verdict(e: &Expr, opts: &ZeroOptions) -> ZeroVerdict {
    let vars: Vec<String> = e.free_symbols().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut valid = 0usize;
    let mut point = vec![0.0; vars.len()];
    // allow extra draws so that domain-restricted expressions still get
    // enough valid points
    for _ in 0..opts.samples * 4 {
        if valid >= opts.samples {
            break;
        }
        for (i, v) in vars.iter().enumerate() {
            let (lo, hi) = opts.ranges.get(v).copied().unwrap_or(opts.range);
            point[i] = rng.gen_range(lo..hi);
        }
        let lookup = |name: &str| vars.iter().position(|v| v == name).map(|i| point[i]);
        match value_and_scale(e, &lookup) {
            Ok((v, mag)) => {
                valid += 1;
                if v.abs() > opts.tol * mag.max(1.0) {
                    return ZeroVerdict::ProvenNonzero;
                }
            }
            Err(_) => continue,
        }
    }
    if valid * 4 < opts.samples || valid == 0 {
        ZeroVerdict::Unknown
    } else {
        ZeroVerdict::NumericallyZero
    }
}

/// Value together with a cancellation scale: sums of magnitudes for sums,
/// products of scales for products.
pub(crate) fn value_and_scale(e: &Expr, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<(f64, f64), EvalError> {
    match e.node() {
        Node::Add(xs) => {
            let (mut v, mut m) = (0.0, 0.0);
            for x in xs {
                let (a, b) = value_and_scale(x, lookup)?;
                v += a;
                m += b;
            }
            Ok((v, m))
        }
        Node::Mul(xs) => {
            let (mut v, mut m) = (1.0, 1.0);
            for x in xs {
                let (a, b) = value_and_scale(x, lookup)?;
                v *= a;
                m *= b;
            }
            Ok((v, m))
        }
        _ => {
            let v = e.eval_with(lookup)?;
            Ok((v, v.abs()))
        }
    }
}
