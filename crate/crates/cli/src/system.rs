//! System references: catalog shorthand (`ho:…`, `cm2:…`) or a JSON file.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use solvstruct::exterior::Chart;
use solvstruct::structure::HamiltonianSystem;
use solvstruct::symexpr::{parse, Expr, ParseContext};
use solvstruct::systems::{calogero_moser_2, harmonic_oscillators};

#[derive(Debug, Clone, PartialEq)]
pub enum Catalog {
    Oscillators { masses: Vec<f64>, freqs: Vec<f64> },
    CalogeroMoser { g: f64 },
}

pub struct Loaded {
    pub system: HamiltonianSystem,
    pub catalog: Option<Catalog>,
}

/// On-disk system definition. Expressions use the textual grammar of the
/// expression parser; parameters are substituted while loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    /// `q1..qn` followed by `p1..pn`.
    pub chart: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub hamiltonian: String,
    pub integrals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_functions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[f64; 2]>>,
}

impl SystemFile {
    pub fn from_system(sys: &HamiltonianSystem) -> SystemFile {
        let text = |es: &[Expr]| es.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        SystemFile {
            name: Some(sys.name.clone()),
            n: sys.dof(),
            chart: sys.chart.names().to_vec(),
            parameters: sys.parameters.clone(),
            hamiltonian: sys.hamiltonian.to_string(),
            integrals: text(&sys.integrals),
            g_functions: sys.g_functions.as_deref().map(text),
            singular: text(&sys.singular),
            sample_box: Some(sys.sample_box.iter().map(|&(a, b)| [a, b]).collect()),
        }
    }

    pub fn into_system(self) -> Result<HamiltonianSystem> {
        let n = self.n;
        if n == 0 {
            bail!("n: must be positive");
        }
        if self.chart.len() != 2 * n {
            bail!("chart: expected {} names, got {}", 2 * n, self.chart.len());
        }
        let chart = Chart::phase(&self.chart[..n], &self.chart[n..], false).map_err(|e| anyhow!("chart: {e}"))?;
        let mut ctx = ParseContext::new(chart.names());
        for (k, v) in &self.parameters {
            if chart.index_of(k).is_some() {
                bail!("parameters.{k}: name clashes with a chart coordinate");
            }
            ctx.bind(k, Expr::from_decimal(*v));
        }
        let one = |path: String, text: &str| parse(text, &ctx).map_err(|e| anyhow!("{path}: {e}"));
        let many = |field: &str, texts: &[String]| -> Result<Vec<Expr>> {
            texts.iter().enumerate().map(|(i, t)| one(format!("{field}[{i}]"), t)).collect()
        };
        let h = one("hamiltonian".into(), &self.hamiltonian)?;
        if self.integrals.len() != n {
            bail!("integrals: expected {n} entries, got {}", self.integrals.len());
        }
        let integrals = many("integrals", &self.integrals)?;
        let mut sys = HamiltonianSystem::new(self.name.as_deref().unwrap_or("file"), chart, h, integrals)
            .with_singular(many("singular", &self.singular)?)
            .with_parameters(self.parameters.clone());
        if let Some(g) = &self.g_functions {
            if g.len() != n {
                bail!("g_functions: expected {n} entries, got {}", g.len());
            }
            sys = sys.with_g_functions(many("g_functions", g)?);
        }
        if let Some(b) = &self.sample_box {
            if b.len() != 2 * n {
                bail!("sample_box: expected {} intervals, got {}", 2 * n, b.len());
            }
            if let Some(i) = b.iter().position(|[lo, hi]| !(lo < hi)) {
                bail!("sample_box[{i}]: lower bound must be below upper bound");
            }
            sys = sys.with_box(b.iter().map(|&[a, b]| (a, b)).collect());
        }
        Ok(sys)
    }
}

fn numbers(key: &str, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| anyhow!("{key}: `{t}` is not a number"))).collect()
}

fn fields(spec: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{part}`"))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            bail!("duplicate key `{}`", k.trim());
        }
    }
    Ok(out)
}

/// Parses `ho:n=…,m=…,c=…` or `cm2:g=…`; `None` when the text is not a
/// catalog reference.
pub fn parse_catalog(text: &str) -> Option<Result<Catalog>> {
    if let Some(rest) = text.strip_prefix("ho:") {
        return Some(parse_ho(rest).with_context(|| format!("in `{text}`")));
    }
    if let Some(rest) = text.strip_prefix("cm2:") {
        return Some(parse_cm(rest).with_context(|| format!("in `{text}`")));
    }
    None
}

fn parse_ho(rest: &str) -> Result<Catalog> {
    let f = fields(rest)?;
    if let Some(k) = f.keys().find(|k| !["n", "m", "c"].contains(&k.as_str())) {
        bail!("unknown key `{k}`");
    }
    let masses = f.get("m").map(|v| numbers("m", v)).transpose()?;
    let freqs = f.get("c").map(|v| numbers("c", v)).transpose()?;
    let n = match f.get("n") {
        Some(v) => v.parse::<usize>().map_err(|_| anyhow!("n: `{v}` is not a positive integer"))?,
        None => masses.as_ref().or(freqs.as_ref()).map(Vec::len).ok_or_else(|| anyhow!("missing n"))?,
    };
    Ok(Catalog::Oscillators {
        masses: masses.unwrap_or_else(|| vec![1.0; n]),
        freqs: freqs.unwrap_or_else(|| vec![1.0; n]),
    })
}

fn parse_cm(rest: &str) -> Result<Catalog> {
    let f = fields(rest)?;
    if let Some(k) = f.keys().find(|k| k.as_str() != "g") {
        bail!("unknown key `{k}`");
    }
    let g = match f.get("g") {
        Some(v) => v.parse::<f64>().map_err(|_| anyhow!("g: `{v}` is not a number"))?,
        None => 1.0,
    };
    Ok(Catalog::CalogeroMoser { g })
}

impl Catalog {
    pub fn build(&self) -> Result<HamiltonianSystem> {
        Ok(match self {
            Catalog::Oscillators { masses, freqs } => harmonic_oscillators(masses.len(), masses, freqs)?,
            Catalog::CalogeroMoser { g } => calogero_moser_2(*g)?,
        })
    }
}

/// Catalog shorthand first, then a path to a system file.
pub fn load(reference: &str) -> Result<Loaded> {
    if let Some(c) = parse_catalog(reference) {
        let c = c?;
        return Ok(Loaded { system: c.build()?, catalog: Some(c) });
    }
    let path = Path::new(reference);
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let file: SystemFile = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let system = file.into_system().with_context(|| format!("{}", path.display()))?;
    Ok(Loaded { system, catalog: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_references() {
        let c = parse_catalog("ho:n=2,m=1 1,c=1 2").unwrap().unwrap();
        assert_eq!(c, Catalog::Oscillators { masses: vec![1.0, 1.0], freqs: vec![1.0, 2.0] });
        let c = parse_catalog("ho:n=1").unwrap().unwrap();
        assert_eq!(c, Catalog::Oscillators { masses: vec![1.0], freqs: vec![1.0] });
        assert_eq!(parse_catalog("cm2:g=0.5").unwrap().unwrap(), Catalog::CalogeroMoser { g: 0.5 });
        assert!(parse_catalog("system.json").is_none());
        assert!(parse_catalog("ho:n=2,x=1").unwrap().is_err());
        assert!(parse_catalog("cm2:g=abc").unwrap().is_err());
        assert!(Catalog::Oscillators { masses: vec![1.0], freqs: vec![1.0, 2.0] }.build().is_err());
    }

    #[test]
    fn export_round_trip() {
        for r in ["ho:n=2,m=1 1,c=1 2", "cm2:g=1"] {
            let sys = load(r).unwrap().system;
            let file = SystemFile::from_system(&sys);
            let back = file.clone().into_system().unwrap();
            assert_eq!(back.hamiltonian, sys.hamiltonian);
            assert_eq!(back.integrals, sys.integrals);
            assert_eq!(back.g_functions, sys.g_functions);
            assert_eq!(back.singular, sys.singular);
            assert_eq!(SystemFile::from_system(&back), file);
        }
    }

    #[test]
    fn located_errors() {
        let mut f = SystemFile::from_system(&load("cm2:g=1").unwrap().system);
        f.integrals[1] = "p1 + z".into();
        let e = f.into_system().unwrap_err().to_string();
        assert!(e.starts_with("integrals[1]:"), "{e}");
    }
}
