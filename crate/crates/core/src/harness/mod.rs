//! Named experiments over parameter grids, with CSV, JSON and SVG output.

mod emit;
mod experiments;
mod presets;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use emit::{emit, to_csv, to_svg, Format};
pub use experiments::EXPERIMENTS;
pub use presets::{resolve_body, ResolvedBody};

use crate::christoffel::Precision;
use crate::{Error, Result};

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// Preset or description from which the body can be rebuilt.
    pub body: String,
    pub n: usize,
    pub x: Vec<f64>,
    /// The swept geometric parameter (δ, μ, α, …).
    pub param: f64,
    /// Grouping label for fits and plots.
    pub slice: String,
    pub lambda: f64,
    /// Closed-form value or bound right-hand side the record is compared with.
    pub reference: Option<f64>,
    pub certificate: Option<f64>,
    pub ratio: f64,
}

/// Least-squares fit of `ln λ` against `ln param`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slice: String,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    pub target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min`.
    pub ratio_spread: f64,
    pub fits: Vec<SlopeFit>,
    /// Experiment-specific statistics.
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub runtime_secs: f64,
}

/// Settings shared by all experiments.
#[derive(Clone, Copy, Debug)]
pub struct RunContext {
    pub precision: Precision,
    pub seed: u64,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext { precision: Precision::Double, seed: crate::quadrature::MC_DEFAULT_SEED }
    }
}

/// Ordinary least squares `y ≈ a + b x`, returning `(b, stderr(b), a)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let se = if xs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (b, se, a)
}

/// Ratio statistics plus, when `slopes` is set, one log-log fit per slice.
pub fn summarize(records: &[Record], slopes: bool, targets: &BTreeMap<String, f64>) -> Summary {
    let ratio_min = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let ratio_max = records.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let mut fits = Vec::new();
    if slopes {
        let mut slices: Vec<&str> = records.iter().map(|r| r.slice.as_str()).collect();
        slices.dedup();
        for s in slices {
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                records.iter().filter(|r| r.slice == s).map(|r| (r.param.ln(), r.lambda.ln())).unzip();
            let (slope, stderr, intercept) = ols(&xs, &ys);
            fits.push(SlopeFit {
                slice: s.to_string(),
                slope,
                stderr: if stderr.is_finite() { stderr } else { 0.0 },
                intercept,
                points: xs.len(),
                target: targets.get(s).copied(),
            });
        }
    }
    Summary { ratio_min, ratio_max, ratio_spread: ratio_max / ratio_min, fits, values: BTreeMap::new() }
}

/// `key=value` experiment parameters; list values are comma separated.
#[derive(Clone, Debug, Default)]
pub struct Params(pub BTreeMap<String, String>);

impl Params {
    pub fn parse(items: &[String]) -> Result<Params> {
        let mut map = BTreeMap::new();
        for it in items {
            let (k, v) = it
                .split_once('=')
                .ok_or_else(|| Error::ParamOutOfRange(format!("expected key=value, got `{it}`")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::ParamOutOfRange(format!("unknown parameter `{k}` (allowed: {})", allowed.join(", ")))),
            None => Ok(()),
        }
    }

    fn floats(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::ParamOutOfRange(format!("{key}: cannot parse `{t}`"))))
                .collect(),
        }
    }

    fn sizes(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| Error::ParamOutOfRange(format!("{key}: cannot parse `{t}`"))))
                .collect(),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.floats(key, &[default])?[0])
    }

    fn size(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.sizes(key, &[default])?[0])
    }
}

pub fn run_experiment(name: &str, params: &Params, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let exp = EXPERIMENTS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))?;
    params.check_keys(exp.keys)?;
    let (records, summary) = (exp.run)(params, ctx)?;
    let mut shown: BTreeMap<String, String> = params.0.clone();
    shown.insert("seed".into(), ctx.seed.to_string());
    shown.insert("precision".into(), format!("{:?}", ctx.precision).to_lowercase());
    Ok(ExperimentReport {
        name: name.to_string(),
        params: shown,
        records,
        summary,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (b, se, a) = ols(&xs, &ys);
        assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14 && se < 1e-12);
    }

    #[test]
    fn unknown_names_and_keys() {
        let ctx = RunContext::default();
        assert!(matches!(run_experiment("nope", &Params::default(), &ctx), Err(Error::UnknownExperiment(_))));
        let p = Params::parse(&["bogus=1".to_string()]).unwrap();
        assert!(matches!(run_experiment("disc-center", &p, &ctx), Err(Error::ParamOutOfRange(_))));
        let p = Params::parse(&["ns=99".to_string()]).unwrap();
        assert!(matches!(run_experiment("disc-center", &p, &ctx), Err(Error::ParamOutOfRange(_))));
    }
}
