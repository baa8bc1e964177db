use std::f64::consts::SQRT_2;
use std::path::PathBuf;

use mingraph::algebra::{
    app1_trend, check_lambda_inequality, check_sqrt2_inequality, scan_mu123_lambda, scan_mu123_with,
    Mu123Constraint,
};
use mingraph::ScanReport;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::output::OutDir;
use crate::{config, Common, Outcome};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub mu123: Option<Mu123Config>,
    pub mu123_lambda: Option<Mu123LambdaConfig>,
    pub sqrt2: Option<SamplingConfig>,
    pub lambda_inequality: Option<LambdaInequalityConfig>,
    pub app1: Option<App1Config>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mu123Config {
    pub step: f64,
    pub mu_max: f64,
    pub constraint: Mu123Constraint,
    /// Largest admissible distance of the minimizer from the equality set.
    pub locus_tol: f64,
}

impl Default for Mu123Config {
    fn default() -> Self {
        Self {
            step: 0.05,
            mu_max: 4.0,
            constraint: Mu123Constraint::Paper,
            locus_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mu123LambdaConfig {
    pub lambdas: Vec<f64>,
    pub step: f64,
    pub mu_max: f64,
}

impl Default for Mu123LambdaConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 1.0, 1.2, SQRT_2],
            step: 0.05,
            mu_max: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub samples: u64,
    /// `(n, m)` pairs.
    pub dims: Vec<(usize, usize)>,
}

fn all_dims() -> Vec<(usize, usize)> {
    (2..=4).flat_map(|n| (2..=4).map(move |m| (n, m))).collect()
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            dims: all_dims(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaInequalityConfig {
    pub lambdas: Vec<f64>,
    pub samples: u64,
    pub dims: Vec<(usize, usize)>,
}

impl Default for LambdaInequalityConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0],
            samples: 100_000,
            dims: all_dims(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct App1Config {
    pub lambda: f64,
    pub epsilons: Vec<f64>,
    pub samples: u64,
    pub m: usize,
    pub n: usize,
    /// Allowed increase of max |ξ₁₁| from one ε to the next.
    pub slack: f64,
    /// Upper bound for max |ξ₁₁| at the smallest ε.
    pub final_max: f64,
}

impl Default for App1Config {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epsilons: vec![0.3, 0.1, 0.03, 0.01],
            samples: 10_000,
            m: 3,
            n: 3,
            slack: 0.02,
            final_max: 1.1,
        }
    }
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: None,
            mu123: Some(Mu123Config::default()),
            mu123_lambda: Some(Mu123LambdaConfig::default()),
            sqrt2: Some(SamplingConfig::default()),
            lambda_inequality: Some(LambdaInequalityConfig::default()),
            app1: Some(App1Config::default()),
        }
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    report: ScanReport,
}

fn witness(c: &Check) -> String {
    match &c.report.witness {
        Some(w) => format!("{}: {} violations, first at {:?}", c.name, c.report.violations, w),
        None => format!(
            "{}: min {} at {:?}, notes {:?}",
            c.name, c.report.min_value, c.report.argmin, c.report.notes
        ),
    }
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let mut cfg: AlgebraConfig = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let mut out = OutDir::create(&common.out_dir(cfg.out.as_ref(), "verify-algebra"))?;
    out.log("verify-algebra started");
    let mut checks = Vec::new();

    if let Some(c) = &cfg.mu123 {
        let r = scan_mu123_with(c.step, c.mu_max, c.constraint)?;
        let located = r.notes.get("argmin_locus_distance").is_some_and(|d| *d <= c.locus_tol);
        checks.push(Check {
            name: format!("mu123 step {}", c.step),
            passed: r.passed() && located,
            report: r,
        });
    }
    if let Some(c) = &cfg.mu123_lambda {
        for &l in &c.lambdas {
            let r = scan_mu123_lambda(l, c.step, c.mu_max)?;
            checks.push(Check {
                name: format!("mu123-lambda Λ={l}"),
                passed: r.passed(),
                report: r,
            });
        }
    }
    if let Some(c) = &cfg.sqrt2 {
        for &(n, m) in &c.dims {
            let r = check_sqrt2_inequality(n, m, c.samples, cfg.seed)?;
            checks.push(Check {
                name: format!("sqrt2logv n={n} m={m}"),
                passed: r.passed(),
                report: r,
            });
        }
    }
    if let Some(c) = &cfg.lambda_inequality {
        for &l in &c.lambdas {
            for &(n, m) in &c.dims {
                let r = check_lambda_inequality(l, n, m, c.samples, cfg.seed)?;
                checks.push(Check {
                    name: format!("Lalogv Λ={l} n={n} m={m}"),
                    passed: r.passed(),
                    report: r,
                });
            }
        }
    }
    if let Some(c) = &cfg.app1 {
        let (reports, trend) = app1_trend(c.lambda, &c.epsilons, c.m, c.n, c.samples, cfg.seed, c.slack)?;
        let last = reports.last().map_or(0.0, |r| r.max_value);
        for (i, r) in reports.into_iter().enumerate() {
            let is_last = i + 1 == c.epsilons.len();
            checks.push(Check {
                name: format!("app1 ε={}", c.epsilons[i]),
                passed: trend && (!is_last || last <= c.final_max),
                report: r,
            });
        }
    }

    for c in &checks {
        println!(
            "{} {:<28} samples {:>9} min {:>12.6e} max {:>12.6e} violations {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.report.samples,
            c.report.min_value,
            c.report.max_value,
            c.report.violations
        );
    }
    out.write_json("verify-algebra.json", &checks)?;
    let failed = checks.iter().find(|c| !c.passed);
    let outcome = match failed {
        None => Outcome::Passed,
        Some(c) => Outcome::AssertionFailed(witness(c)),
    };
    out.finish("verify-algebra", &cfg, failed.is_none())?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dims_cover_two_to_four() {
        let d = all_dims();
        assert_eq!(d.len(), 9);
        assert!(d.contains(&(2, 4)) && d.contains(&(4, 2)));
    }

    #[test]
    fn sections_can_be_disabled() {
        let c: AlgebraConfig = serde_json::from_str(r#"{"app1":null,"sqrt2":{"samples":10}}"#).unwrap();
        assert!(c.app1.is_none());
        assert_eq!(c.sqrt2.unwrap().samples, 10);
        assert!(c.mu123.is_some());
    }
}
