use std::path::PathBuf;

use mingraph::model_zoo::Order;
use mingraph::solver::{solve, SolveOptions, SolveReport};
use mingraph::GraphPatch;
use serde::{Deserialize, Serialize};

use crate::config::ModelSpec;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;
use crate::{config, Common, Outcome};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// MGP1 manifest whose boundary layer is the Dirichlet data.
    pub patch: Option<PathBuf>,
    /// Boundary data sampled from a model; used when `patch` is absent.
    pub generator: Generator,
    pub tol: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Generator {
    pub model: ModelSpec,
    pub dims: Vec<usize>,
    pub spacing: f64,
    pub origin: Vec<f64>,
}

impl Default for Generator {
    fn default() -> Self {
        Self {
            model: ModelSpec::Label("slag-exp".into()),
            dims: vec![33, 33],
            spacing: 1.0 / 32.0,
            origin: vec![0.0, 0.0],
        }
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        let opts = SolveOptions::default();
        Self {
            patch: None,
            generator: Generator::default(),
            tol: opts.tol,
            max_iter: opts.max_iter,
            out: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary<'a> {
    source: String,
    report: &'a SolveReport,
    /// Interior sup-norm distance to the generating model, when known.
    error_vs_model: Option<f64>,
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let cfg: SolveConfig = config::load(common.config.as_deref())?;
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(CliError::Config("tol must be > 0 and max_iter ≥ 1".into()));
    }
    let (mut patch, model, source) = match &cfg.patch {
        Some(p) => (GraphPatch::read_mgp1(p)?, None, p.display().to_string()),
        None => {
            let g = &cfg.generator;
            let model = g.model.build()?;
            let patch = GraphPatch::with_boundary(&model, g.dims.clone(), g.spacing, g.origin.clone())?;
            (patch, Some(model), format!("generator:{}", g.model.label()))
        }
    };
    let mut out = OutDir::create(&common.out_dir(cfg.out.as_ref(), "solve"))?;
    out.log(&format!("solve started on {source}"));

    let report = solve(
        &mut patch,
        SolveOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        },
    )?;

    let error_vs_model = match &model {
        Some(model) => {
            let mut err: f64 = 0.0;
            for node in 0..patch.node_count() {
                let idx = patch.multi_index(node);
                if patch.is_boundary(&idx) {
                    continue;
                }
                let exact = model.jet(&patch.coords(&idx), Order::First)?.value;
                for (a, b) in patch.node(node).iter().zip(exact.iter()) {
                    err = err.max((a - b).abs());
                }
            }
            Some(err)
        }
        None => None,
    };

    patch.write_mgp1(&out.path("solution.json"))?;
    out.note_written("solution.json");
    out.note_written("solution.bin");
    out.write_json(
        "solve-report.json",
        &SolveSummary {
            source,
            report: &report,
            error_vs_model,
        },
    )?;
    println!(
        "iterations {} residual {:.3e} converged {}{}",
        report.iterations,
        report.residual,
        report.converged,
        error_vs_model.map_or(String::new(), |e| format!(" error_vs_model {e:.3e}"))
    );
    out.finish("solve", &cfg, report.converged)?;
    Ok(if report.converged {
        Outcome::Passed
    } else {
        Outcome::NotConverged(format!(
            "residual {:.3e} after {} iterations (tol {:.1e}, diverged {})",
            report.residual, report.iterations, cfg.tol, report.diverged
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_defaults_to_the_unit_square() {
        let c = SolveConfig::default();
        assert_eq!(c.generator.dims, vec![33, 33]);
        assert_eq!(c.generator.spacing * 32.0, 1.0);
        assert!(c.patch.is_none());
    }
}
