use std::path::PathBuf;

use mingraph::diagnostics::{
    csv_header, csv_row, curvature_integral, logv_identity_batch, logv_identity_patch, CurvatureIntegral,
    LogVReport, PointSampler,
};
use mingraph::model_zoo::Order;
use mingraph::par::map_indexed;
use mingraph::solver::{residual_at_node, residual_strong};
use mingraph::GraphPatch;
use serde::{Deserialize, Serialize};

use crate::config::ModelSpec;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;
use crate::{config, Common, Outcome};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub model: ModelSpec,
    /// Solved MGP1 patch; replaces `model` and evaluates every node at
    /// least two layers inside the boundary.
    pub patch: Option<PathBuf>,
    /// Explicit points; take precedence over `sampler`.
    pub points: Option<Vec<Vec<f64>>>,
    pub sampler: PointSampler,
    pub seed: u64,
    /// Outer difference step for the intrinsic Laplacian of log v.
    pub h_fd: f64,
    pub assert: Option<Assertions>,
    pub curvature: Option<CurvatureConfig>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Assertions {
    pub v: Option<f64>,
    pub lip: Option<f64>,
    pub dilation: Option<f64>,
    /// Absolute tolerance for `v`, `lip` and `dilation`.
    pub tol: f64,
    /// Bound on the sup-norm of the strong residual.
    pub max_residual: Option<f64>,
    /// Bound on `|lhs − rhs|`.
    pub max_gap: Option<f64>,
    /// Lower bound on `rhs − |B|²`.
    pub min_margin_delta1: Option<f64>,
    /// Lower bound on the Λ margin where it applies.
    pub min_margin_lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Ambient centre is the graph point over this domain point.
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub resolution: usize,
    pub expect_slope: Option<f64>,
    pub slope_tol: f64,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        Self {
            center: vec![0.0; 4],
            radii: vec![1.0, 2.0, 4.0, 8.0],
            resolution: 32,
            expect_slope: Some(2.0),
            slope_tol: 0.05,
        }
    }
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            patch: None,
            points: None,
            sampler: PointSampler::Annulus {
                count: 1000,
                inner: 0.5,
                outer: 2.0,
            },
            seed: 1,
            h_fd: 1e-3,
            assert: Some(Assertions {
                v: Some(9.0),
                lip: Some(5f64.sqrt()),
                dilation: Some(5.0),
                tol: 1e-10,
                max_residual: Some(1e-8),
                ..Assertions::default()
            }),
            curvature: None,
            out: None,
        }
    }
}

#[derive(Debug, Default, Serialize)]
struct Summary {
    source: String,
    points: usize,
    max_residual: f64,
    max_gap: f64,
    v_range: [f64; 2],
    lip_range: [f64; 2],
    dilation_range: [f64; 2],
    min_margin_delta1: f64,
    /// Minimum over the points where the Λ margin applies.
    min_margin_lambda: Option<f64>,
    curvature: Option<CurvatureIntegral>,
    failures: Vec<String>,
}

fn range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v), hi.max(v)])
}

/// First failing assertion for one row, if any.
fn check_row(a: &Assertions, r: &LogVReport, residual: f64) -> Option<String> {
    let near = |name: &str, got: f64, want: Option<f64>| {
        want.filter(|w| !((got - w).abs() <= a.tol))
            .map(|w| format!("{name} = {got} differs from {w} by more than {}", a.tol))
    };
    near("v", r.v, a.v)
        .or_else(|| near("lip", r.lip, a.lip))
        .or_else(|| near("dilation", r.dilation, a.dilation))
        .or_else(|| {
            a.max_residual
                .filter(|b| !(residual <= *b))
                .map(|b| format!("residual {residual:e} exceeds {b:e}"))
        })
        .or_else(|| {
            a.max_gap
                .filter(|b| !(r.gap.abs() <= *b))
                .map(|b| format!("|lhs − rhs| = {:e} exceeds {b:e}", r.gap.abs()))
        })
        .or_else(|| {
            a.min_margin_delta1
                .filter(|b| !(r.margin_delta1 >= *b))
                .map(|b| format!("rhs − |B|² = {:e} below {b:e}", r.margin_delta1))
        })
        .or_else(|| match (a.min_margin_lambda, r.margin_lambda) {
            (Some(b), Some(m)) if !(m >= b) => Some(format!("Λ margin {m:e} below {b:e}")),
            _ => None,
        })
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let mut cfg: DiagnoseConfig = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !(cfg.h_fd > 0.0) {
        return Err(CliError::Config(format!("h_fd = {} must be > 0", cfg.h_fd)));
    }
    let mut out = OutDir::create(&common.out_dir(cfg.out.as_ref(), "diagnose"))?;
    out.log("diagnose started");

    let (n, rows, residuals, source, model) = match &cfg.patch {
        Some(path) => {
            let patch = GraphPatch::read_mgp1(path)?;
            let nodes: Vec<Vec<usize>> = (0..patch.node_count())
                .map(|k| patch.multi_index(k))
                .filter(|idx| idx.iter().zip(patch.dims()).all(|(&i, &d)| i >= 2 && i + 2 < d))
                .collect();
            let rows = map_indexed(nodes.len(), |k| logv_identity_patch(&patch, &nodes[k]))
                .into_iter()
                .collect::<mingraph::Result<Vec<_>>>()?;
            let residuals = map_indexed(nodes.len(), |k| residual_at_node(&patch, &nodes[k]).map(|r| r.amax()))
                .into_iter()
                .collect::<mingraph::Result<Vec<_>>>()?;
            (patch.n(), rows, residuals, path.display().to_string(), None)
        }
        None => {
            let model = cfg.model.build()?;
            let points = match &cfg.points {
                Some(p) => p.clone(),
                None => cfg.sampler.points(model.n(), cfg.seed)?,
            };
            let rows = logv_identity_batch(&model, &points, cfg.h_fd)?;
            let residuals = map_indexed(points.len(), |k| {
                model
                    .jet(&points[k], Order::Second)
                    .map(|jet| residual_strong(&jet.jacobian, &jet.hessian).amax())
            })
            .into_iter()
            .collect::<mingraph::Result<Vec<_>>>()?;
            (model.n(), rows, residuals, cfg.model.label().to_string(), Some(model))
        }
    };

    let mut csv = csv_header(n) + ",residual\n";
    for (r, res) in rows.iter().zip(&residuals) {
        csv.push_str(&csv_row(r));
        csv.push_str(&format!(",{res}\n"));
    }
    out.write_text("diagnose.csv", &csv)?;

    let mut summary = Summary {
        source,
        points: rows.len(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        max_gap: rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max),
        v_range: range(rows.iter().map(|r| r.v)),
        lip_range: range(rows.iter().map(|r| r.lip)),
        dilation_range: range(rows.iter().map(|r| r.dilation)),
        min_margin_delta1: rows.iter().map(|r| r.margin_delta1).fold(f64::INFINITY, f64::min),
        min_margin_lambda: rows.iter().filter_map(|r| r.margin_lambda).reduce(f64::min),
        ..Summary::default()
    };
    let mut witness = None;
    if let Some(a) = &cfg.assert {
        for (r, res) in rows.iter().zip(&residuals) {
            if let Some(why) = check_row(a, r, *res) {
                summary.failures.push(why.clone());
                witness.get_or_insert_with(|| format!("{why}; row {}", csv_row(r)));
            }
        }
    }
    if let Some(c) = &cfg.curvature {
        let model = model
            .as_ref()
            .ok_or_else(|| CliError::Config("curvature integrals need an analytic model".into()))?;
        let center = mingraph::measure::graph_point(model, &c.center)?;
        let ci = curvature_integral(model, &center, &c.radii, c.resolution)?;
        if let Some(want) = c.expect_slope {
            match ci.slope {
                Some(s) if (s - want).abs() <= c.slope_tol => {}
                got => {
                    let why = format!("curvature slope {got:?} not within {} of {want}", c.slope_tol);
                    summary.failures.push(why.clone());
                    witness.get_or_insert(why);
                }
            }
        }
        for (r, v) in ci.radii.iter().zip(&ci.values) {
            println!("curvature ρ={r} ∫|B|² = {v:.6e}");
        }
        summary.curvature = Some(ci);
    }
    println!(
        "{} points: v ∈ [{:.12}, {:.12}], lip ∈ [{:.12}, {:.12}], dilation ∈ [{:.12}, {:.12}], max residual {:.3e}",
        summary.points,
        summary.v_range[0],
        summary.v_range[1],
        summary.lip_range[0],
        summary.lip_range[1],
        summary.dilation_range[0],
        summary.dilation_range[1],
        summary.max_residual
    );
    let failed = summary.failures.len();
    if failed > 0 {
        println!("{failed} assertion failures");
    }
    // keep the JSON bounded on badly failing runs
    summary.failures.truncate(100);
    out.write_json("diagnose.json", &summary)?;
    out.finish("diagnose", &cfg, witness.is_none())?;
    Ok(match witness {
        None => Outcome::Passed,
        Some(w) => Outcome::AssertionFailed(w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64, margin_lambda: Option<f64>) -> LogVReport {
        LogVReport {
            point: vec![0.0, 0.0],
            v,
            lip: 1.0,
            dilation: 1.0,
            bnorm_sq: 0.5,
            lhs: 0.7,
            rhs: 0.7,
            gap: 0.0,
            margin_delta1: 0.2,
            margin_sqrt2: None,
            margin_lambda,
        }
    }

    #[test]
    fn first_failing_assertion_is_reported() {
        let a = Assertions {
            v: Some(2.0),
            tol: 1e-10,
            max_residual: Some(1e-8),
            min_margin_lambda: Some(0.0),
            ..Assertions::default()
        };
        assert!(check_row(&a, &row(2.0, None), 0.0).is_none());
        assert!(check_row(&a, &row(2.1, None), 0.0).unwrap().starts_with("v = "));
        assert!(check_row(&a, &row(2.0, None), 1e-6).unwrap().starts_with("residual"));
        assert!(check_row(&a, &row(2.0, Some(-1.0)), 0.0).unwrap().starts_with("Λ margin"));
    }

    #[test]
    fn nan_never_passes() {
        let a = Assertions {
            v: Some(2.0),
            tol: 1e-10,
            ..Assertions::default()
        };
        assert!(check_row(&a, &row(f64::NAN, None), 0.0).is_some());
    }
}
