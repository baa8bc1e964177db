use std::f64::consts::E;
use std::fmt::Write as _;
use std::path::PathBuf;

use mingraph::measure::{
    blow_down_indicator, density_profile, graph_point, graph_volume, omega, slope_diverges,
    volume_growth_bound_check, Ball, BlowDownSample, DensityProfile, GrowthCheck, VolumeReport,
};
use serde::{Deserialize, Serialize};

use crate::config::ModelSpec;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;
use crate::{config, Common, Outcome};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub model: ModelSpec,
    /// Quadrature nodes per axis for density and growth measurements.
    pub resolution: usize,
    pub cubic_growth: Option<CubicGrowthConfig>,
    pub density: Option<DensityConfig>,
    pub growth: Option<GrowthConfig>,
    pub blow_down: Option<BlowDownConfig>,
    pub out: Option<PathBuf>,
}

/// `H^n(M ∩ B_{√3 r}(c)) ≥ r(r² − 1)` for each r.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubicGrowthConfig {
    /// Ambient centre of the balls.
    pub center: Vec<f64>,
    pub r: Vec<f64>,
    pub resolution: usize,
    /// Largest admissible estimated error relative to the volume.
    pub max_rel_error: f64,
}

impl Default for CubicGrowthConfig {
    fn default() -> Self {
        Self {
            center: vec![0.0; 4],
            r: vec![E, 5.0, 10.0],
            resolution: 512,
            max_rel_error: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    /// Domain point whose graph point is the centre.
    pub center_x: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    /// When set, every ratio must lie within this relative distance of the
    /// first one.
    pub constant_tol: Option<f64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            center_x: None,
            radii: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0],
            constant_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub lambda: f64,
    pub radii: Vec<f64>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            radii: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowDownConfig {
    pub scales: Vec<f64>,
    pub nodes: usize,
    /// Growth factor of `max Lip` that counts as divergence.
    pub factor: f64,
}

impl Default for BlowDownConfig {
    fn default() -> Self {
        Self {
            scales: vec![1.0, 2.0, 4.0, 8.0],
            nodes: 9,
            factor: 10.0,
        }
    }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::Label("slag-exp".into()),
            resolution: 128,
            cubic_growth: Some(CubicGrowthConfig::default()),
            density: Some(DensityConfig::default()),
            growth: None,
            blow_down: None,
            out: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct CubicGrowthRow {
    r: f64,
    bound: f64,
    volume: VolumeReport,
    passed: bool,
}

#[derive(Debug, Default, Serialize)]
struct Summary {
    model: String,
    cubic_growth: Option<Vec<CubicGrowthRow>>,
    density: Option<DensityProfile>,
    growth: Option<GrowthCheck>,
    blow_down: Option<Vec<BlowDownSample>>,
    blow_down_diverges: Option<bool>,
    failures: Vec<String>,
}

fn csv_header() -> String {
    "radius,volume,ratio,est_error\n".to_string()
}

pub fn run(common: &Common) -> CliResult<Outcome> {
    let cfg: MeasureConfig = config::load(common.config.as_deref())?;
    let model = cfg.model.build()?;
    let n = model.n();
    let mut out = OutDir::create(&common.out_dir(cfg.out.as_ref(), "measure"))?;
    out.log("measure started");
    let mut summary = Summary {
        model: cfg.model.label().to_string(),
        ..Summary::default()
    };

    if let Some(c) = &cfg.cubic_growth {
        let mut rows = Vec::new();
        let mut csv = csv_header().trim_end().to_string() + ",bound\n";
        for &r in &c.r {
            let radius = 3f64.sqrt() * r;
            let vol = graph_volume(&model, &Ball::new(c.center.clone(), radius)?, c.resolution)?;
            let bound = r * (r * r - 1.0);
            let rel = vol.error / vol.value.abs().max(f64::MIN_POSITIVE);
            let passed = vol.value >= bound && rel <= c.max_rel_error;
            if !passed {
                summary.failures.push(format!(
                    "ball radius {radius}: volume {} (error {:e}) against bound {bound}",
                    vol.value, vol.error
                ));
            }
            println!(
                "cubic growth r={r:.6}: volume {:.6} ≥ {bound:.6} (est. error {:.2e}) {}",
                vol.value,
                vol.error,
                if passed { "ok" } else { "FAIL" }
            );
            let unit = omega(n) * radius.powi(n as i32);
            writeln!(csv, "{radius},{},{},{},{bound}", vol.value, vol.value / unit, vol.error).unwrap();
            rows.push(CubicGrowthRow {
                r,
                bound,
                volume: vol,
                passed,
            });
        }
        out.write_text("cubic-growth.csv", &csv)?;
        summary.cubic_growth = Some(rows);
    }

    if let Some(c) = &cfg.density {
        let x = c.center_x.clone().unwrap_or_else(|| vec![0.0; n]);
        let center = graph_point(&model, &x)?;
        let d = density_profile(&model, &center, &c.radii, cfg.resolution)?;
        let mut csv = csv_header();
        for k in 0..d.radii.len() {
            writeln!(csv, "{},{},{},{}", d.radii[k], d.volumes[k], d.ratios[k], d.errors[k]).unwrap();
        }
        out.write_text("density.csv", &csv)?;
        if !d.monotone {
            summary.failures.push(format!(
                "density ratio decreases by {:e}, beyond 3× the quadrature error",
                -d.monotonicity_margin
            ));
        }
        if let Some(tol) = c.constant_tol {
            let first = d.ratios[0];
            if let Some((r, q)) = d
                .radii
                .iter()
                .zip(&d.ratios)
                .find(|(_, q)| ((*q - first) / first).abs() > tol)
            {
                summary
                    .failures
                    .push(format!("density ratio {q} at radius {r} differs from {first} by more than {tol}"));
            }
        }
        println!(
            "density ratios {:?} monotone {}",
            d.ratios.iter().map(|q| format!("{q:.6}")).collect::<Vec<_>>(),
            d.monotone
        );
        summary.density = Some(d);
    }

    if let Some(c) = &cfg.growth {
        match volume_growth_bound_check(&model, c.lambda, &c.radii, cfg.resolution) {
            Ok(g) => {
                if !g.bounded {
                    summary
                        .failures
                        .push(format!("volume ratios {:?} are not bounded", g.ratios));
                }
                println!("growth constant {:.6} bounded {}", g.constant, g.bounded);
                summary.growth = Some(g);
            }
            Err(e @ mingraph::Error::DilationViolated { .. }) => {
                summary.failures.push(e.to_string());
                println!("growth: {e}");
            }
            Err(e) => return Err(CliError::Core(e)),
        }
    }

    if let Some(c) = &cfg.blow_down {
        let samples = blow_down_indicator(&model, &c.scales, c.nodes)?;
        let diverges = slope_diverges(&samples, c.factor);
        println!("blow-down: slope diverges {diverges}");
        summary.blow_down = Some(samples);
        summary.blow_down_diverges = Some(diverges);
    }

    out.write_json("measure.json", &summary)?;
    let passed = summary.failures.is_empty();
    let witness = summary.failures.first().cloned();
    out.finish("measure", &cfg, passed)?;
    Ok(match witness {
        None => Outcome::Passed,
        Some(w) => Outcome::AssertionFailed(w),
    })
}
