//! Graph-volume quadrature over ambient balls, density ratios and
//! blow-down indicators.
//!
//! Integrals over `M ∩ B` are pulled back to the domain as
//! `∫ w · v · 1[(x, u(x)) ∈ B] dx` on the box `|x − c_x|_∞ ≤ ρ`, which
//! contains the projection of the ball. The midpoint rule runs on a uniform
//! grid; cells whose image may straddle the sphere are split into `sⁿ`
//! subcells. The error
//! estimate is the difference to the same rule at half the resolution, plus
//! a bound for the excluded vertex ball on cones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_zoo::{AnalyticModel, Jet, Order};
use crate::par::{map_indexed, pairwise_sum};
use crate::solver::metric_of;

/// Smallest accepted number of cells per axis.
pub const MIN_RESOLUTION: usize = 32;

/// Radius of the excluded vertex ball on cones, relative to ρ.
pub const VERTEX_CUTOFF: f64 = 1e-3;

/// Tolerance for "the centre lies on the graph".
const ON_GRAPH_TOL: f64 = 1e-9;

/// `Γ(k/2)` for a positive integer k.
fn gamma_half(k: usize) -> f64 {
    let (mut value, mut arg) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while arg < k as f64 / 2.0 - 0.25 {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Volume of the unit ball in ℝⁿ, `π^{n/2} / Γ(n/2 + 1)`.
pub fn omega(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
}

/// Closed ball in the ambient space ℝ^{n+m}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius {radius} must be > 0")));
        }
        crate::error::ensure_finite(&center, "ball centre")?;
        Ok(Self { center, radius })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Sub-samples per axis used to resolve a boundary cell.
fn subdivisions(n: usize) -> usize {
    match n {
        1 | 2 => 8,
        3 => 4,
        _ => 2,
    }
}

struct Level<'a> {
    model: &'a AnalyticModel,
    ball: &'a Ball,
    order: Order,
    weight: &'a (dyn Fn(&Jet) -> f64 + Sync),
    cutoff: f64,
}

/// Midpoint rule at `cells` per axis; also returns the vertex-shell
/// supremum of `w·v·|x|²` for the cutoff bound.
///
/// A cell counts as crossing the sphere when `|dist − ρ|` is within 1.5
/// times the variation of the linearized distance over the cell; it is then
/// integrated by the midpoint rule on an `sⁿ` lattice of subcells, with the
/// exact indicator and vertex cutoff.
fn integrate(level: &Level, cells: usize) -> Result<(f64, f64)> {
    let model = level.model;
    let n = model.n();
    let rho = level.ball.radius;
    let c = &level.ball.center;
    let d = 2.0 * rho / cells as f64;
    let lo: Vec<f64> = c[..n].iter().map(|v| v - rho).collect();
    let s = subdivisions(n);
    let sub_count = s.pow(n as u32);
    let half_diag = 0.5 * d * (n as f64).sqrt();
    let cell_vol = d.powi(n as i32);
    let inner = cells.pow(n as u32 - 1);
    let offsets: Vec<f64> = (0..s).map(|k| ((k as f64 + 0.5) / s as f64 - 0.5) * d).collect();

    let slabs = map_indexed(cells, |first| -> Result<(f64, f64)> {
        let mut parts = Vec::new();
        let mut shell_sup = 0.0f64;
        let mut x = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut y = vec![0.0; n];
        for rest in 0..inner {
            let mut r = rest;
            x[0] = lo[0] + (first as f64 + 0.5) * d;
            for k in (1..n).rev() {
                x[k] = lo[k] + ((r % cells) as f64 + 0.5) * d;
                r /= cells;
            }
            // the projection alone already leaves the ball
            let proj: f64 = (0..n).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt();
            if proj - half_diag > rho {
                continue;
            }
            let radius = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if level.cutoff > 0.0 && radius + half_diag < level.cutoff {
                continue;
            }
            if !model.in_domain(&x) {
                continue;
            }
            let first_jet = model.jet(&x, Order::First)?;
            let mut d2 = proj * proj;
            for a in 0..first_jet.value.len() {
                d2 += (first_jet.value[a] - c[n + a]).powi(2);
            }
            let dist = d2.sqrt();
            let mut reach = 0.0;
            for i in 0..n {
                let mut gi = x[i] - c[i];
                for a in 0..first_jet.value.len() {
                    gi += first_jet.jacobian[(a, i)] * (first_jet.value[a] - c[n + a]);
                }
                grad[i] = if dist > 0.0 { gi / dist } else { 0.0 };
                reach += grad[i].abs() * 0.5 * d;
            }
            let straddles_cutoff = level.cutoff > 0.0 && radius - half_diag < level.cutoff;
            let crossing = straddles_cutoff || (dist - rho).abs() <= 1.5 * reach;
            if !crossing {
                if dist > rho {
                    continue;
                }
                let jet = if level.order == Order::First {
                    first_jet
                } else {
                    model.jet(&x, level.order)?
                };
                let wv = metric_of(&jet.jacobian).v * (level.weight)(&jet);
                if level.cutoff > 0.0 && radius < 2.0 * level.cutoff + half_diag {
                    shell_sup = shell_sup.max(wv.abs() * radius * radius);
                }
                parts.push(wv * cell_vol);
                continue;
            }
            let mut acc = 0.0;
            for sub in 0..sub_count {
                let mut q = sub;
                for k in 0..n {
                    y[k] = x[k] + offsets[q % s];
                    q /= s;
                }
                let ry = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (level.cutoff > 0.0 && ry < level.cutoff) || !model.in_domain(&y) {
                    continue;
                }
                let jet = model.jet(&y, level.order)?;
                let mut e2: f64 = (0..n).map(|i| (y[i] - c[i]).powi(2)).sum();
                for a in 0..jet.value.len() {
                    e2 += (jet.value[a] - c[n + a]).powi(2);
                }
                if e2 <= rho * rho {
                    let wv = metric_of(&jet.jacobian).v * (level.weight)(&jet);
                    if level.cutoff > 0.0 && ry < 2.0 * level.cutoff + half_diag {
                        shell_sup = shell_sup.max(wv.abs() * ry * ry);
                    }
                    acc += wv;
                }
            }
            parts.push(acc * cell_vol / sub_count as f64);
        }
        Ok((pairwise_sum(&parts), shell_sup))
    });
    let mut sums = Vec::with_capacity(cells);
    let mut shell = 0.0f64;
    for s in slabs {
        let (v, sh) = s?;
        sums.push(v);
        shell = shell.max(sh);
    }
    Ok((pairwise_sum(&sums), shell))
}

/// `∫_{M ∩ B} w dH^n` with `w` evaluated on the jet of the requested order.
pub(crate) fn ball_quadrature(
    model: &AnalyticModel,
    ball: &Ball,
    resolution: usize,
    order: Order,
    weight: &(dyn Fn(&Jet) -> f64 + Sync),
) -> Result<Quadrature> {
    let n = model.n();
    if ball.center.len() != n + model.m() {
        return Err(Error::DimensionMismatch {
            expected: format!("ball centre in ℝ^{}", n + model.m()),
            got: format!("ℝ^{}", ball.center.len()),
        });
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    let cutoff = if model.is_cone() {
        VERTEX_CUTOFF * ball.radius
    } else {
        0.0
    };
    let level = Level {
        model,
        ball,
        order,
        weight,
        cutoff,
    };
    let (fine, shell) = integrate(&level, resolution)?;
    let (coarse, _) = integrate(&level, resolution / 2)?;
    // ∫_{B_δ} r⁻² dx = n ωₙ δ^{n−2} / (n − 2) bounds the excluded ball when
    // w·v ≲ C r⁻², which covers both volume and curvature weights on cones.
    let vertex = if cutoff > 0.0 && n > 2 {
        shell * n as f64 * omega(n) * cutoff.powi(n as i32 - 2) / (n as f64 - 2.0)
    } else {
        0.0
    };
    let error = (fine - coarse).abs() + vertex;
    if !fine.is_finite() || !error.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite result on ball of radius {}",
            ball.radius
        )));
    }
    Ok(Quadrature { value: fine, error })
}

/// `H^n(M ∩ B)` with its error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: f64,
    pub resolution: usize,
    pub error: f64,
}

pub fn graph_volume(model: &AnalyticModel, ball: &Ball, resolution: usize) -> Result<VolumeReport> {
    let q = ball_quadrature(model, ball, resolution, Order::First, &|_| 1.0)?;
    Ok(VolumeReport {
        center: ball.center.clone(),
        radius: ball.radius,
        value: q.value.max(0.0),
        resolution,
        error: q.error,
    })
}

/// The ambient point `(x, u(x))`; the origin for a cone vertex.
pub fn graph_point(model: &AnalyticModel, x: &[f64]) -> Result<Vec<f64>> {
    if model.is_cone() && x.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; model.n() + model.m()]);
    }
    let mut p = x.to_vec();
    p.extend(model.value(x)?.iter());
    Ok(p)
}

fn check_on_graph(model: &AnalyticModel, center: &[f64]) -> Result<()> {
    let n = model.n();
    if center.len() != n + model.m() {
        return Err(Error::DimensionMismatch {
            expected: format!("centre in ℝ^{}", n + model.m()),
            got: format!("ℝ^{}", center.len()),
        });
    }
    let on = graph_point(model, &center[..n])?;
    let dev = on[n..]
        .iter()
        .zip(&center[n..])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = on[n..].iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if dev > ON_GRAPH_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "centre {center:?} is off the graph by {dev:e}"
        )));
    }
    Ok(())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("no radii given".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "radii {radii:?} must be positive and strictly increasing"
        )));
    }
    Ok(())
}

/// Density ratios `H^n(M ∩ B_ρ) / (ωₙ ρⁿ)` at a point of the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Quadrature error in ratio units.
    pub errors: Vec<f64>,
    /// `min_k (ratios[k+1] − ratios[k])`; `+∞` for a single radius.
    pub monotonicity_margin: f64,
    /// Every step is `≥ −3 (err_k + err_{k+1})`.
    pub monotone: bool,
}

pub fn density_profile(
    model: &AnalyticModel,
    center: &[f64],
    radii: &[f64],
    resolution: usize,
) -> Result<DensityProfile> {
    check_on_graph(model, center)?;
    check_radii(radii)?;
    let n = model.n();
    let mut volumes = Vec::with_capacity(radii.len());
    let mut ratios = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let rep = graph_volume(model, &Ball::new(center.to_vec(), r)?, resolution)?;
        let unit = omega(n) * r.powi(n as i32);
        volumes.push(rep.value);
        ratios.push(rep.value / unit);
        errors.push(rep.error / unit);
    }
    let mut margin = f64::INFINITY;
    let mut monotone = true;
    for k in 0..ratios.len().saturating_sub(1) {
        let step = ratios[k + 1] - ratios[k];
        margin = margin.min(step);
        if step < -3.0 * (errors[k] + errors[k + 1]) {
            monotone = false;
        }
    }
    Ok(DensityProfile {
        center: center.to_vec(),
        radii: radii.to_vec(),
        volumes,
        ratios,
        errors,
        monotonicity_margin: margin,
        monotone,
    })
}

/// Outcome of the bounded-2-dilation volume growth check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub radii: Vec<f64>,
    /// `H^n(M ∩ B_r) / (ωₙ rⁿ)`
    pub ratios: Vec<f64>,
    /// `sup ratio / √m`
    pub constant: f64,
    /// Finite and `last / first ≤ 1.5`.
    pub bounded: bool,
    pub max_dilation: f64,
}

/// Nodes per axis of the dilation sampling grid.
fn dilation_nodes(n: usize) -> usize {
    if n >= 4 {
        11
    } else {
        21
    }
}

/// Samples the 2-dilation over the quadrature box of the largest ball,
/// failing at the first grid point above Λ, then measures volume ratios of
/// balls centred at the graph point over the origin.
pub fn volume_growth_bound_check(
    model: &AnalyticModel,
    big_lambda: f64,
    radii: &[f64],
    resolution: usize,
) -> Result<GrowthCheck> {
    if !(big_lambda >= 0.0 && big_lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("Λ = {big_lambda} must be finite and ≥ 0")));
    }
    check_radii(radii)?;
    let n = model.n();
    let r_max = *radii.last().expect("non-empty");
    let k = dilation_nodes(n);
    let total = k.pow(n as u32);
    let dilations = map_indexed(total, |idx| -> Result<Option<(f64, Vec<f64>)>> {
        let mut x = vec![0.0; n];
        let mut r = idx;
        for i in (0..n).rev() {
            x[i] = -r_max + 2.0 * r_max * (r % k) as f64 / (k - 1) as f64;
            r /= k;
        }
        if !model.in_domain(&x) {
            return Ok(None);
        }
        let s = crate::grassmann::singular_spectrum(&model.jacobian_sample(&x)?);
        Ok(Some((crate::grassmann::two_dilation(&s), x)))
    });
    let mut max_dilation = 0.0f64;
    for d in dilations {
        if let Some((dil, x)) = d? {
            if dil > big_lambda * (1.0 + 1e-12) {
                return Err(Error::DilationViolated {
                    point: x,
                    dilation: dil,
                    bound: big_lambda,
                });
            }
            max_dilation = max_dilation.max(dil);
        }
    }
    let center = graph_point(model, &vec![0.0; n])?;
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let rep = graph_volume(model, &Ball::new(center.clone(), r)?, resolution)?;
        ratios.push(rep.value / (omega(n) * r.powi(n as i32)));
    }
    let sup = ratios.iter().cloned().fold(0.0, f64::max);
    let constant = sup / (model.m() as f64).sqrt();
    let bounded = constant.is_finite() && ratios[ratios.len() - 1] <= 1.5 * ratios[0];
    Ok(GrowthCheck {
        radii: radii.to_vec(),
        ratios,
        constant,
        bounded,
        max_dilation,
    })
}

/// Largest slope and Lipschitz constant of a blow-down over `[−1, 1]ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowDownSample {
    pub scale: f64,
    pub max_v: f64,
    pub max_lip: f64,
}

/// Evaluates `x ↦ u(r x)/r` for each scale on a `nodes`-per-axis grid of
/// the unit box. Slopes that keep growing with r indicate that the tangent
/// cone at infinity is not a graph (the `v → ∞` scenario).
pub fn blow_down_indicator(model: &AnalyticModel, scales: &[f64], nodes: usize) -> Result<Vec<BlowDownSample>> {
    if nodes < 2 {
        return Err(Error::InvalidInput("need at least 2 nodes per axis".into()));
    }
    let n = model.n();
    let total = nodes.pow(n as u32);
    scales
        .iter()
        .map(|&r| {
            let scaled = crate::model_zoo::blow_down(model, r)?;
            let per_point = map_indexed(total, |idx| -> Result<Option<(f64, f64)>> {
                let mut x = vec![0.0; n];
                let mut q = idx;
                for i in (0..n).rev() {
                    x[i] = -1.0 + 2.0 * (q % nodes) as f64 / (nodes - 1) as f64;
                    q /= nodes;
                }
                if !scaled.in_domain(&x) {
                    return Ok(None);
                }
                let s = crate::grassmann::singular_spectrum(&scaled.jacobian_sample(&x)?);
                Ok(Some((crate::grassmann::slope(&s), s.lip())))
            });
            let (mut max_v, mut max_lip) = (0.0f64, 0.0f64);
            for p in per_point {
                if let Some((v, l)) = p? {
                    max_v = max_v.max(v);
                    max_lip = max_lip.max(l);
                }
            }
            Ok(BlowDownSample {
                scale: r,
                max_v,
                max_lip,
            })
        })
        .collect()
}

/// True when the maximal slope grows by at least `factor` across the
/// sampled scales and never decreases.
pub fn slope_diverges(samples: &[BlowDownSample], factor: f64) -> bool {
    samples.len() >= 2
        && samples.windows(2).all(|w| w[1].max_v >= w[0].max_v)
        && samples[samples.len() - 1].max_v >= factor * samples[0].max_v
}
