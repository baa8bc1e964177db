//! Second fundamental form, `|B|²`, and both sides of the Δ log v identity
//! on analytic models and on grid patches.
//!
//! Adapted frames come from a full SVD `J = U Σ Vᵀ`: in the rotated
//! coordinates `x = V x'`, `u' = Uᵀ u` the Jacobian is diagonal and
//! `h_{α,ij} = ∂ᵢ∂ⱼu'^α / √((1 + λᵢ²)(1 + λⱼ²)(1 + λ_α²))`, with `λ_α = 0`
//! past the rank.
//!
//! The intrinsic Laplacian of a scalar `f` is evaluated in divergence form
//! `(1/v) Σᵢ ∂ᵢ(v g^{ij} ∂ⱼ f)`. For `f = log v` and `f = v⁻¹` the flux is
//! exact in terms of the Jacobian and Hessian, so only the outer derivative
//! is a central difference.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{grad_logv_sq, logv_rhs_terms, sqrt2_hypothesis, sqrt2_lower_bound, HCoefficients};
use crate::error::{Error, Result};
use crate::linalg::full_svd;
use crate::measure::{ball_quadrature, Ball};
use crate::model_zoo::{AnalyticModel, Hessian, Jet, Order};
use crate::par::map_indexed;
use crate::patch::GraphPatch;
use crate::solver::{check_interior, metric_of, node_derivatives, offset_node};

/// Relative singular-value gap below which two directions count as tied.
const TIE_GAP: f64 = 1e-6;

/// Step of the finite-difference Gauss map.
const GAUSS_STEP: f64 = 1e-4;

/// `h_{α,ij}` in an SVD-adapted frame, with the frame that produced it.
#[derive(Debug, Clone)]
pub struct SffTensor {
    pub h: HCoefficients,
    /// Fiber frame (m×m).
    pub u: DMatrix<f64>,
    /// Domain frame (n×n).
    pub v: DMatrix<f64>,
    /// Length n, descending, zero past the rank.
    pub spectrum: Vec<f64>,
    /// `|Σh² − |B|²|` where `|B|²` comes from the frame-free formula, and,
    /// when the spectrum has near-ties, the largest change of `Σh²` under a
    /// rotation of the tied frame vectors.
    pub frame_defect: f64,
}

impl SffTensor {
    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn m(&self) -> usize {
        self.h.m()
    }

    pub fn bnorm_sq(&self) -> f64 {
        self.h.norm_sq()
    }
}

/// Deterministic signs: the largest-magnitude entry of each domain frame
/// vector is positive, fiber vectors follow through `J vᵢ = λᵢ uᵢ`, and
/// the remaining fiber vectors are normalized the same way.
fn normalize_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>, rank: usize) {
    fn lead_sign(c: nalgebra::DVectorView<f64>) -> f64 {
        let mut best = 0.0f64;
        for x in c.iter() {
            if x.abs() > best.abs() + 1e-12 {
                best = *x;
            }
        }
        if best < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
    for i in 0..v.ncols() {
        let s = lead_sign(v.column(i));
        if s < 0.0 {
            v.column_mut(i).neg_mut();
            if i < rank {
                u.column_mut(i).neg_mut();
            }
        }
    }
    for a in rank..u.ncols() {
        if lead_sign(u.column(a)) < 0.0 {
            u.column_mut(a).neg_mut();
        }
    }
}

fn adapted_h(hess: &Hessian, u: &DMatrix<f64>, v: &DMatrix<f64>, spectrum: &[f64]) -> HCoefficients {
    let (n, m) = (v.ncols(), u.ncols());
    let rotated: Vec<DMatrix<f64>> = hess.iter().map(|h| v.transpose() * h * v).collect();
    let lam = |k: usize| if k < n { spectrum[k] } else { 0.0 };
    HCoefficients::from_fn(n, m, |a, i, j| {
        let d: f64 = (0..m).map(|b| u[(b, a)] * rotated[b][(i, j)]).sum();
        let scale = (1.0 + lam(i).powi(2)) * (1.0 + lam(j).powi(2)) * (1.0 + lam(a).powi(2));
        d / scale.sqrt()
    })
}

/// `|B|² = Σ g^{ik} g^{jl} ⟨H_{ij}, N H_{kl}⟩` with `N = (I + J Jᵀ)⁻¹`,
/// frame-free.
pub fn bnorm_sq_from_jet(jacobian: &DMatrix<f64>, hess: &Hessian) -> f64 {
    let (m, n) = jacobian.shape();
    let g_inv = metric_of(jacobian).g_inv;
    let normal = (DMatrix::identity(m, m) + jacobian * jacobian.transpose())
        .cholesky()
        .expect("I + J Jᵀ is positive definite")
        .inverse();
    // raised[α] = g⁻¹ H^α g⁻¹
    let raised: Vec<DMatrix<f64>> = hess.iter().map(|h| &g_inv * h * &g_inv).collect();
    let mut total = 0.0;
    for a in 0..m {
        for b in 0..m {
            if normal[(a, b)] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += raised[a][(i, j)] * hess[b][(i, j)];
                }
            }
            total += normal[(a, b)] * s;
        }
    }
    total
}

/// Adapted second fundamental form from a Jacobian and Hessian.
pub fn sff_from_jet(jacobian: &DMatrix<f64>, hess: &Hessian) -> SffTensor {
    let svd = full_svd(jacobian);
    let (m, n) = jacobian.shape();
    let rank = m.min(n);
    let (mut u, mut v) = (svd.u, svd.v);
    normalize_signs(&mut u, &mut v, rank);
    let spectrum = svd.values;
    let h = adapted_h(hess, &u, &v, &spectrum);

    let reference = bnorm_sq_from_jet(jacobian, hess);
    let mut defect = (h.norm_sq() - reference).abs();
    // rotate each tied pair of directions and recompute
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (spectrum[i], spectrum[i + 1]);
        if (a - b).abs() > TIE_GAP * a.max(1.0) {
            continue;
        }
        let (s, c) = 0.3f64.sin_cos();
        let mut v2 = v.clone();
        let (vi, vj) = (v.column(i).into_owned(), v.column(i + 1).into_owned());
        v2.set_column(i, &(&vi * c + &vj * s));
        v2.set_column(i + 1, &(&vj * c - &vi * s));
        let mut u2 = u.clone();
        // fiber partners exist only inside the rank
        if i + 1 < rank {
            let (ui, uj) = (u.column(i).into_owned(), u.column(i + 1).into_owned());
            u2.set_column(i, &(&ui * c + &uj * s));
            u2.set_column(i + 1, &(&uj * c - &ui * s));
        }
        let h2 = adapted_h(hess, &u2, &v2, &spectrum);
        defect = defect.max((h2.norm_sq() - h.norm_sq()).abs());
    }
    SffTensor {
        h,
        u,
        v,
        spectrum,
        frame_defect: defect,
    }
}

pub fn sff_at(model: &AnalyticModel, x: &[f64]) -> Result<SffTensor> {
    let jet = model.jet(x, Order::Second)?;
    Ok(sff_from_jet(&jet.jacobian, &jet.hessian))
}

pub fn bnorm_sq(model: &AnalyticModel, x: &[f64]) -> Result<f64> {
    let jet = model.jet(x, Order::Second)?;
    Ok(bnorm_sq_from_jet(&jet.jacobian, &jet.hessian))
}

fn tangent_projector(jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = jacobian.shape();
    let mut t = DMatrix::zeros(n + m, n);
    t.view_mut((0, 0), (n, n)).fill_with_identity();
    t.view_mut((n, 0), (m, n)).copy_from(jacobian);
    let g_inv = metric_of(jacobian).g_inv;
    &t * g_inv * t.transpose()
}

/// `|dγ|²` of the Gauss map `x ↦ P(x)` (orthogonal projector onto the
/// tangent plane) by central differences:
/// `|dγ|² = ½ Σ g^{ij} ⟨∂ᵢP, ∂ⱼP⟩_F`.
pub fn gauss_map_energy(model: &AnalyticModel, x: &[f64]) -> Result<f64> {
    let n = model.n();
    let jac = model.jacobian(x)?;
    let g_inv = metric_of(&jac).g_inv;
    let mut dp = Vec::with_capacity(n);
    for i in 0..n {
        let h = GAUSS_STEP * x[i].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let pp = tangent_projector(&model.jacobian(&xp)?);
        let pm = tangent_projector(&model.jacobian(&xm)?);
        dp.push((pp - pm) / (2.0 * h));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += g_inv[(i, j)] * dp[i].dot(&dp[j]);
        }
    }
    Ok(0.5 * total)
}

/// `∂ⱼ log v = Σ_α (J g⁻¹ H^α)_{αj}`.
fn grad_log_v(jacobian: &DMatrix<f64>, hess: &Hessian, g_inv: &DMatrix<f64>) -> DVector<f64> {
    let n = jacobian.ncols();
    let jg = jacobian * g_inv;
    let mut out = DVector::zeros(n);
    for (a, h) in hess.iter().enumerate() {
        out += (jg.row(a) * h).transpose();
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Flux {
    /// `v g^{ij} ∂ⱼ log v`
    LogV,
    /// `v g^{ij} ∂ⱼ v⁻¹ = −g^{ij} ∂ⱼ log v`
    InverseV,
}

fn flux(jacobian: &DMatrix<f64>, hess: &Hessian, kind: Flux) -> DVector<f64> {
    let metric = metric_of(jacobian);
    let grad = grad_log_v(jacobian, hess, &metric.g_inv);
    let raised = &metric.g_inv * grad;
    match kind {
        Flux::LogV => raised * metric.v,
        Flux::InverseV => -raised,
    }
}

fn model_laplacian(model: &AnalyticModel, x: &[f64], h_fd: f64, kind: Flux) -> Result<f64> {
    if !(h_fd > 0.0 && h_fd.is_finite()) {
        return Err(Error::InvalidInput(format!("finite-difference step {h_fd} must be > 0")));
    }
    let centre = model.jet(x, Order::First)?;
    let v = metric_of(&centre.jacobian).v;
    let mut div = 0.0;
    for i in 0..model.n() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h_fd;
        xm[i] -= h_fd;
        let jp = model.jet(&xp, Order::Second)?;
        let jm = model.jet(&xm, Order::Second)?;
        div += (flux(&jp.jacobian, &jp.hessian, kind)[i] - flux(&jm.jacobian, &jm.hessian, kind)[i])
            / (2.0 * h_fd);
    }
    Ok(div / v)
}

/// Both sides of the Δ log v identity at one point, with the inequality
/// margins that apply there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogVReport {
    pub point: Vec<f64>,
    pub v: f64,
    pub lip: f64,
    pub dilation: f64,
    pub bnorm_sq: f64,
    /// Intrinsic Laplacian of log v.
    pub lhs: f64,
    /// `|B|² + Σ λᵢ² h_{i,ij}² + Σ_{l, i≠j} λᵢλⱼ h_{i,jl} h_{j,il}`
    pub rhs: f64,
    pub gap: f64,
    /// `rhs − |B|²`; nonnegative whenever n = 2.
    pub margin_delta1: f64,
    /// `rhs − (Σ_{α>n} h² + Σ (1 + λᵢ²) h_{i,ii}²)` where `λ₁²λᵢ² ≤ 2 + λᵢ²`.
    pub margin_sqrt2: Option<f64>,
    /// `rhs − (1 − Λ/√2)|B|² − |∇ log v|²/n` with `Λ = λ₁λ₂` where `Λ < √2`.
    pub margin_lambda: Option<f64>,
}

fn assemble_report(point: Vec<f64>, sff: &SffTensor, lhs: f64) -> LogVReport {
    let lambda = &sff.spectrum;
    let n = lambda.len();
    let rhs = logv_rhs_terms(lambda, &sff.h).direct;
    let b2 = sff.bnorm_sq();
    let dilation = if n > 1 { lambda[0] * lambda[1] } else { 0.0 };
    let margin_sqrt2 = sqrt2_hypothesis(lambda).then(|| rhs - sqrt2_lower_bound(lambda, &sff.h));
    let margin_lambda = (dilation < SQRT_2).then(|| {
        rhs - (1.0 - dilation / SQRT_2) * b2 - grad_logv_sq(lambda, &sff.h) / n as f64
    });
    LogVReport {
        point,
        v: lambda.iter().map(|l| (1.0 + l * l).sqrt()).product(),
        lip: lambda.first().copied().unwrap_or(0.0),
        dilation,
        bnorm_sq: b2,
        lhs,
        rhs,
        gap: lhs - rhs,
        margin_delta1: rhs - b2,
        margin_sqrt2,
        margin_lambda,
    }
}

pub fn logv_identity(model: &AnalyticModel, x: &[f64], h_fd: f64) -> Result<LogVReport> {
    let lhs = model_laplacian(model, x, h_fd, Flux::LogV)?;
    let sff = sff_at(model, x)?;
    Ok(assemble_report(x.to_vec(), &sff, lhs))
}

/// `Δ_M v⁻¹ = −v⁻¹ (Σh² + Σ λᵢλⱼ h_{i,jl} h_{j,il} − Σ λᵢλⱼ h_{i,il} h_{j,jl})`
/// from adapted coefficients; `λ` has length n.
pub fn deltav_inverse_from(lambda: &[f64], h: &HCoefficients) -> Result<f64> {
    let n = h.n();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("spectrum of length {n}"),
            got: format!("{}", lambda.len()),
        });
    }
    let v: f64 = lambda.iter().map(|l| (1.0 + l * l).sqrt()).product();
    let mut cross = 0.0;
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ll = lambda[i] * lambda[j];
            if ll == 0.0 {
                continue;
            }
            for l in 0..n {
                cross += ll * h.get(i, j, l) * h.get(j, i, l);
                trace += ll * h.get(i, i, l) * h.get(j, j, l);
            }
        }
    }
    Ok(-(h.norm_sq() + cross - trace) / v)
}

pub fn deltav_inverse(model: &AnalyticModel, x: &[f64]) -> Result<f64> {
    let sff = sff_at(model, x)?;
    deltav_inverse_from(&sff.spectrum, &sff.h)
}

/// Divergence-form intrinsic Laplacian of `v⁻¹` with an exact flux and a
/// central outer difference.
pub fn deltav_inverse_fd(model: &AnalyticModel, x: &[f64], h_fd: f64) -> Result<f64> {
    model_laplacian(model, x, h_fd, Flux::InverseV)
}

/// Log v identity at an interior patch node at least two layers from the
/// boundary, with all derivatives from grid differences.
pub fn logv_identity_patch(patch: &GraphPatch, idx: &[usize]) -> Result<LogVReport> {
    check_interior(patch, idx)?;
    if idx.iter().zip(patch.dims()).any(|(&i, &d)| i < 2 || i + 2 >= d) {
        return Err(Error::Stencil(idx.to_vec()));
    }
    let node = patch.linear_index(idx);
    let h = patch.spacing();
    let (jac, hess) = node_derivatives(patch, node);
    let v = metric_of(&jac).v;
    let mut div = 0.0;
    for i in 0..patch.n() {
        let p = offset_node(patch, node, &[(i, 1)]);
        let q = offset_node(patch, node, &[(i, -1)]);
        let (jp, hp) = node_derivatives(patch, p);
        let (jq, hq) = node_derivatives(patch, q);
        div += (flux(&jp, &hp, Flux::LogV)[i] - flux(&jq, &hq, Flux::LogV)[i]) / (2.0 * h);
    }
    let sff = sff_from_jet(&jac, &hess);
    Ok(assemble_report(patch.coords(idx), &sff, div / v))
}

/// `∫_{M ∩ B_ρ} |B|²` for each radius, with the quadrature error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIntegral {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of log value against log ρ; `None` when any
    /// value is zero.
    pub slope: Option<f64>,
}

pub fn curvature_integral(
    model: &AnalyticModel,
    center: &[f64],
    radii: &[f64],
    resolution: usize,
) -> Result<CurvatureIntegral> {
    let weight = |jet: &Jet| bnorm_sq_from_jet(&jet.jacobian, &jet.hessian);
    let mut values = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = Ball::new(center.to_vec(), r)?;
        let q = ball_quadrature(model, &ball, resolution, Order::Second, &weight)?;
        values.push(q.value);
        errors.push(q.error);
    }
    let slope = log_log_slope(radii, &values);
    Ok(CurvatureIntegral {
        center: center.to_vec(),
        radii: radii.to_vec(),
        values,
        errors,
        slope,
    })
}

pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || y.iter().chain(x).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Random evaluation points for batch diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PointSampler {
    /// Uniform in `inner ≤ |x| ≤ outer` (rejection from the cube).
    Annulus { count: usize, inner: f64, outer: f64 },
    /// Uniform in `[lower, upper]ⁿ`.
    Box { count: usize, lower: f64, upper: f64 },
}

impl PointSampler {
    pub fn points(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            PointSampler::Annulus { count, inner, outer } => {
                if !(0.0 <= inner && inner < outer && outer.is_finite()) {
                    return Err(Error::InvalidInput(format!("annulus [{inner}, {outer}]")));
                }
                let mut pts = Vec::with_capacity(count);
                while pts.len() < count {
                    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-outer..=outer)).collect();
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if (inner..=outer).contains(&r) {
                        pts.push(x);
                    }
                }
                Ok(pts)
            }
            PointSampler::Box { count, lower, upper } => {
                if !(lower < upper && lower.is_finite() && upper.is_finite()) {
                    return Err(Error::InvalidInput(format!("box [{lower}, {upper}]")));
                }
                Ok((0..count)
                    .map(|_| (0..n).map(|_| rng.random_range(lower..=upper)).collect())
                    .collect())
            }
        }
    }
}

pub const CSV_COLUMNS: &[&str] = &[
    "v",
    "lip",
    "dilation",
    "B2",
    "lhs",
    "rhs",
    "gap",
    "margin_lambda",
];

/// Header `x0,…,x{n-1},v,lip,dilation,B2,lhs,rhs,gap,margin_lambda`.
pub fn csv_header(n: usize) -> String {
    let mut cols: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    cols.extend(CSV_COLUMNS.iter().map(|c| c.to_string()));
    cols.join(",")
}

/// One CSV row; an inapplicable Λ margin is left empty. Floats use Rust's
/// shortest round-trip formatting so rows are reproducible bit for bit.
pub fn csv_row(r: &LogVReport) -> String {
    let mut s = String::new();
    for x in &r.point {
        write!(s, "{x},").unwrap();
    }
    write!(
        s,
        "{},{},{},{},{},{},{},",
        r.v, r.lip, r.dilation, r.bnorm_sq, r.lhs, r.rhs, r.gap
    )
    .unwrap();
    if let Some(m) = r.margin_lambda {
        write!(s, "{m}").unwrap();
    }
    s
}

/// Reports at many points, in input order.
pub fn logv_identity_batch(model: &AnalyticModel, points: &[Vec<f64>], h_fd: f64) -> Result<Vec<LogVReport>> {
    map_indexed(points.len(), |k| logv_identity(model, &points[k], h_fd))
        .into_iter()
        .collect()
}
