//! Finite-difference discretization and damped Newton solve of the minimal
//! surface system `Σ g^{ij} ∂ᵢ∂ⱼu^α = 0`, `g = I + DuᵀDu`, on uniform grid
//! patches with Dirichlet data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::JacobianSample;
use crate::linalg::BandedMatrix;
use crate::model_zoo::Hessian;
use crate::par::{map_indexed, pairwise_sum};
use crate::patch::GraphPatch;

/// Induced metric at a point, with its inverse and `v = √det g`.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub v: f64,
}

pub fn metric_at(j: &JacobianSample) -> MetricSample {
    metric_of(j.matrix())
}

pub(crate) fn metric_of(j: &DMatrix<f64>) -> MetricSample {
    let g = DMatrix::identity(j.ncols(), j.ncols()) + j.transpose() * j;
    let chol = g.clone().cholesky().expect("I + JᵀJ is positive definite");
    let v = chol.l_dirty().diagonal().iter().product::<f64>();
    let g_inv = chol.inverse();
    MetricSample { g, g_inv, v }
}

/// `Σ_{ij} g^{ij} ∂²u^α/∂xᵢ∂xⱼ` for each α.
pub fn residual_strong(j: &DMatrix<f64>, hessian: &Hessian) -> DVector<f64> {
    let g_inv = metric_of(j).g_inv;
    DVector::from_iterator(hessian.len(), hessian.iter().map(|h| g_inv.dot(h)))
}

/// `(I_m + J Jᵀ)⁻¹ r`: the fiber component of the normal projection of
/// `(0, r)`. The divergence form `Δ_M u^α` equals this applied to the strong
/// residual, so both vanish together.
pub fn normal_projected(j: &DMatrix<f64>, strong: &DVector<f64>) -> DVector<f64> {
    let m = j.nrows();
    let a = DMatrix::identity(m, m) + j * j.transpose();
    a.cholesky().expect("SPD").solve(strong)
}

pub(crate) fn check_interior(patch: &GraphPatch, idx: &[usize]) -> Result<()> {
    if idx.len() != patch.n() || idx.iter().zip(patch.dims()).any(|(&i, &d)| i >= d) {
        return Err(Error::InvalidInput(format!("node {idx:?} is not on the grid")));
    }
    if patch.is_boundary(idx) {
        return Err(Error::Stencil(idx.to_vec()));
    }
    Ok(())
}

pub(crate) fn offset_node(patch: &GraphPatch, node: usize, steps: &[(usize, isize)]) -> usize {
    let strides = patch.strides();
    let mut out = node as isize;
    for &(axis, s) in steps {
        out += s * strides[axis] as isize;
    }
    out as usize
}

/// Central-difference Jacobian and Hessian at an interior node.
pub(crate) fn node_derivatives(patch: &GraphPatch, node: usize) -> (DMatrix<f64>, Hessian) {
    let (n, m, h) = (patch.n(), patch.m(), patch.spacing());
    let u = |nd: usize, a: usize| patch.node(nd)[a];
    let mut jac = DMatrix::zeros(m, n);
    let mut hess = vec![DMatrix::zeros(n, n); m];
    for k in 0..n {
        let p = offset_node(patch, node, &[(k, 1)]);
        let q = offset_node(patch, node, &[(k, -1)]);
        for a in 0..m {
            jac[(a, k)] = (u(p, a) - u(q, a)) / (2.0 * h);
            hess[a][(k, k)] = (u(p, a) - 2.0 * u(node, a) + u(q, a)) / (h * h);
        }
        for l in k + 1..n {
            let pp = offset_node(patch, node, &[(k, 1), (l, 1)]);
            let pm = offset_node(patch, node, &[(k, 1), (l, -1)]);
            let mp = offset_node(patch, node, &[(k, -1), (l, 1)]);
            let mm = offset_node(patch, node, &[(k, -1), (l, -1)]);
            for a in 0..m {
                let v = (u(pp, a) - u(pm, a) - u(mp, a) + u(mm, a)) / (4.0 * h * h);
                hess[a][(k, l)] = v;
                hess[a][(l, k)] = v;
            }
        }
    }
    (jac, hess)
}

/// Discrete strong residual at one interior node.
pub fn residual_at_node(patch: &GraphPatch, idx: &[usize]) -> Result<DVector<f64>> {
    check_interior(patch, idx)?;
    let (j, h) = node_derivatives(patch, patch.linear_index(idx));
    Ok(residual_strong(&j, &h))
}

/// Divergence form `(1/v) Σᵢ ∂ᵢ(v g^{ij} ∂ⱼu^α)` at an interior node.
///
/// Fluxes live on the half-points `x ± h eᵢ/2`; the normal derivative there
/// is a one-sided difference and the tangential ones average the two
/// adjacent central differences, so the stencil stays within the 3ⁿ
/// neighbourhood and the scheme is second order.
pub fn residual_divergence(patch: &GraphPatch, idx: &[usize]) -> Result<DVector<f64>> {
    check_interior(patch, idx)?;
    let (n, m, h) = (patch.n(), patch.m(), patch.spacing());
    let node = patch.linear_index(idx);
    let u = |nd: usize, a: usize| patch.node(nd)[a];

    // Jacobian at the half point between `lo` and `lo + e_axis`
    let half_jac = |lo: usize, axis: usize| {
        let hi = offset_node(patch, lo, &[(axis, 1)]);
        let mut j = DMatrix::zeros(m, n);
        for a in 0..m {
            j[(a, axis)] = (u(hi, a) - u(lo, a)) / h;
        }
        for t in (0..n).filter(|&t| t != axis) {
            let lp = offset_node(patch, lo, &[(t, 1)]);
            let lm = offset_node(patch, lo, &[(t, -1)]);
            let hp = offset_node(patch, hi, &[(t, 1)]);
            let hm = offset_node(patch, hi, &[(t, -1)]);
            for a in 0..m {
                j[(a, t)] = (u(lp, a) - u(lm, a) + u(hp, a) - u(hm, a)) / (4.0 * h);
            }
        }
        j
    };
    let flux = |j: &DMatrix<f64>, axis: usize| -> DVector<f64> {
        let met = metric_of(j);
        // v g^{axis, j} ∂_j u^α
        let row = met.g_inv.row(axis).transpose() * met.v;
        j * row
    };

    let mut div = DVector::zeros(m);
    for axis in 0..n {
        let lower = offset_node(patch, node, &[(axis, -1)]);
        let plus = flux(&half_jac(node, axis), axis);
        let minus = flux(&half_jac(lower, axis), axis);
        div += (plus - minus) / h;
    }
    let (j_node, _) = node_derivatives(patch, node);
    Ok(div / metric_of(&j_node).v)
}

/// Discrete strong residual at every node (zero on the boundary layer).
pub fn residual_field(patch: &GraphPatch) -> Vec<f64> {
    let m = patch.m();
    let per_node = map_indexed(patch.node_count(), |node| {
        let idx = patch.multi_index(node);
        if patch.is_boundary(&idx) {
            vec![0.0; m]
        } else {
            let (j, h) = node_derivatives(patch, node);
            residual_strong(&j, &h).as_slice().to_vec()
        }
    });
    per_node.concat()
}

pub fn residual_sup(patch: &GraphPatch) -> f64 {
    residual_field(patch).iter().fold(0.0, |acc, r| acc.max(r.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Newton,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: StepKind,
    /// Damping factor applied to the step (1 = full step).
    pub factor: f64,
    /// Residual sup-norm after the step.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub diverged: bool,
    pub damping: Vec<StepRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Interior unknown numbering: node ↦ position among interior nodes.
struct Unknowns {
    index: Vec<Option<usize>>,
    nodes: Vec<usize>,
    band: usize,
}

impl Unknowns {
    fn new(patch: &GraphPatch) -> Self {
        let mut index = vec![None; patch.node_count()];
        let mut nodes = Vec::new();
        for node in 0..patch.node_count() {
            if !patch.is_boundary(&patch.multi_index(node)) {
                index[node] = Some(nodes.len());
                nodes.push(node);
            }
        }
        // interior strides of the (dims − 2) box
        let dims: Vec<usize> = patch.dims().iter().map(|d| d - 2).collect();
        let mut span = 0;
        let mut stride = 1;
        for d in dims.iter().rev() {
            span += stride;
            stride *= d;
        }
        let m = patch.m();
        Self {
            index,
            nodes,
            band: span * m + m - 1,
        }
    }
}

/// Transfinite (Boolean-sum multilinear) interpolation of the boundary
/// layer into the interior; exact for affine data.
pub fn interpolate_boundary(patch: &mut GraphPatch) {
    let n = patch.n();
    let m = patch.m();
    let dims = patch.dims().to_vec();
    let mut updates = Vec::new();
    for node in 0..patch.node_count() {
        let idx = patch.multi_index(node);
        if patch.is_boundary(&idx) {
            continue;
        }
        let t: Vec<f64> = idx
            .iter()
            .zip(&dims)
            .map(|(&i, &d)| i as f64 / (d - 1) as f64)
            .collect();
        let mut acc = vec![0.0; m];
        for subset in 1u32..(1 << n) {
            let axes: Vec<usize> = (0..n).filter(|k| subset & (1 << k) != 0).collect();
            let sign = if axes.len() % 2 == 1 { 1.0 } else { -1.0 };
            for corner in 0u32..(1 << axes.len()) {
                let mut at = idx.clone();
                let mut w = sign;
                for (bit, &k) in axes.iter().enumerate() {
                    if corner & (1 << bit) != 0 {
                        at[k] = dims[k] - 1;
                        w *= t[k];
                    } else {
                        at[k] = 0;
                        w *= 1.0 - t[k];
                    }
                }
                let src = patch.node(patch.linear_index(&at));
                for a in 0..m {
                    acc[a] += w * src[a];
                }
            }
        }
        updates.push((node, acc));
    }
    for (node, v) in updates {
        patch.node_mut(node).copy_from_slice(&v);
    }
}

/// Sparse rows for one node: `(row α, neighbour node, component, value)`.
type NodeRows = Vec<(usize, usize, usize, f64)>;

fn assemble_node(patch: &GraphPatch, node: usize, newton: bool) -> (Vec<f64>, NodeRows) {
    let (n, m, h) = (patch.n(), patch.m(), patch.spacing());
    let (jac, hess) = node_derivatives(patch, node);
    let g_inv = metric_of(&jac).g_inv;
    let f: Vec<f64> = hess.iter().map(|ha| g_inv.dot(ha)).collect();
    let mut rows = Vec::new();
    let h2 = h * h;
    for a in 0..m {
        for k in 0..n {
            let c = g_inv[(k, k)] / h2;
            rows.push((a, offset_node(patch, node, &[(k, 1)]), a, c));
            rows.push((a, offset_node(patch, node, &[(k, -1)]), a, c));
            rows.push((a, node, a, -2.0 * c));
            for l in k + 1..n {
                let c = 2.0 * g_inv[(k, l)] / (4.0 * h2);
                rows.push((a, offset_node(patch, node, &[(k, 1), (l, 1)]), a, c));
                rows.push((a, offset_node(patch, node, &[(k, 1), (l, -1)]), a, -c));
                rows.push((a, offset_node(patch, node, &[(k, -1), (l, 1)]), a, -c));
                rows.push((a, offset_node(patch, node, &[(k, -1), (l, -1)]), a, c));
            }
        }
    }
    if newton {
        // ∂F^α/∂J^β_k = −2 (K^α Jᵀ)_{kβ},  K^α = g⁻¹ H^α g⁻¹
        for a in 0..m {
            let k_a = &g_inv * &hess[a] * &g_inv;
            let t = k_a * jac.transpose() * -2.0;
            for k in 0..n {
                let p = offset_node(patch, node, &[(k, 1)]);
                let q = offset_node(patch, node, &[(k, -1)]);
                for b in 0..m {
                    let c = t[(k, b)] / (2.0 * h);
                    rows.push((a, p, b, c));
                    rows.push((a, q, b, -c));
                }
            }
        }
    }
    (f, rows)
}

fn linear_step(patch: &GraphPatch, unk: &Unknowns, newton: bool) -> Result<Vec<f64>> {
    let m = patch.m();
    let size = unk.nodes.len() * m;
    let assembled = map_indexed(unk.nodes.len(), |i| assemble_node(patch, unk.nodes[i], newton));
    let mut mat = BandedMatrix::zeros(size, unk.band, unk.band);
    let mut rhs = vec![0.0; size];
    for (i, (f, rows)) in assembled.into_iter().enumerate() {
        for a in 0..m {
            rhs[i * m + a] = -f[a];
        }
        for (a, nb, b, val) in rows {
            if let Some(col) = unk.index[nb] {
                mat.add(i * m + a, col * m + b, val);
            }
        }
    }
    mat.solve(&rhs)
}

fn apply_step(patch: &GraphPatch, unk: &Unknowns, delta: &[f64], factor: f64) -> GraphPatch {
    let m = patch.m();
    let mut out = patch.clone();
    for (i, &node) in unk.nodes.iter().enumerate() {
        for (a, v) in out.node_mut(node).iter_mut().enumerate() {
            *v += factor * delta[i * m + a];
        }
    }
    out
}

/// Solves for the interior values of `patch` given its boundary layer.
///
/// Damped Newton on the nondivergence form, halving the step up to 30 times
/// until the residual sup-norm decreases, with a frozen-coefficient Picard
/// step when no damped Newton step helps. Stops as diverged when the
/// residual stays above 10× the best value for 20 consecutive iterations;
/// the patch is always left at the best iterate.
pub fn solve(patch: &mut GraphPatch, opts: SolveOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be > 0", opts.tol)));
    }
    crate::error::ensure_finite(patch.values(), "boundary data")?;
    interpolate_boundary(patch);
    let unk = Unknowns::new(patch);

    let mut residual = residual_sup(patch);
    let mut best = (residual, patch.clone());
    let mut damping = Vec::new();
    let mut iterations = 0;
    let mut stalled = 0;
    let mut diverged = false;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let mut accepted = None;
        if let Ok(delta) = linear_step(patch, &unk, true) {
            let mut factor = 1.0;
            for _ in 0..=30 {
                let trial = apply_step(patch, &unk, &delta, factor);
                let r = residual_sup(&trial);
                if r < residual {
                    accepted = Some((trial, r, factor));
                    break;
                }
                factor *= 0.5;
            }
        }
        let (next, r, record) = match accepted {
            Some((trial, r, factor)) => (trial, r, StepRecord { kind: StepKind::Newton, factor, residual: r }),
            None => {
                let delta = linear_step(patch, &unk, false)?;
                let trial = apply_step(patch, &unk, &delta, 1.0);
                let r = residual_sup(&trial);
                (trial, r, StepRecord { kind: StepKind::Picard, factor: 1.0, residual: r })
            }
        };
        *patch = next;
        residual = r;
        damping.push(record);
        if !residual.is_finite() {
            diverged = true;
            break;
        }
        if residual < best.0 {
            best = (residual, patch.clone());
        }
        if residual > 10.0 * best.0 {
            stalled += 1;
            if stalled >= 20 {
                diverged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    if best.0 < residual || !residual.is_finite() {
        *patch = best.1;
        residual = best.0;
    }
    Ok(SolveReport {
        iterations,
        residual,
        converged: residual <= opts.tol,
        diverged,
        damping,
    })
}

/// Weak-form defect of component α.
///
/// For each interior node the piecewise-multilinear hat function φ is used
/// as test function; the integral `Σᵢⱼ ∫ v g^{ij} ∂ᵢu^α ∂ⱼφ` is evaluated
/// with the cell-centre rule and normalized by `∫ v φ`. Returns the maximum
/// absolute value over all hats.
pub fn weak_harmonicity_defect(patch: &GraphPatch, alpha: usize) -> Result<f64> {
    if alpha >= patch.m() {
        return Err(Error::InvalidInput(format!(
            "component {alpha} out of range for m = {}",
            patch.m()
        )));
    }
    let (n, m, h) = (patch.n(), patch.m(), patch.spacing());
    let cell_dims: Vec<usize> = patch.dims().iter().map(|d| d - 1).collect();
    let cell_count: usize = cell_dims.iter().product();
    let corner_count = 1usize << n;
    let scale = 0.5f64.powi(n as i32 - 1) / h;

    // per cell: flux vector v g⁻¹ ∇u^α and v at the centre
    let cells = map_indexed(cell_count, |c| {
        let mut rem = c;
        let mut base = vec![0; n];
        for k in (0..n).rev() {
            base[k] = rem % cell_dims[k];
            rem /= cell_dims[k];
        }
        let mut j = DMatrix::zeros(m, n);
        for corner in 0..corner_count {
            let mut at = base.clone();
            for k in 0..n {
                at[k] += (corner >> (n - 1 - k)) & 1;
            }
            let val = patch.node(patch.linear_index(&at));
            for k in 0..n {
                let sign = if (corner >> (n - 1 - k)) & 1 == 1 { 1.0 } else { -1.0 };
                for a in 0..m {
                    j[(a, k)] += sign * val[a] * scale;
                }
            }
        }
        let met = metric_of(&j);
        let flux = &met.g_inv * j.row(alpha).transpose() * met.v;
        (base, flux, met.v)
    });

    let vol = h.powi(n as i32);
    let mut num = vec![0.0; patch.node_count()];
    let mut den = vec![0.0; patch.node_count()];
    for (base, flux, v) in &cells {
        for corner in 0..corner_count {
            let mut at = base.clone();
            let mut dot = 0.0;
            for k in 0..n {
                let hi = (corner >> (n - 1 - k)) & 1;
                at[k] += hi;
                // ∂φ/∂x_k of the hat at this corner, at the cell centre
                let dphi = if hi == 1 { scale } else { -scale };
                dot += flux[k] * dphi;
            }
            let node = patch.linear_index(&at);
            num[node] += vol * dot;
            den[node] += vol * v * 0.5f64.powi(n as i32);
        }
    }
    let defect = (0..patch.node_count())
        .filter(|&node| !patch.is_boundary(&patch.multi_index(node)))
        .map(|node| (num[node] / den[node]).abs())
        .fold(0.0, f64::max);
    Ok(defect)
}

/// Midpoint-rule `∫ v` over the patch, used to report total area.
pub fn patch_area(patch: &GraphPatch) -> f64 {
    let vals: Vec<f64> = (0..patch.node_count())
        .filter(|&nd| !patch.is_boundary(&patch.multi_index(nd)))
        .map(|nd| metric_of(&node_derivatives(patch, nd).0).v)
        .collect();
    pairwise_sum(&vals) * patch.spacing().powi(patch.n() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{singular_spectrum, slope};
    use crate::model_zoo::{model_affine, model_quadratic, model_slag_exp};
    use approx::assert_relative_eq;

    fn x_squared() -> crate::model_zoo::AnalyticModel {
        // u = x², m = 1, n = 2
        let c = vec![DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])];
        model_quadratic(DMatrix::zeros(1, 2), DVector::zeros(1), c).unwrap()
    }

    #[test]
    fn metric_examples() {
        let z = metric_at(&JacobianSample::zeros(2, 3).unwrap());
        assert_eq!(z.v, 1.0);
        assert!((z.g - DMatrix::identity(3, 3)).amax() == 0.0);
        let j = JacobianSample::from_rows(1, 2, &[1.0, 0.0]).unwrap();
        let s = metric_at(&j);
        assert_relative_eq!(s.g[(0, 0)], 2.0);
        assert_relative_eq!(s.v, 2f64.sqrt(), epsilon = 1e-15);
        assert!((&s.g * &s.g_inv - DMatrix::identity(2, 2)).amax() < 1e-14);
        let slag = model_slag_exp().jacobian_sample(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(metric_at(&slag).v, 2.0, epsilon = 1e-14);
        assert_relative_eq!(metric_at(&slag).v, slope(&singular_spectrum(&slag)), epsilon = 1e-14);
    }

    #[test]
    fn strong_residual_examples() {
        let m = x_squared();
        let r = residual_strong(&m.jacobian(&[1.0, 0.3]).unwrap(), &m.hessian(&[1.0, 0.3]).unwrap());
        assert_relative_eq!(r[0], 0.4, epsilon = 1e-15);
        let s = model_slag_exp();
        let x = [0.4, -1.1];
        let r = residual_strong(&s.jacobian(&x).unwrap(), &s.hessian(&x).unwrap());
        assert!(r.amax() < 1e-12);
        let a = model_affine(DMatrix::from_row_slice(1, 2, &[2.0, -1.0]), DVector::zeros(1)).unwrap();
        let r = residual_strong(&a.jacobian(&x).unwrap(), &a.hessian(&x).unwrap());
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn divergence_form_on_boundary_node_is_an_error() {
        let p = GraphPatch::new(1, vec![4, 4], 0.1, vec![0.0, 0.0]).unwrap();
        assert!(matches!(residual_divergence(&p, &[0, 2]), Err(Error::Stencil(_))));
        assert!(residual_divergence(&p, &[1, 2]).is_ok());
    }

    #[test]
    fn divergence_form_vanishes_on_affine_data() {
        let a = model_affine(
            DMatrix::from_row_slice(2, 3, &[1.0, 0.5, -2.0, 0.3, 0.0, 1.5]),
            DVector::from_vec(vec![1.0, -1.0]),
        )
        .unwrap();
        let p = GraphPatch::sampled(&a, vec![5, 5, 5], 0.25, vec![0.0; 3]).unwrap();
        assert!(residual_divergence(&p, &[2, 2, 2]).unwrap().amax() < 1e-12);
        assert!(residual_at_node(&p, &[1, 2, 3]).unwrap().amax() < 1e-12);
    }

    #[test]
    fn transfinite_interpolation_reproduces_affine() {
        let a = model_affine(
            DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]),
            DVector::from_vec(vec![0.25]),
        )
        .unwrap();
        let full = GraphPatch::sampled(&a, vec![4, 5, 6], 0.2, vec![0.1, 0.0, -0.3]).unwrap();
        let mut p = GraphPatch::with_boundary(&a, vec![4, 5, 6], 0.2, vec![0.1, 0.0, -0.3]).unwrap();
        interpolate_boundary(&mut p);
        let err = p
            .values()
            .iter()
            .zip(full.values())
            .fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn zero_boundary_gives_zero_solution() {
        let mut p = GraphPatch::new(2, vec![7, 7], 0.1, vec![0.0, 0.0]).unwrap();
        let rep = solve(&mut p, SolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert!(p.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bad_tolerance_rejected() {
        let mut p = GraphPatch::new(1, vec![3, 3], 0.1, vec![0.0, 0.0]).unwrap();
        assert!(solve(&mut p, SolveOptions { tol: 0.0, max_iter: 3 }).is_err());
    }

    #[test]
    fn weak_defect_examples() {
        let a = model_affine(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 0.3]), DVector::zeros(2)).unwrap();
        let p = GraphPatch::sampled(&a, vec![9, 9], 0.1, vec![0.0, 0.0]).unwrap();
        assert!(weak_harmonicity_defect(&p, 0).unwrap() < 1e-12);
        assert!(weak_harmonicity_defect(&p, 1).unwrap() < 1e-12);
        assert!(weak_harmonicity_defect(&p, 2).is_err());
    }
}
