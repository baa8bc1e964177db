//! Brute-force verification of the algebraic inequalities behind the
//! Δ log v estimates: the cubic φ(μ₁, μ₂, μ₃), the 3×3 form with entries
//! `λᵢλⱼ`, the Δ log v right-hand side on arbitrary symmetric second
//! fundamental form coefficients, and the ξ₁₁ bound for nearly rank-one
//! Jacobians.
//!
//! Grid scans and random samplers are data-parallel; partial results are
//! merged in a fixed order so every report is independent of the thread
//! count. Samplers draw from ChaCha8 streams keyed by `(seed, chunk)`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::SingularSpectrum;
use crate::par::map_indexed;
use crate::report::ScanReport;

/// Slack on every asserted nonnegativity.
pub const TOLERANCE: f64 = 1e-9;

/// Relative slack when testing grid points against constraint boundaries,
/// so exact boundary points survive rounding of `k · step`.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuTriple(pub f64, pub f64, pub f64);

impl MuTriple {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if [a, b, c].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "μ-triple ({a}, {b}, {c}) must be finite and ≥ 0"
            )));
        }
        Ok(Self(a, b, c))
    }

    fn max(&self) -> f64 {
        self.0.max(self.1).max(self.2)
    }

    fn pair_products(&self) -> [f64; 3] {
        [self.0 * self.1, self.0 * self.2, self.1 * self.2]
    }
}

/// `φ = 4 + μ₁μ₂μ₃ − μ₁μ₂ − μ₁μ₃ − μ₂μ₃`.
pub fn phi(t: MuTriple) -> f64 {
    let MuTriple(a, b, c) = t;
    4.0 + a * b * c - a * b - a * c - b * c
}

/// Admissible region for the φ ≥ 0 scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mu123Constraint {
    /// `μᵢμⱼ ≤ 2 + 2/(max μ − 1)` for all i ≠ j; unconstrained when
    /// max μ ≤ 1, where the bound is undefined or negative.
    Paper,
    /// Only `μᵢμⱼ ≤ 4`; strictly weaker, admits φ < 0.
    #[serde(rename = "pairwise-at-most-4")]
    PairwiseAtMost4,
}

impl Mu123Constraint {
    pub fn admits(self, t: &MuTriple) -> bool {
        let products = t.pair_products();
        match self {
            Mu123Constraint::Paper => {
                let mx = t.max();
                if mx <= 1.0 {
                    return true;
                }
                let bound = 2.0 + 2.0 / (mx - 1.0);
                products.iter().all(|p| *p <= bound * (1.0 + BOUNDARY_SLACK))
            }
            Mu123Constraint::PairwiseAtMost4 => {
                products.iter().all(|p| *p <= 4.0 * (1.0 + BOUNDARY_SLACK))
            }
        }
    }
}

fn grid_axis(step: f64, mu_max: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("grid step {step} must be > 0")));
    }
    if !(mu_max > 0.0 && mu_max.is_finite()) {
        return Err(Error::InvalidInput(format!("μ range {mu_max} must be > 0")));
    }
    let count = (mu_max / step * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

/// Distance from `p` to the equality set of φ ≥ 0 on the admissible
/// region: permutations of `(2, 2, t)`, `t ∈ [0, 2]`, and of
/// `(μ, μ, 1 + 2/μ)`, `μ ∈ (0, 2]`.
pub fn distance_to_equality_loci(p: [f64; 3]) -> f64 {
    let mut best = distance_to_line(p);
    for odd in 0..3 {
        let (a, b) = match odd {
            0 => (p[1], p[2]),
            1 => (p[0], p[2]),
            _ => (p[0], p[1]),
        };
        let c = p[odd];

        let curve = |mu: f64| (a - mu).powi(2) + (b - mu).powi(2) + (c - 1.0 - 2.0 / mu).powi(2);
        // coarse bracket, then golden-section refinement
        let (lo, hi) = (1e-3, 2.0);
        let samples = 400;
        let mut k_best = 0;
        let mut f_best = f64::INFINITY;
        for k in 0..=samples {
            let mu = lo + (hi - lo) * k as f64 / samples as f64;
            let f = curve(mu);
            if f < f_best {
                f_best = f;
                k_best = k;
            }
        }
        let width = (hi - lo) / samples as f64;
        let mut x0 = (lo + width * (k_best as f64 - 1.0)).max(lo);
        let mut x1 = (lo + width * (k_best as f64 + 1.0)).min(hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let xa = x1 - g * (x1 - x0);
            let xb = x0 + g * (x1 - x0);
            if curve(xa) < curve(xb) {
                x1 = xb;
            } else {
                x0 = xa;
            }
        }
        best = best.min(f_best.min(curve(0.5 * (x0 + x1))).sqrt());
    }
    best
}

/// Distance to the segment of permutations of `(2, 2, t)`, `t ∈ [0, 2]`.
pub fn distance_to_line(p: [f64; 3]) -> f64 {
    (0..3)
        .map(|odd| {
            let others: Vec<f64> = (0..3).filter(|&k| k != odd).map(|k| p[k]).collect();
            let c = p[odd];
            ((others[0] - 2.0).powi(2) + (others[1] - 2.0).powi(2) + (c - c.clamp(0.0, 2.0)).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive scan of φ ≥ 0 over the grid `{0, step, 2·step, …} ³ ∩ [0, μ_max]³`
/// restricted to the paper constraint, plus the implied bound
/// `μᵢμⱼ ≤ 4` on every admissible point.
pub fn scan_mu123(step: f64, mu_max: f64) -> Result<ScanReport> {
    scan_mu123_with(step, mu_max, Mu123Constraint::Paper)
}

pub fn scan_mu123_with(step: f64, mu_max: f64, constraint: Mu123Constraint) -> Result<ScanReport> {
    let axis = grid_axis(step, mu_max)?;
    let lemma = match constraint {
        Mu123Constraint::Paper => "mu123",
        Mu123Constraint::PairwiseAtMost4 => "mu123-weakened",
    };

    struct Slab {
        report: ScanReport,
        product_violations: u64,
        unconstrained: u64,
        near_zero: u64,
        locus_distance: f64,
        line_distance: f64,
    }

    let slabs = map_indexed(axis.len(), |i| {
        let mut s = Slab {
            report: ScanReport::empty(lemma, None),
            product_violations: 0,
            unconstrained: 0,
            near_zero: 0,
            locus_distance: 0.0,
            line_distance: f64::INFINITY,
        };
        let a = axis[i];
        for &b in &axis {
            for &c in &axis {
                let t = MuTriple(a, b, c);
                if !constraint.admits(&t) {
                    continue;
                }
                let value = phi(t);
                s.report.observe(value, &[a, b, c], value < -TOLERANCE);
                if t.max() <= 1.0 {
                    s.unconstrained += 1;
                }
                if t.pair_products().iter().any(|p| *p > 4.0 + TOLERANCE) {
                    s.product_violations += 1;
                }
                if value.abs() <= TOLERANCE {
                    s.near_zero += 1;
                    s.locus_distance = s.locus_distance.max(distance_to_equality_loci([a, b, c]));
                    s.line_distance = s.line_distance.min(distance_to_line([a, b, c]));
                }
            }
        }
        s
    });

    let mut report = ScanReport::empty(lemma, None)
        .param("grid_step", step)
        .param("mu_max", mu_max);
    let (mut products, mut unconstrained, mut near_zero, mut locus) = (0u64, 0u64, 0u64, 0.0f64);
    let mut line = f64::INFINITY;
    for s in slabs {
        report.merge(s.report);
        products += s.product_violations;
        unconstrained += s.unconstrained;
        near_zero += s.near_zero;
        locus = locus.max(s.locus_distance);
        line = line.min(s.line_distance);
    }
    if constraint == Mu123Constraint::Paper {
        // the implied pairwise bound is part of the asserted contract
        report.violations += products;
    }
    report.notes.insert("pairwise_product_violations".into(), products as f64);
    report.notes.insert("unconstrained_points".into(), unconstrained as f64);
    report.notes.insert("near_zero_points".into(), near_zero as f64);
    report.notes.insert("max_locus_distance".into(), locus);
    if line.is_finite() {
        report.notes.insert("line_distance".into(), line);
    }
    if !report.argmin.is_empty() {
        let p = [report.argmin[0], report.argmin[1], report.argmin[2]];
        report
            .notes
            .insert("argmin_locus_distance".into(), distance_to_equality_loci(p));
    }
    Ok(report)
}

/// `(2 − √2)(2 − Λ²)`.
pub fn mu123_lambda_bound(lambda: f64) -> f64 {
    (2.0 - SQRT_2) * (2.0 - lambda * lambda)
}

/// Scan of `φ ≥ (2 − √2)(2 − Λ²)` over grid triples with all pairwise
/// products `≤ Λ²`, inside `[0, μ_max]³`.
pub fn scan_mu123_lambda(lambda: f64, step: f64, mu_max: f64) -> Result<ScanReport> {
    if !(lambda > 0.0 && lambda <= SQRT_2 * (1.0 + 1e-15)) {
        return Err(Error::InvalidInput(format!("Λ = {lambda} must lie in (0, √2]")));
    }
    let axis = grid_axis(step, mu_max)?;
    let cap = lambda * lambda * (1.0 + BOUNDARY_SLACK);
    let bound = mu123_lambda_bound(lambda);
    let slabs = map_indexed(axis.len(), |i| {
        let mut r = ScanReport::empty("mu123-lambda", None);
        let a = axis[i];
        for &b in &axis {
            for &c in &axis {
                let t = MuTriple(a, b, c);
                if t.pair_products().iter().any(|p| *p > cap) {
                    continue;
                }
                let value = phi(t);
                r.observe(value, &[a, b, c], value < bound - TOLERANCE);
            }
        }
        r
    });
    let mut report = ScanReport::empty("mu123-lambda", None)
        .param("lambda", lambda)
        .param("grid_step", step)
        .param("mu_max", mu_max);
    for r in slabs {
        report.merge(r);
    }
    report.notes.insert("bound".into(), bound);
    report.notes.insert("margin".into(), report.min_value - bound);
    Ok(report)
}

/// Hessian of `f(x, y, z) = x² + y² + z² + λᵢλⱼxy + λⱼλₖyz + λᵢλₖxz`.
pub fn hessf_matrix(li: f64, lj: f64, lk: f64) -> Matrix3<f64> {
    Matrix3::new(
        2.0,
        li * lj,
        li * lk,
        li * lj,
        2.0,
        lj * lk,
        li * lk,
        lj * lk,
        2.0,
    )
}

/// Closed form `8 + 2λᵢ²λⱼ²λₖ² − 2λᵢ²λⱼ² − 2λᵢ²λₖ² − 2λⱼ²λₖ²`.
pub fn hessf_det(li: f64, lj: f64, lk: f64) -> f64 {
    let (a, b, c) = (li * li, lj * lj, lk * lk);
    8.0 + 2.0 * a * b * c - 2.0 * a * b - 2.0 * a * c - 2.0 * b * c
}

/// Second fundamental form coefficients `h_{α,ij}` in an adapted frame,
/// symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HCoefficients {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl HCoefficients {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![0.0; n * n * m],
        }
    }

    /// Builds from `f(α, i, j)` evaluated for `i ≤ j` and mirrored.
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut h = Self::zeros(n, m);
        for a in 0..m {
            for i in 0..n {
                for j in i..n {
                    let v = f(a, i, j);
                    h.data[(a * n + i) * n + j] = v;
                    h.data[(a * n + j) * n + i] = v;
                }
            }
        }
        h
    }

    /// Checks exact symmetry.
    pub fn from_vec(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * m {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coefficients", n * n * m),
                got: format!("{}", data.len()),
            });
        }
        crate::error::ensure_finite(&data, "h coefficients")?;
        let h = Self { n, m, data };
        for a in 0..m {
            for i in 0..n {
                for j in 0..i {
                    if h.get(a, i, j) != h.get(a, j, i) {
                        return Err(Error::InvalidInput(format!(
                            "h[{a}] not symmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `h_{α,ij}`, zero for `α ≥ m`.
    #[inline]
    pub fn get(&self, alpha: usize, i: usize, j: usize) -> f64 {
        if alpha >= self.m {
            0.0
        } else {
            self.data[(alpha * self.n + i) * self.n + j]
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Relabels principal directions: `h'_{σ(α),σ(i)σ(j)} = h_{α,ij}` for
    /// `α < n`, normal directions beyond n untouched.
    pub fn permuted(&self, sigma: &[usize]) -> Self {
        let (n, m) = (self.n, self.m);
        let mut out = Self::zeros(n, m);
        for a in 0..m {
            let ta = if a < n { sigma[a] } else { a };
            if ta >= m {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out.data[(ta * n + sigma[i]) * n + sigma[j]] = self.get(a, i, j);
                }
            }
        }
        out
    }
}

/// The Δ log v right-hand side, computed directly and through its
/// four-way split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogvRhs {
    /// `|B|² + Σ λᵢ² h_{i,ij}² + Σ_{l, i≠j} λᵢλⱼ h_{i,jl} h_{j,il}`
    pub direct: f64,
    /// `Σ_{α>n} h_{α,ij}²`
    pub outside: f64,
    /// `Σᵢ (1 + λᵢ²) h_{i,ii}²`
    pub diagonal: f64,
    /// `Σ_{i≠j} ((2 + λᵢ²) h_{i,ij}² + h_{j,ii}² + 2λᵢλⱼ h_{i,ji} h_{j,ii})`
    pub pairs: f64,
    /// `Σ_{i,j,k distinct} (h_{k,ij}² + λᵢλⱼ h_{i,jk} h_{j,ik})`
    pub triples: f64,
}

impl LogvRhs {
    pub fn decomposed(&self) -> f64 {
        self.outside + self.diagonal + self.pairs + self.triples
    }
}

fn check_shapes(lambda: &[f64], h: &HCoefficients) -> Result<()> {
    if lambda.len() != h.n {
        return Err(Error::DimensionMismatch {
            expected: format!("spectrum of length {}", h.n),
            got: format!("{}", lambda.len()),
        });
    }
    Ok(())
}

pub fn delta_logv_rhs(s: &SingularSpectrum, h: &HCoefficients) -> Result<LogvRhs> {
    check_shapes(s.values(), h)?;
    Ok(logv_rhs_terms(s.values(), h))
}

pub(crate) fn logv_rhs_terms(lambda: &[f64], h: &HCoefficients) -> LogvRhs {
    let n = h.n;
    let m = h.m;
    let mut second = 0.0;
    let mut third = 0.0;
    for i in 0..n {
        for j in 0..n {
            second += lambda[i] * lambda[i] * h.get(i, i, j).powi(2);
            if i != j {
                for l in 0..n {
                    third += lambda[i] * lambda[j] * h.get(i, j, l) * h.get(j, i, l);
                }
            }
        }
    }
    let direct = h.norm_sq() + second + third;

    let mut outside = 0.0;
    for a in n..m {
        for i in 0..n {
            for j in 0..n {
                outside += h.get(a, i, j).powi(2);
            }
        }
    }
    let mut diagonal = 0.0;
    let mut pairs = 0.0;
    let mut triples = 0.0;
    for i in 0..n {
        let li2 = lambda[i] * lambda[i];
        diagonal += (1.0 + li2) * h.get(i, i, i).powi(2);
        for j in (0..n).filter(|&j| j != i) {
            pairs += (2.0 + li2) * h.get(i, i, j).powi(2)
                + h.get(j, i, i).powi(2)
                + 2.0 * lambda[i] * lambda[j] * h.get(i, j, i) * h.get(j, i, i);
            for k in (0..n).filter(|&k| k != i && k != j) {
                triples += h.get(k, i, j).powi(2)
                    + lambda[i] * lambda[j] * h.get(i, j, k) * h.get(j, i, k);
            }
        }
    }
    LogvRhs {
        direct,
        outside,
        diagonal,
        pairs,
        triples,
    }
}

/// `|∇ log v|² = Σⱼ (Σᵢ λᵢ h_{i,ij})²`.
pub fn grad_logv_sq(lambda: &[f64], h: &HCoefficients) -> f64 {
    let n = h.n;
    (0..n)
        .map(|j| {
            let s: f64 = (0..n).map(|i| lambda[i] * h.get(i, i, j)).sum();
            s * s
        })
        .sum()
}

/// Lower bound asserted under `λ₁²λᵢ² ≤ 2 + λᵢ²`.
pub fn sqrt2_lower_bound(lambda: &[f64], h: &HCoefficients) -> f64 {
    let rhs = logv_rhs_terms(lambda, h);
    rhs.outside + rhs.diagonal
}

/// Lower bound asserted under `λ₁λ₂ ≤ Λ ≤ √2`.
pub fn lambda_lower_bound(lambda: &[f64], h: &HCoefficients, big_lambda: f64) -> f64 {
    (1.0 - big_lambda / SQRT_2) * h.norm_sq() + grad_logv_sq(lambda, h) / h.n as f64
}

const CHUNK: usize = 1024;
const MAX_LAMBDA: f64 = 3.0;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn random_h(rng: &mut ChaCha8Rng, n: usize, m: usize) -> HCoefficients {
    HCoefficients::from_fn(n, m, |_, _, _| rng.random_range(-1.0..=1.0))
}

/// Uniform `[0, 3]` values for the first `min(n, m)` slots (the rank of an
/// m×n Jacobian), zero beyond, sorted descending, rejected until
/// `accept` holds.
fn random_lambda(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    accept: &dyn Fn(&[f64]) -> bool,
) -> Result<Vec<f64>> {
    let rank = n.min(m);
    for _ in 0..1_000_000 {
        let mut l = vec![0.0; n];
        for v in l.iter_mut().take(rank) {
            *v = rng.random_range(0.0..=MAX_LAMBDA);
        }
        l.sort_by(|a, b| b.total_cmp(a));
        if accept(&l) {
            return Ok(l);
        }
    }
    Err(Error::Sampling {
        rate: 0.0,
        floor: 1e-6,
        proposals: 1_000_000,
    })
}

/// `λ₁²λᵢ² ≤ 2 + λᵢ²` for all i ≥ 2.
pub fn sqrt2_hypothesis(lambda: &[f64]) -> bool {
    let l1 = lambda[0] * lambda[0];
    lambda[1..]
        .iter()
        .all(|l| l1 * l * l <= (2.0 + l * l) * (1.0 + BOUNDARY_SLACK))
}

/// Where the λ values of a sampling check come from.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSource {
    Random,
    Fixed(Vec<f64>),
}

#[allow(clippy::too_many_arguments)]
fn run_inequality_check(
    lemma: &str,
    n: usize,
    m: usize,
    samples: u64,
    seed: u64,
    source: &LambdaSource,
    accept: &(dyn Fn(&[f64]) -> bool + Sync),
    bound: &(dyn Fn(&[f64], &HCoefficients) -> f64 + Sync),
) -> Result<ScanReport> {
    if samples == 0 || n == 0 || m == 0 {
        return Err(Error::InvalidInput("need samples, n, m ≥ 1".into()));
    }
    if let LambdaSource::Fixed(l) = source {
        if l.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} singular values"),
                got: format!("{}", l.len()),
            });
        }
    }
    let chunks = (samples as usize).div_ceil(CHUNK);
    let parts = map_indexed(chunks, |c| -> Result<ScanReport> {
        let mut rng = chunk_rng(seed, c);
        let mut r = ScanReport::empty(lemma, Some(seed));
        let count = CHUNK.min(samples as usize - c * CHUNK);
        for _ in 0..count {
            let lambda = match source {
                LambdaSource::Random => random_lambda(&mut rng, n, m, accept)?,
                LambdaSource::Fixed(l) => l.clone(),
            };
            let h = random_h(&mut rng, n, m);
            let margin = logv_rhs_terms(&lambda, &h).direct - bound(&lambda, &h);
            r.observe(margin, &lambda, margin < -TOLERANCE);
        }
        Ok(r)
    });
    let mut report = ScanReport::empty(lemma, Some(seed))
        .param("n", n as f64)
        .param("m", m as f64)
        .param("samples", samples as f64);
    for p in parts {
        report.merge(p?);
    }
    Ok(report)
}

/// Samples `(λ, h)` under `λ₁²λᵢ² ≤ 2 + λᵢ²` and checks
/// `Δ log v ≥ Σ_{α>n} h² + Σᵢ (1 + λᵢ²) h_{i,ii}²`. The reported
/// quantity is the margin; `argmin` holds the λ of the tightest sample.
pub fn check_sqrt2_inequality(n: usize, m: usize, samples: u64, seed: u64) -> Result<ScanReport> {
    check_sqrt2_inequality_from(n, m, samples, seed, &LambdaSource::Random)
}

pub fn check_sqrt2_inequality_from(
    n: usize,
    m: usize,
    samples: u64,
    seed: u64,
    source: &LambdaSource,
) -> Result<ScanReport> {
    if let LambdaSource::Fixed(l) = source {
        if l.len() == n && !sqrt2_hypothesis(l) {
            return Err(Error::InvalidInput(format!("λ = {l:?} violates the hypothesis")));
        }
    }
    run_inequality_check(
        "sqrt2logv",
        n,
        m,
        samples,
        seed,
        source,
        &sqrt2_hypothesis,
        &sqrt2_lower_bound,
    )
}

/// Samples `(λ, h)` with `λ₁λ₂ ≤ Λ` and checks
/// `Δ log v ≥ (1 − Λ/√2)|B|² + (1/n)|∇ log v|²`.
pub fn check_lambda_inequality(
    big_lambda: f64,
    n: usize,
    m: usize,
    samples: u64,
    seed: u64,
) -> Result<ScanReport> {
    if !(big_lambda > 0.0 && big_lambda <= SQRT_2 * (1.0 + 1e-15)) {
        return Err(Error::InvalidInput(format!("Λ = {big_lambda} must lie in (0, √2]")));
    }
    let accept = move |l: &[f64]| l.len() < 2 || l[0] * l[1] <= big_lambda;
    let bound = move |l: &[f64], h: &HCoefficients| lambda_lower_bound(l, h, big_lambda);
    let mut r = run_inequality_check(
        "Lalogv",
        n,
        m,
        samples,
        seed,
        &LambdaSource::Random,
        &accept,
        &bound,
    )?;
    r.params.insert("lambda".into(), big_lambda);
    Ok(r)
}

/// `ξ_{αj} = √det b Σᵢ b^{ij} a_{αi}` with `b = I + aᵀa`.
pub fn xi_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let b = DMatrix::identity(n, n) + a.transpose() * a;
    let chol = b.cholesky().expect("I + aᵀa is SPD");
    let sqrt_det: f64 = chol.l_dirty().diagonal().iter().product();
    a * chol.inverse() * sqrt_det
}

/// Samples m×n matrices with `λ₁λ₂ ≤ Λ` and `a₁₁ ≥ (1 − ε)√det b` and
/// reports the largest `|ξ₁₁|`.
///
/// Proposals draw `a₁₁` log-uniformly in `[0.1, 100]` and every other entry
/// uniformly in `[−s, s]` with `s` log-uniform in `[10⁻³, 1]`; this
/// rescaling keeps the acceptance rate workable as ε → 0. Fails when the
/// running acceptance rate drops below 10⁻⁶.
pub fn app1_sampler(
    big_lambda: f64,
    eps: f64,
    m: usize,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<ScanReport> {
    if !(big_lambda > 0.0) {
        return Err(Error::InvalidInput(format!("Λ = {big_lambda} must be > 0")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("ε = {eps} must lie in (0, 1)")));
    }
    if samples == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidInput("need samples, m, n ≥ 1".into()));
    }
    const FLOOR: f64 = 1e-6;
    const CHECK_EVERY: u64 = 1 << 20;
    let chunks = (samples as usize).div_ceil(CHUNK);
    let parts = map_indexed(chunks, |c| -> Result<ScanReport> {
        let mut rng = chunk_rng(seed, c);
        let mut r = ScanReport::empty("app1", Some(seed));
        let want = CHUNK.min(samples as usize - c * CHUNK);
        let mut proposals = 0u64;
        let mut accepted = 0usize;
        while accepted < want {
            proposals += 1;
            if proposals.is_multiple_of(CHECK_EVERY) && (accepted as f64) < FLOOR * proposals as f64 {
                return Err(Error::Sampling {
                    rate: accepted as f64 / proposals as f64,
                    floor: FLOOR,
                    proposals,
                });
            }
            let spread = 10f64.powf(rng.random_range(-3.0..=0.0));
            let mut a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-spread..=spread));
            a[(0, 0)] = 10f64.powf(rng.random_range(-1.0..=2.0));
            let s = crate::linalg::full_svd(&a).values;
            let dil = if s.len() > 1 { s[0] * s[1] } else { 0.0 };
            if dil > big_lambda {
                continue;
            }
            let det_b: f64 = s.iter().map(|l| 1.0 + l * l).product();
            if a[(0, 0)] < (1.0 - eps) * det_b.sqrt() {
                continue;
            }
            accepted += 1;
            let xi = xi_matrix(&a)[(0, 0)].abs();
            r.observe(xi, a.as_slice(), false);
        }
        r.notes.insert(format!("proposals_{c}"), proposals as f64);
        Ok(r)
    });
    let mut report = ScanReport::empty("app1", Some(seed))
        .param("lambda", big_lambda)
        .param("eps", eps)
        .param("m", m as f64)
        .param("n", n as f64)
        .param("samples", samples as f64);
    let mut proposals = 0.0;
    for p in parts {
        let mut p = p?;
        proposals += p.notes.values().sum::<f64>();
        p.notes.clear();
        report.merge(p);
    }
    report.notes.insert("proposals".into(), proposals);
    report.notes.insert("acceptance_rate".into(), samples as f64 / proposals);
    Ok(report)
}

/// Checks that `max |ξ₁₁|` does not increase (beyond `slack`) along a
/// decreasing sequence of ε; returns the per-ε maxima.
pub fn app1_trend(
    big_lambda: f64,
    epsilons: &[f64],
    m: usize,
    n: usize,
    samples: u64,
    seed: u64,
    slack: f64,
) -> Result<(Vec<ScanReport>, bool)> {
    let reports = epsilons
        .iter()
        .map(|&e| app1_sampler(big_lambda, e, m, n, samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let ok = reports
        .windows(2)
        .all(|w| w[1].max_value <= w[0].max_value + slack);
    Ok((reports, ok))
}
