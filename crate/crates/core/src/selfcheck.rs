//! Seeded randomized property suites for the Grassmannian invariants and
//! the model catalogue, runnable from the command line.
//!
//! [`Mutation`] injects a known defect so the suites can be shown to fail.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grassmann::{
    jordan_angles, plane_inner, singular_spectrum, two_dilation, JacobianSample, PlaneBasis, SingularSpectrum,
};
use crate::model_zoo::{model_lawson_osserman, model_slag_exp, AnalyticModel, Order};
use crate::solver::{metric_of, residual_strong};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    None,
    /// Evaluates the slope with `1 − λ²` in place of `1 + λ²`.
    SlopeSignFlip,
}

/// Unwraps or turns the error into a property failure.
macro_rules! ok_or_report {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Some(err.to_string()),
        }
    };
}

fn slope_of(s: &SingularSpectrum, mutation: Mutation) -> f64 {
    match mutation {
        Mutation::None => crate::grassmann::slope(s),
        Mutation::SlopeSignFlip => s.values().iter().map(|l| (1.0 - l * l).abs().sqrt()).product(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub property: String,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Check<'a> = Box<dyn Fn(&mut ChaCha8Rng) -> Option<String> + 'a>;

struct Property<'a> {
    suite: &'static str,
    name: &'static str,
    check: Check<'a>,
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_jacobian(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = rng.random_range(1..=4);
    let n = rng.random_range(1..=4);
    let scale = 10f64.powf(rng.random_range(-2.0..=0.5));
    DMatrix::from_fn(m, n, |_, _| scale * rng.random_range(-1.0..=1.0))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0));
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the distribution does not depend on QR conventions
    let mut q = q;
    for i in 0..k {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    q
}

fn annulus_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-hi..=hi)).collect();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (lo..=hi).contains(&r) {
            return x;
        }
    }
}

fn fd_order(model: &AnalyticModel, x: &[f64], second: bool) -> f64 {
    // error of central differences at h and h/2; exact derivatives as reference
    let err = |h: f64| -> f64 {
        let mut worst = 0.0f64;
        let jet = model.jet(x, Order::Second).expect("in domain");
        for i in 0..model.n() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            if second {
                let jp = model.jacobian(&xp).expect("in domain");
                let jm = model.jacobian(&xm).expect("in domain");
                for a in 0..model.m() {
                    for k in 0..model.n() {
                        let fd = (jp[(a, k)] - jm[(a, k)]) / (2.0 * h);
                        worst = worst.max((fd - jet.hessian[a][(k, i)]).abs());
                    }
                }
            } else {
                let vp = model.value(&xp).expect("in domain");
                let vm = model.value(&xm).expect("in domain");
                for a in 0..model.m() {
                    let fd = (vp[a] - vm[a]) / (2.0 * h);
                    worst = worst.max((fd - jet.jacobian[(a, i)]).abs());
                }
            }
        }
        worst
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    if e1 < 1e-11 {
        // exact up to rounding (affine and quadratic data)
        return f64::INFINITY;
    }
    (e1 / e2).log2()
}

fn properties(mutation: Mutation) -> Vec<Property<'static>> {
    let mut ps: Vec<Property<'static>> = Vec::new();

    ps.push(Property {
        suite: "grassmann",
        name: "spectrum_squares_are_metric_eigenvalues",
        check: Box::new(|rng| {
            let j = random_jacobian(rng);
            let s = singular_spectrum(&ok_or_report!(JacobianSample::new(j.clone())));
            let mut eig: Vec<f64> = (j.transpose() * &j).symmetric_eigenvalues().iter().copied().collect();
            eig.sort_by(|a, b| b.total_cmp(a));
            let bad = s
                .values()
                .iter()
                .zip(&eig)
                .any(|(l, e)| (l * l - e).abs() > 1e-10 * eig[0].max(1.0));
            bad.then(|| format!("J = {j}, λ = {:?}, eig = {eig:?}", s.values()))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "slope_is_sqrt_det_metric_and_at_least_one",
        check: Box::new(move |rng| {
            let j = random_jacobian(rng);
            let s = singular_spectrum(&ok_or_report!(JacobianSample::new(j.clone())));
            let v = slope_of(&s, mutation);
            let det = metric_of(&j).v;
            let flat = s.values().iter().all(|l| *l == 0.0);
            let ok = rel_close(v, det, 1e-10) && v >= 1.0 && (!flat || v == 1.0);
            (!ok).then(|| format!("J = {j}, slope = {v}, √det g = {det}"))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "slope_and_dilation_rotation_invariant",
        check: Box::new(move |rng| {
            let j = random_jacobian(rng);
            let (m, n) = j.shape();
            let p = random_orthogonal(rng, m);
            let q = random_orthogonal(rng, n);
            let rotated = &p * &j * &q;
            let s1 = singular_spectrum(&ok_or_report!(JacobianSample::new(j.clone())));
            let s2 = singular_spectrum(&ok_or_report!(JacobianSample::new(rotated)));
            let ok = rel_close(slope_of(&s1, mutation), slope_of(&s2, mutation), 1e-10)
                && rel_close(two_dilation(&s1), two_dilation(&s2), 1e-10);
            (!ok).then(|| format!("J = {j}"))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "dilation_is_top_pair_product",
        check: Box::new(|rng| {
            let j = random_jacobian(rng);
            let s = singular_spectrum(&ok_or_report!(JacobianSample::new(j.clone())));
            let l = s.values();
            let d = two_dilation(&s);
            let want = if l.len() > 1 { l[0] * l[1] } else { 0.0 };
            let ok = d == want && d <= l[0] * l[0];
            (!ok).then(|| format!("J = {j}, dilation = {d}"))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "jordan_angle_tangents_are_singular_values",
        check: Box::new(|rng| {
            let j = random_jacobian(rng);
            let (m, n) = j.shape();
            let sample = ok_or_report!(JacobianSample::new(j.clone()));
            let s = singular_spectrum(&sample);
            let angles = ok_or_report!(jordan_angles(&PlaneBasis::graph_plane(&sample), &PlaneBasis::coordinate(n, m)));
            let bad = angles
                .angles
                .iter()
                .zip(s.values())
                .any(|(t, l)| !rel_close(t.tan(), *l, 1e-10));
            bad.then(|| format!("J = {j}, θ = {:?}, λ = {:?}", angles.angles, s.values()))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "plane_inner_is_cosine_product",
        check: Box::new(|rng| {
            let j = random_jacobian(rng);
            let (m, n) = j.shape();
            let sample = ok_or_report!(JacobianSample::new(j.clone()));
            let p = PlaneBasis::graph_plane(&sample);
            let base = PlaneBasis::coordinate(n, m);
            let w = ok_or_report!(plane_inner(&p, &base));
            let angles = ok_or_report!(jordan_angles(&p, &base));
            let prod: f64 = angles.angles.iter().map(|t| t.cos()).product();
            let v = metric_of(&j).v;
            let ok = (w.abs() - prod).abs() <= 1e-10 && rel_close(w, 1.0 / v, 1e-10) && angles.angles.iter().all(|t| (0.0..=PI / 2.0).contains(t));
            (!ok).then(|| format!("J = {j}, w = {w}, Π cos θ = {prod}"))
        }),
    });

    ps.push(Property {
        suite: "grassmann",
        name: "slope_gradient_bound",
        check: Box::new(move |rng| {
            let j = random_jacobian(rng);
            let g_inv = metric_of(&j).g_inv;
            let s = singular_spectrum(&ok_or_report!(JacobianSample::new(j.clone())));
            let v = slope_of(&s, mutation);
            let grad = (&j * &g_inv * j.transpose()).trace();
            let ok = v <= 1.0 + v * grad + 1e-10 * v;
            (!ok).then(|| format!("J = {j}, v = {v}"))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "hessians_symmetric",
        check: Box::new(|rng| {
            let (model, x) = random_model_point(rng);
            let h = ok_or_report!(model.hessian(&x));
            let bad = h.iter().any(|hh| hh != &hh.transpose());
            bad.then(|| format!("{} at {x:?}", model.label()))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "jacobian_matches_central_differences",
        check: Box::new(|rng| {
            let (model, x) = random_model_point(rng);
            let order = fd_order(&model, &x, false);
            (order < 1.9).then(|| format!("{} at {x:?}: order {order}", model.label()))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "hessian_matches_central_differences",
        check: Box::new(|rng| {
            let (model, x) = random_model_point(rng);
            let order = fd_order(&model, &x, true);
            (order < 1.9).then(|| format!("{} at {x:?}: order {order}", model.label()))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "lawson_osserman_homogeneous",
        check: Box::new(|rng| {
            let model = model_lawson_osserman();
            let x = annulus_point(rng, 4, 0.1, 3.0);
            let t = 10f64.powf(rng.random_range(-2.0..=2.0));
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            let (a, b) = (ok_or_report!(model.jet(&x, Order::First)), ok_or_report!(model.jet(&tx, Order::First)));
            let value_ok = (a.value * t - &b.value).amax() <= 1e-12 * b.value.amax().max(1e-300);
            let jac_ok = (&a.jacobian - &b.jacobian).amax() <= 1e-12 * a.jacobian.amax();
            (!(value_ok && jac_ok)).then(|| format!("x = {x:?}, t = {t}"))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "lawson_osserman_minimal",
        check: Box::new(|rng| {
            let model = model_lawson_osserman();
            let x = annulus_point(rng, 4, 0.5, 2.0);
            let jet = ok_or_report!(model.jet(&x, Order::Second));
            let r = residual_strong(&jet.jacobian, &jet.hessian).amax();
            (r > 1e-8).then(|| format!("x = {x:?}, residual {r:e}"))
        }),
    });

    ps.push(Property {
        suite: "model_zoo",
        name: "slag_exp_minimal",
        check: Box::new(|rng| {
            let model = model_slag_exp();
            let x = [rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)];
            let jet = ok_or_report!(model.jet(&x, Order::Second));
            let r = residual_strong(&jet.jacobian, &jet.hessian).amax();
            (r > 1e-10).then(|| format!("x = {x:?}, residual {r:e}"))
        }),
    });

    ps
}

fn random_model_point(rng: &mut ChaCha8Rng) -> (AnalyticModel, Vec<f64>) {
    match rng.random_range(0..3) {
        0 => {
            let x = vec![rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)];
            (model_slag_exp(), x)
        }
        1 => (model_lawson_osserman(), annulus_point(rng, 4, 0.5, 2.0)),
        _ => {
            let a = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..=1.0));
            let b = nalgebra::DVector::from_fn(2, |_, _| rng.random_range(-1.0..=1.0));
            let x = (0..3).map(|_| rng.random_range(-2.0..=2.0)).collect();
            (crate::model_zoo::model_affine(a, b).expect("finite"), x)
        }
    }
}

/// Runs every property on `cases` inputs from a ChaCha8 stream keyed by
/// `(seed, property index)`.
pub fn run_invariant_suites(seed: u64, cases: u64, mutation: Mutation) -> Vec<SuiteResult> {
    properties(mutation)
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut failures = 0;
            let mut first = None;
            for _ in 0..cases {
                if let Some(msg) = (p.check)(&mut rng) {
                    failures += 1;
                    first.get_or_insert(msg);
                }
            }
            SuiteResult {
                suite: p.suite.to_string(),
                property: p.name.to_string(),
                cases,
                failures,
                first_failure: first,
            }
        })
        .collect()
}
