//! Numerical results checked against values derived independently of the
//! library code paths.

use mingraph::diagnostics::{bnorm_sq, logv_identity_batch, PointSampler};
use mingraph::grassmann::{singular_spectrum, slope, two_dilation};
use mingraph::measure::{density_profile, omega};
use mingraph::model_zoo::{model_lawson_osserman, model_slag_exp, Order};
use mingraph::solver::{residual_at_node, residual_divergence, residual_strong, weak_harmonicity_defect};
use mingraph::GraphPatch;
use nalgebra::DMatrix;

fn lo_points(count: usize) -> Vec<Vec<f64>> {
    PointSampler::Annulus {
        count,
        inner: 0.5,
        outer: 2.0,
    }
    .points(4, 11)
    .unwrap()
}

#[test]
fn lawson_osserman_residual_and_constants() {
    let lo = model_lawson_osserman();
    for x in lo_points(1000) {
        let jet = lo.jet(&x, Order::Second).unwrap();
        assert!(residual_strong(&jet.jacobian, &jet.hessian).amax() <= 1e-8, "{x:?}");
        // metric determinant, without any SVD
        let g = DMatrix::identity(4, 4) + jet.jacobian.transpose() * &jet.jacobian;
        assert!((g.determinant().sqrt() - 9.0).abs() <= 1e-10);
        let s = singular_spectrum(&lo.jacobian_sample(&x).unwrap());
        assert!((slope(&s) - 9.0).abs() <= 1e-10);
        assert!((s.lip() - 5f64.sqrt()).abs() <= 1e-10);
        assert!((two_dilation(&s) - 5.0).abs() <= 1e-10);
    }
}

#[test]
fn lawson_osserman_density_is_sixteen_ninths() {
    // |u| = (√5/2)|x| puts the graph over the ball of radius 2ρ/3, and the
    // area element is the constant v, so Θ = v (2/3)⁴.
    let lo = model_lawson_osserman();
    let x = [0.3, -1.1, 0.4, 0.9];
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = lo.value(&x).unwrap().norm() / r;
    let g = DMatrix::identity(4, 4) + {
        let j = lo.jacobian(&x).unwrap();
        j.transpose() * &j
    };
    let oracle = g.determinant().sqrt() / (1.0 + c * c).powi(2);
    assert!((oracle - 16.0 / 9.0).abs() < 1e-12);

    let d = density_profile(&lo, &[0.0; 7], &[1.0, 3.0], 32).unwrap();
    for (q, e) in d.ratios.iter().zip(&d.errors) {
        assert!((q - oracle).abs() <= *e, "{q} ± {e} vs {oracle}");
    }
    assert!((d.volumes[0] - oracle * omega(4)).abs() <= d.errors[0] * omega(4));
}

#[test]
fn slag_spectrum_and_curvature() {
    let slag = model_slag_exp();
    for &(a, b) in &[(0.0, 0.0), (-1.5, 0.3), (1.2, 2.0), (0.4, -1.7)] {
        let s = singular_spectrum(&slag.jacobian_sample(&[a, b]).unwrap());
        assert!((s.values()[0] - f64::exp(a)).abs() < 1e-12);
        assert!((s.values()[1] - f64::exp(a)).abs() < 1e-12);
        // the graph is the complex curve w = conj(e^z): K = −2|f″|²/(1 + |f′|²)³
        // and |B|² = −2K = 4 e^{2x}/(1 + e^{2x})³
        let e2 = f64::exp(2.0 * a);
        let want = 4.0 * e2 / (1.0 + e2).powi(3);
        let got = bnorm_sq(&slag, &[a, b]).unwrap();
        assert!((got - want).abs() <= 1e-12 * (1.0 + want), "{got} vs {want}");
    }
}

fn refinement_ratios(mut f: impl FnMut(&GraphPatch, usize) -> f64) -> Vec<f64> {
    let slag = model_slag_exp();
    let errors: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&k| {
            let p = GraphPatch::sampled(&slag, vec![2 * k + 1, 2 * k + 1], 0.5 / k as f64, vec![0.0, 0.0]).unwrap();
            f(&p, k)
        })
        .collect();
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn strong_residual_is_second_order() {
    let r = refinement_ratios(|p, k| residual_at_node(p, &[k, k]).unwrap().amax());
    assert!(r.iter().all(|q| (3.9..=4.1).contains(q)), "{r:?}");
}

#[test]
fn divergence_residual_is_second_order() {
    let r = refinement_ratios(|p, k| residual_divergence(p, &[k, k]).unwrap().amax());
    assert!(r.iter().all(|q| (3.9..=4.1).contains(q)), "{r:?}");
}

#[test]
fn weak_defect_is_second_order() {
    let r = refinement_ratios(|p, _| {
        weak_harmonicity_defect(p, 0)
            .unwrap()
            .max(weak_harmonicity_defect(p, 1).unwrap())
    });
    // pre-asymptotic on the coarsest grid
    assert!(r.iter().all(|q| (3.5..=4.5).contains(q)), "{r:?}");
    assert!(r[r.len() - 1] > 3.9, "{r:?}");
}

#[test]
fn logv_identity_closes_on_slag() {
    let slag = model_slag_exp();
    let pts = PointSampler::Box {
        count: 50,
        lower: -1.5,
        upper: 1.5,
    }
    .points(2, 5)
    .unwrap();
    for r in logv_identity_batch(&slag, &pts, 1e-3).unwrap() {
        // second-order outer difference: gap ≈ C h²
        assert!(r.gap.abs() <= 1e-6 * (1.0 + r.rhs.abs()), "{r:?}");
        assert!(r.margin_delta1 >= -1e-8);
    }
}
