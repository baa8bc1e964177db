//! Browser bindings: Jacobian invariants, φ slices and model probes.
//!
//! The `*_json` functions are plain Rust so they can be tested natively;
//! the exported wrappers only translate errors into JS exceptions.
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use mingraph::algebra::{phi, Mu123Constraint, MuTriple};
use mingraph::diagnostics::bnorm_sq_from_jet;
use mingraph::grassmann::{bernstein_condition, jordan_angles, singular_spectrum, slope, two_dilation};
use mingraph::model_zoo::{model_by_label, Order};
use mingraph::solver::residual_strong;
use mingraph::{JacobianSample, PlaneBasis};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Invariants of an `m × n` Jacobian given row-major.
pub fn jacobian_invariants_json(m: usize, n: usize, entries: &[f64]) -> Result<String, String> {
    let j = JacobianSample::from_rows(m, n, entries).map_err(|e| e.to_string())?;
    let s = singular_spectrum(&j);
    let angles = jordan_angles(&PlaneBasis::coordinate(n, m), &PlaneBasis::graph_plane(&j)).map_err(|e| e.to_string())?;
    Ok(json!({
        "spectrum": s.values(),
        "slope": slope(&s),
        "lip": s.lip(),
        "dilation": two_dilation(&s),
        "bernstein": bernstein_condition(&s),
        "angles_deg": angles.angles.iter().map(|a| a.to_degrees()).collect::<Vec<_>>(),
    })
    .to_string())
}

/// φ on a `res × res` grid over `[0, mu_max]²` at fixed μ₃, row-major with
/// μ₁ along rows; NaN where the triple is outside the admissible region.
pub fn phi_slice_values(mu3: f64, mu_max: f64, res: usize, weakened: bool) -> Result<Vec<f64>, String> {
    if !(mu_max > 0.0 && mu_max.is_finite()) || !(mu3 >= 0.0) || !(2..=1024).contains(&res) {
        return Err(format!("bad slice parameters μ₃ = {mu3}, μ_max = {mu_max}, res = {res}"));
    }
    let constraint = if weakened {
        Mu123Constraint::PairwiseAtMost4
    } else {
        Mu123Constraint::Paper
    };
    let step = mu_max / (res - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for i in 0..res {
        for k in 0..res {
            let t = MuTriple(i as f64 * step, k as f64 * step, mu3);
            out.push(if constraint.admits(&t) { phi(t) } else { f64::NAN });
        }
    }
    Ok(out)
}

/// Pointwise quantities of a catalogue model at `x`.
pub fn model_probe_json(label: &str, x: &[f64]) -> Result<String, String> {
    let model = model_by_label(label).map_err(|e| e.to_string())?;
    if x.len() != model.n() {
        return Err(format!("{label} needs a point in ℝ^{}", model.n()));
    }
    let jet = model.jet(x, Order::Second).map_err(|e| e.to_string())?;
    let s = singular_spectrum(&JacobianSample::new(jet.jacobian.clone()).map_err(|e| e.to_string())?);
    Ok(json!({
        "value": jet.value.as_slice(),
        "v": slope(&s),
        "lip": s.lip(),
        "dilation": two_dilation(&s),
        "bnorm_sq": bnorm_sq_from_jet(&jet.jacobian, &jet.hessian),
        "residual": residual_strong(&jet.jacobian, &jet.hessian).amax(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn jacobian_invariants(m: usize, n: usize, entries: &[f64]) -> Result<String, JsValue> {
    jacobian_invariants_json(m, n, entries).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn phi_slice(mu3: f64, mu_max: f64, res: usize, weakened: bool) -> Result<Vec<f64>, JsValue> {
    phi_slice_values(mu3, mu_max, res, weakened).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn model_probe(label: &str, x: &[f64]) -> Result<String, JsValue> {
    model_probe_json(label, x).map_err(|e| JsValue::from_str(&e))
}
