//! Closed-form graphs with exact first and second derivatives.
//!
//! These are the ground truth for the solver, the curvature diagnostics and
//! the measure tools. Every model is an immutable value; wrappers
//! ([`blow_down`], [`AnalyticModel::rigid_motion`]) compose by boxing.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::grassmann::{JacobianSample, PlaneBasis};

/// Per-component Hessians: `hessian[α]` is the symmetric n×n matrix
/// `∂²u^α/∂x_i∂x_j`.
pub type Hessian = Vec<DMatrix<f64>>;

/// Value and derivatives of a model at one point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// Empty unless second derivatives were requested.
    pub hessian: Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone)]
enum Kind {
    Affine {
        a: DMatrix<f64>,
        b: DVector<f64>,
    },
    /// `u^α = b_α + (A x)_α + ½ xᵀ C_α x`
    Quadratic {
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: Hessian,
    },
    SlagExp,
    LawsonOsserman,
    BlowDown {
        inner: Box<AnalyticModel>,
        scale: f64,
    },
    /// `x ↦ Q u(Pᵀ(x − a)) + b`, the graph moved by the ambient rigid motion
    /// `(x, y) ↦ (Px + a, Qy + b)`.
    Rigid {
        inner: Box<AnalyticModel>,
        base_rot: DMatrix<f64>,
        base_shift: DVector<f64>,
        fiber_rot: DMatrix<f64>,
        fiber_shift: DVector<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct AnalyticModel {
    label: String,
    n: usize,
    m: usize,
    kind: Kind,
}

/// Labels accepted by [`model_by_label`], with a one-line description.
pub const CATALOG: &[(&str, &str)] = &[
    ("affine", "flat graph x ↦ Ax + b (default: zero map ℝ² → ℝ²)"),
    ("slag-exp", "special Lagrangian graph of Dφ, φ = eˣ cos y (n = m = 2)"),
    ("lawson-osserman", "Lawson–Osserman Hopf cone ℝ⁴ → ℝ³, singular at 0"),
];

pub fn model_by_label(label: &str) -> Result<AnalyticModel> {
    match label {
        "affine" => model_affine(DMatrix::zeros(2, 2), DVector::zeros(2)),
        "slag-exp" => Ok(model_slag_exp()),
        "lawson-osserman" => Ok(model_lawson_osserman()),
        other => Err(Error::InvalidInput(format!("unknown model label `{other}`"))),
    }
}

pub fn model_affine(a: DMatrix<f64>, b: DVector<f64>) -> Result<AnalyticModel> {
    ensure_finite(a.as_slice(), "affine matrix")?;
    ensure_finite(b.as_slice(), "affine offset")?;
    if a.nrows() != b.len() || a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: format!("offset of length {}", a.nrows()),
            got: format!("{}", b.len()),
        });
    }
    Ok(AnalyticModel {
        label: "affine".into(),
        n: a.ncols(),
        m: a.nrows(),
        kind: Kind::Affine { a, b },
    })
}

/// Quadratic map `u^α(x) = b_α + (A x)_α + ½ xᵀ C_α x`; the `C_α` are
/// symmetrized.
pub fn model_quadratic(a: DMatrix<f64>, b: DVector<f64>, c: Hessian) -> Result<AnalyticModel> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != m || c.iter().any(|h| h.shape() != (n, n)) {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} offsets and {m} Hessians of size {n}×{n}"),
            got: format!("{} offsets, {} Hessians", b.len(), c.len()),
        });
    }
    ensure_finite(a.as_slice(), "quadratic linear part")?;
    ensure_finite(b.as_slice(), "quadratic offset")?;
    for h in &c {
        ensure_finite(h.as_slice(), "quadratic Hessian")?;
    }
    let c = c.into_iter().map(|h| (&h + h.transpose()) * 0.5).collect();
    Ok(AnalyticModel {
        label: "quadratic".into(),
        n,
        m,
        kind: Kind::Quadratic { a, b, c },
    })
}

/// `u = Dφ` with `φ = eˣ cos y`: `u = (eˣ cos y, −eˣ sin y)`.
pub fn model_slag_exp() -> AnalyticModel {
    AnalyticModel {
        label: "slag-exp".into(),
        n: 2,
        m: 2,
        kind: Kind::SlagExp,
    }
}

/// `w(x) = (√5/2) |x| η(x/|x|)` with the Hopf map
/// `η = (a² + b² − c² − d², 2(ac + bd), 2(bc − ad))` for `x = (a, b, c, d)`.
pub fn model_lawson_osserman() -> AnalyticModel {
    AnalyticModel {
        label: "lawson-osserman".into(),
        n: 4,
        m: 3,
        kind: Kind::LawsonOsserman,
    }
}

/// `x ↦ u(r x) / r`; the identity for 1-homogeneous models.
pub fn blow_down(model: &AnalyticModel, scale: f64) -> Result<AnalyticModel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("blow-down scale {scale} must be > 0")));
    }
    Ok(AnalyticModel {
        label: format!("{}@{}", model.label, scale),
        n: model.n,
        m: model.m,
        kind: Kind::BlowDown {
            inner: Box::new(model.clone()),
            scale,
        },
    })
}

/// Tangent plane of the graph at `(x, u(x))`, oriented positively against
/// the base plane.
pub fn model_graph_plane_basis(model: &AnalyticModel, x: &[f64]) -> Result<PlaneBasis> {
    Ok(PlaneBasis::graph_plane(&model.jacobian_sample(x)?))
}

fn hopf_forms() -> [DMatrix<f64>; 3] {
    let s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
    let mut s2 = DMatrix::zeros(4, 4);
    s2[(0, 2)] = 1.0;
    s2[(2, 0)] = 1.0;
    s2[(1, 3)] = 1.0;
    s2[(3, 1)] = 1.0;
    let mut s3 = DMatrix::zeros(4, 4);
    s3[(1, 2)] = 1.0;
    s3[(2, 1)] = 1.0;
    s3[(0, 3)] = -1.0;
    s3[(3, 0)] = -1.0;
    [s1, s2, s3]
}

impl AnalyticModel {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// True for models that are exactly 1-homogeneous around the origin.
    pub fn is_cone(&self) -> bool {
        match &self.kind {
            Kind::LawsonOsserman => true,
            Kind::BlowDown { inner, .. } => inner.is_cone(),
            _ => false,
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        if x.len() != self.n || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.kind {
            Kind::LawsonOsserman => x.iter().any(|v| *v != 0.0),
            Kind::BlowDown { inner, scale } => {
                let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
                inner.in_domain(&y)
            }
            Kind::Rigid {
                inner,
                base_rot,
                base_shift,
                ..
            } => {
                let y = base_rot.transpose() * (DVector::from_column_slice(x) - base_shift);
                inner.in_domain(y.as_slice())
            }
            _ => true,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("point in ℝ^{}", self.n),
                got: format!("ℝ^{}", x.len()),
            });
        }
        if !self.in_domain(x) {
            return Err(Error::Domain {
                model: self.label.clone(),
                point: x.to_vec(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.jet(x, Order::First)?.value)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.jet(x, Order::First)?.jacobian)
    }

    pub fn jacobian_sample(&self, x: &[f64]) -> Result<JacobianSample> {
        JacobianSample::new(self.jacobian(x)?)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Hessian> {
        Ok(self.jet(x, Order::Second)?.hessian)
    }

    pub fn jet(&self, x: &[f64], order: Order) -> Result<Jet> {
        self.check(x)?;
        let second = order == Order::Second;
        let (n, m) = (self.n, self.m);
        let jet = match &self.kind {
            Kind::Affine { a, b } => Jet {
                value: a * DVector::from_column_slice(x) + b,
                jacobian: a.clone(),
                hessian: if second {
                    vec![DMatrix::zeros(n, n); m]
                } else {
                    Vec::new()
                },
            },
            Kind::Quadratic { a, b, c } => {
                let xv = DVector::from_column_slice(x);
                let mut value = a * &xv + b;
                let mut jacobian = a.clone();
                for (alpha, ca) in c.iter().enumerate() {
                    let cx = ca * &xv;
                    value[alpha] += 0.5 * xv.dot(&cx);
                    for i in 0..n {
                        jacobian[(alpha, i)] += cx[i];
                    }
                }
                Jet {
                    value,
                    jacobian,
                    hessian: if second { c.clone() } else { Vec::new() },
                }
            }
            Kind::SlagExp => {
                let e = x[0].exp();
                let (s, co) = x[1].sin_cos();
                let (ec, es) = (e * co, e * s);
                Jet {
                    value: DVector::from_vec(vec![ec, -es]),
                    jacobian: DMatrix::from_row_slice(2, 2, &[ec, -es, -es, -ec]),
                    hessian: if second {
                        vec![
                            DMatrix::from_row_slice(2, 2, &[ec, -es, -es, -ec]),
                            DMatrix::from_row_slice(2, 2, &[-es, -ec, -ec, es]),
                        ]
                    } else {
                        Vec::new()
                    },
                }
            }
            Kind::LawsonOsserman => lawson_osserman_jet(x, second),
            Kind::BlowDown { inner, scale } => {
                let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
                let mut jet = inner.jet(&y, order)?;
                jet.value /= *scale;
                for h in jet.hessian.iter_mut() {
                    *h *= *scale;
                }
                jet
            }
            Kind::Rigid {
                inner,
                base_rot,
                base_shift,
                fiber_rot,
                fiber_shift,
            } => {
                let y = base_rot.transpose() * (DVector::from_column_slice(x) - base_shift);
                let inner_jet = inner.jet(y.as_slice(), order)?;
                let value = fiber_rot * &inner_jet.value + fiber_shift;
                let jacobian = fiber_rot * &inner_jet.jacobian * base_rot.transpose();
                let hessian = if second {
                    let rotated: Vec<DMatrix<f64>> = inner_jet
                        .hessian
                        .iter()
                        .map(|h| base_rot * h * base_rot.transpose())
                        .collect();
                    (0..m)
                        .map(|alpha| {
                            let mut acc = DMatrix::zeros(n, n);
                            for (beta, hb) in rotated.iter().enumerate() {
                                acc += hb * fiber_rot[(alpha, beta)];
                            }
                            acc
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                Jet {
                    value,
                    jacobian,
                    hessian,
                }
            }
        };
        Ok(jet)
    }

    /// The same graph moved by the ambient rigid motion
    /// `(x, y) ↦ (P x + a, Q y + b)`; P and Q must be orthogonal.
    pub fn rigid_motion(
        &self,
        base_rot: DMatrix<f64>,
        base_shift: DVector<f64>,
        fiber_rot: DMatrix<f64>,
        fiber_shift: DVector<f64>,
    ) -> Result<AnalyticModel> {
        let (n, m) = (self.n, self.m);
        if base_rot.shape() != (n, n)
            || fiber_rot.shape() != (m, m)
            || base_shift.len() != n
            || fiber_shift.len() != m
        {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}×{n} and {m}×{m} rotations"),
                got: format!("{:?} and {:?}", base_rot.shape(), fiber_rot.shape()),
            });
        }
        for (r, k) in [(&base_rot, n), (&fiber_rot, m)] {
            if (r.transpose() * r - DMatrix::<f64>::identity(k, k)).amax() > 1e-10 {
                return Err(Error::InvalidInput("rotation is not orthogonal".into()));
            }
        }
        Ok(AnalyticModel {
            label: format!("{}+rigid", self.label),
            n,
            m,
            kind: Kind::Rigid {
                inner: Box::new(self.clone()),
                base_rot,
                base_shift,
                fiber_rot,
                fiber_shift,
            },
        })
    }
}

fn lawson_osserman_jet(x: &[f64], second: bool) -> Jet {
    let k = 5f64.sqrt() / 2.0;
    let xv = DVector::from_column_slice(x);
    let r2 = xv.norm_squared();
    let r = r2.sqrt();
    let r3 = r2 * r;
    let forms = hopf_forms();
    let mut value = DVector::zeros(3);
    let mut jacobian = DMatrix::zeros(3, 4);
    let mut hessian = Vec::new();
    for (alpha, s) in forms.iter().enumerate() {
        let sx = s * &xv;
        let q = xv.dot(&sx);
        let grad_q = &sx * 2.0;
        value[alpha] = k * q / r;
        let grad = (&grad_q / r - &xv * (q / r3)) * k;
        jacobian.set_row(alpha, &grad.transpose());
        if second {
            let cross = &grad_q * xv.transpose() + &xv * grad_q.transpose();
            let h = (s * (2.0 / r)) - cross / r3 - DMatrix::identity(4, 4) * (q / r3)
                + (&xv * xv.transpose()) * (3.0 * q / (r3 * r2));
            hessian.push(h * k);
        }
    }
    Jet {
        value,
        jacobian,
        hessian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{plane_inner, singular_spectrum, slope, two_dilation};
    use approx::assert_relative_eq;

    #[test]
    fn affine_examples() {
        let zero = model_affine(DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap();
        let s = singular_spectrum(&zero.jacobian_sample(&[0.3, -1.0]).unwrap());
        assert_eq!(slope(&s), 1.0);
        let id = model_affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let s = singular_spectrum(&id.jacobian_sample(&[5.0, 2.0]).unwrap());
        assert_relative_eq!(slope(&s), 2.0, epsilon = 1e-14);
        assert!(id.hessian(&[1.0, 1.0]).unwrap().iter().all(|h| h.amax() == 0.0));
        assert!(model_affine(DMatrix::zeros(2, 2), DVector::zeros(3)).is_err());
    }

    #[test]
    fn slag_exp_spectrum_and_slope() {
        let m = model_slag_exp();
        for &(x, y) in &[(0.0, 0.0), (0.7, -1.3), (-1.5, 2.0)] {
            let s = singular_spectrum(&m.jacobian_sample(&[x, y]).unwrap());
            let e = f64::exp(x);
            assert_relative_eq!(s.values()[0], e, max_relative = 1e-13);
            assert_relative_eq!(s.values()[1], e, max_relative = 1e-13);
        }
        let s = singular_spectrum(&m.jacobian_sample(&[0.0, 0.0]).unwrap());
        assert_relative_eq!(slope(&s), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn lawson_osserman_constants_at_axis_point() {
        let m = model_lawson_osserman();
        let s = singular_spectrum(&m.jacobian_sample(&[1.0, 0.0, 0.0, 0.0]).unwrap());
        assert_relative_eq!(s.lip(), 5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(two_dilation(&s), 5.0, epsilon = 1e-12);
        assert_relative_eq!(slope(&s), 9.0, epsilon = 1e-12);
        assert!(matches!(m.value(&[0.0; 4]), Err(Error::Domain { .. })));
    }

    #[test]
    fn graph_plane_examples() {
        let zero = model_by_label("affine").unwrap();
        let p = model_graph_plane_basis(&zero, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(
            plane_inner(&p, &PlaneBasis::coordinate(2, 2)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let lo = model_lawson_osserman();
        let p = model_graph_plane_basis(&lo, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            plane_inner(&p, &PlaneBasis::coordinate(4, 3)).unwrap(),
            1.0 / 9.0,
            epsilon = 1e-12
        );
        assert!(model_graph_plane_basis(&lo, &[0.0; 4]).is_err());
    }

    #[test]
    fn blow_down_examples() {
        let lo = model_lawson_osserman();
        let x = [0.3, -0.2, 0.9, 0.4];
        for r in [0.1, 3.0, 100.0] {
            let b = blow_down(&lo, r).unwrap();
            assert!((b.value(&x).unwrap() - lo.value(&x).unwrap()).amax() < 1e-12);
        }
        let aff = model_affine(DMatrix::identity(2, 2), DVector::from_vec(vec![4.0, -2.0])).unwrap();
        let b = blow_down(&aff, 8.0).unwrap();
        let v = b.value(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(v[0], 0.5);
        assert_relative_eq!(v[1], -0.25);
        assert!(blow_down(&aff, 0.0).is_err());
    }

    #[test]
    fn unknown_label() {
        assert!(model_by_label("bdg-cone").is_err());
        for (label, _) in CATALOG {
            assert_eq!(model_by_label(label).unwrap().label(), *label);
        }
    }
}
