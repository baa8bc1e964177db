//! Pointwise Grassmannian invariants of a graph `x ↦ (x, u(x))`.
//!
//! Everything here is derived from the Jacobian `Du` at a single point: its
//! singular values `λ₁ ≥ … ≥ λₙ`, the slope `v = Π √(1 + λᵢ²)`, the
//! 2-dilation `λ₁λ₂`, and the Jordan angles between the tangent plane and
//! the base plane, which satisfy `λᵢ = tan θᵢ`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Jacobian `∂u^α/∂x_i` of an m-valued map of n variables at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianSample {
    entries: DMatrix<f64>,
}

impl JacobianSample {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidInput(
                "jacobian needs m ≥ 1 and n ≥ 1".into(),
            ));
        }
        ensure_finite(entries.as_slice(), "jacobian")?;
        Ok(Self { entries })
    }

    /// Row-major `m × n` entries.
    pub fn from_rows(m: usize, n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", m * n),
                got: format!("{}", rows.len()),
            });
        }
        Self::new(DMatrix::from_row_slice(m, n, rows))
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(m, n))
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Induced metric `g = I + DuᵀDu`.
    pub fn metric(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) + self.entries.transpose() * &self.entries
    }
}

/// Singular values of a Jacobian, sorted descending, length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Accepts any nonnegative finite values; they are sorted descending.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        ensure_finite(&values, "spectrum")?;
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "negative singular value {v}"
            )));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest singular value, i.e. the pointwise Lipschitz constant.
    pub fn lip(&self) -> f64 {
        self.values[0]
    }
}

pub fn singular_spectrum(j: &JacobianSample) -> SingularSpectrum {
    SingularSpectrum {
        values: crate::linalg::full_svd(j.matrix()).values,
    }
}

/// `v = Π √(1 + λᵢ²) ≥ 1`.
pub fn slope(s: &SingularSpectrum) -> f64 {
    s.values.iter().map(|l| (1.0 + l * l).sqrt()).product()
}

/// `max_{i≠j} λᵢλⱼ = λ₁λ₂`; zero for n = 1.
pub fn two_dilation(s: &SingularSpectrum) -> f64 {
    match s.values.as_slice() {
        [a, b, ..] => a * b,
        _ => 0.0,
    }
}

/// Flatness hypothesis `|Λ²du|² ≤ 2 Lip² / |Lip² − 1|` with `Lip = λ₁`;
/// the right side is +∞ when `λ₁ = 1`.
pub fn bernstein_condition(s: &SingularSpectrum) -> bool {
    let lip = s.lip();
    let denom = (lip * lip - 1.0).abs();
    if denom == 0.0 {
        return true;
    }
    let d = two_dilation(s);
    d * d <= 2.0 * lip * lip / denom
}

/// Oriented n-plane in ℝ^{n+m}, stored as an orthonormal basis in the
/// columns of an `ambient × dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneBasis {
    vectors: DMatrix<f64>,
}

impl PlaneBasis {
    /// Columns must already be orthonormal within 1e-12.
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        let k = vectors.ncols();
        if k == 0 || vectors.nrows() < k {
            return Err(Error::InvalidInput(format!(
                "{} vectors in ℝ^{} do not span a plane",
                k,
                vectors.nrows()
            )));
        }
        ensure_finite(vectors.as_slice(), "plane basis")?;
        let gram = vectors.transpose() * &vectors;
        let dev = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if dev > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "basis is not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Self { vectors })
    }

    /// Orthonormalizes arbitrary spanning columns, keeping their orientation.
    pub fn from_spanning(vectors: &DMatrix<f64>) -> Result<Self> {
        ensure_finite(vectors.as_slice(), "spanning vectors")?;
        Self::new(crate::linalg::orthonormalize(vectors)?)
    }

    /// The coordinate plane `E₁ ∧ … ∧ Eₙ` in ℝ^{n+m}.
    pub fn coordinate(n: usize, m: usize) -> Self {
        Self {
            vectors: DMatrix::identity(n + m, n),
        }
    }

    /// Tangent plane of the graph with Jacobian `j`: spanned by
    /// `Eᵢ + Σ_α ∂ᵢu^α E_{n+α}`, oriented so that its inner product with the
    /// coordinate plane is `1/v > 0`.
    pub fn graph_plane(j: &JacobianSample) -> Self {
        let (m, n) = (j.m(), j.n());
        let mut spanning = DMatrix::zeros(n + m, n);
        spanning.view_mut((0, 0), (n, n)).fill_with_identity();
        spanning.view_mut((n, 0), (m, n)).copy_from(j.matrix());
        let q = crate::linalg::orthonormalize(&spanning).expect("graph planes are never degenerate");
        Self { vectors: q }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || self.ambient() != other.ambient() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}-plane in ℝ^{}", self.dim(), self.ambient()),
                got: format!("{}-plane in ℝ^{}", other.dim(), other.ambient()),
            });
        }
        Ok(())
    }
}

/// Jordan (principal) angles, sorted descending, each in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanAngles {
    pub angles: Vec<f64>,
}

/// Principal angles between two n-planes.
///
/// The cosines `μᵢ` are the singular values of `W = (⟨eᵢ, fⱼ⟩)` and the
/// sines those of the component of Q orthogonal to P. Each angle is taken
/// from whichever of the two is the better conditioned (`arccos` loses
/// accuracy near μ = 1), after clamping into `[0, 1]`.
pub fn jordan_angles(p: &PlaneBasis, q: &PlaneBasis) -> Result<JordanAngles> {
    p.check_compatible(q)?;
    let n = p.dim();
    let w = p.vectors.transpose() * &q.vectors;
    let mut cos: Vec<f64> = crate::linalg::full_svd(&w).values.iter().map(|c| c.clamp(0.0, 1.0)).collect();
    cos.sort_by(|a, b| b.total_cmp(a));

    let residual = &q.vectors - &p.vectors * &w;
    let mut sin: Vec<f64> = crate::linalg::full_svd(&residual)
        .values
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    sin.resize(n, 0.0);
    sin.sort_by(|a, b| a.total_cmp(b));

    let mut angles: Vec<f64> = cos
        .iter()
        .zip(&sin)
        .map(|(&c, &s)| {
            if c > std::f64::consts::FRAC_1_SQRT_2 {
                s.asin()
            } else {
                c.acos()
            }
            .clamp(0.0, FRAC_PI_2)
        })
        .collect();
    angles.sort_by(|a, b| b.total_cmp(a));
    Ok(JordanAngles { angles })
}

/// `⟨e₁∧…∧eₙ, f₁∧…∧fₙ⟩ = det W`; keeps the orientation sign.
pub fn plane_inner(p: &PlaneBasis, q: &PlaneBasis) -> Result<f64> {
    p.check_compatible(q)?;
    Ok((p.vectors.transpose() * &q.vectors).determinant())
}

/// `√(Σ θᵢ²)`.
pub fn grassmann_distance(p: &PlaneBasis, q: &PlaneBasis) -> Result<f64> {
    let a = jordan_angles(p, q)?;
    Ok(a.angles.iter().map(|t| t * t).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

    fn spec(v: &[f64]) -> SingularSpectrum {
        SingularSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_of_simple_matrices() {
        let z = JacobianSample::zeros(3, 2).unwrap();
        assert_eq!(singular_spectrum(&z).values(), &[0.0, 0.0]);
        let d = JacobianSample::from_rows(2, 2, &[3.0, 0.0, 0.0, 4.0]).unwrap();
        let s = singular_spectrum(&d);
        assert_relative_eq!(s.values()[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(s.values()[1], 3.0, epsilon = 1e-14);
        // wide matrix pads with zeros up to n
        let w = JacobianSample::from_rows(1, 3, &[1.0, 2.0, 2.0]).unwrap();
        let s = singular_spectrum(&w);
        assert_eq!(s.len(), 3);
        assert_relative_eq!(s.values()[0], 3.0, epsilon = 1e-14);
        assert_eq!(&s.values()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn non_finite_jacobian_rejected() {
        let e = JacobianSample::from_rows(1, 2, &[f64::NAN, 0.0]);
        assert!(matches!(e, Err(Error::InvalidInput(_))));
        assert!(JacobianSample::from_rows(1, 2, &[1.0]).is_err());
        assert!(SingularSpectrum::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn slope_and_dilation_examples() {
        assert_eq!(slope(&spec(&[0.0, 0.0])), 1.0);
        assert_relative_eq!(slope(&spec(&[1.0, 1.0])), 2.0, epsilon = 1e-14);
        assert_eq!(two_dilation(&spec(&[2.0, 1.0, 0.5])), 2.0);
        assert_eq!(two_dilation(&spec(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(two_dilation(&spec(&[7.0])), 0.0);
    }

    #[test]
    fn bernstein_examples() {
        let five = 5f64.sqrt();
        assert!(!bernstein_condition(&spec(&[five, five, five / 2.0, 0.0])));
        assert!(bernstein_condition(&spec(&[1.0, 1.0, 1.0])));
        assert!(bernstein_condition(&spec(&[SQRT_2, 1.0])));
        assert!(bernstein_condition(&spec(&[3.0])));
    }

    #[test]
    fn jordan_angle_examples() {
        let base = PlaneBasis::coordinate(2, 2);
        let a = jordan_angles(&base, &base).unwrap();
        assert!(a.angles.iter().all(|t| t.abs() < 1e-15));

        let mut v = DMatrix::zeros(4, 2);
        v[(2, 0)] = 1.0;
        v[(3, 1)] = 1.0;
        let other = PlaneBasis::new(v).unwrap();
        let a = jordan_angles(&base, &other).unwrap();
        assert_relative_eq!(a.angles[0], FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(a.angles[1], FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(plane_inner(&base, &other).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            grassmann_distance(&base, &other).unwrap(),
            PI / SQRT_2,
            epsilon = 1e-14
        );

        let j = JacobianSample::from_rows(1, 2, &[1.0, 0.0]).unwrap();
        let g = PlaneBasis::graph_plane(&j);
        let b1 = PlaneBasis::coordinate(2, 1);
        let a = jordan_angles(&g, &b1).unwrap();
        assert_relative_eq!(a.angles[0], FRAC_PI_4, epsilon = 1e-15);
        assert!(a.angles[1].abs() < 1e-15);
        assert_relative_eq!(plane_inner(&g, &b1).unwrap(), 1.0 / SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(grassmann_distance(&g, &b1).unwrap(), FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_planes_rejected() {
        let a = PlaneBasis::coordinate(2, 2);
        let b = PlaneBasis::coordinate(2, 1);
        assert!(matches!(jordan_angles(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(plane_inner(&a, &b).is_err());
        assert!(grassmann_distance(&a, &b).is_err());
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 0.1, 0.0, 1.0, 0.0, 0.0]);
        assert!(PlaneBasis::new(v.clone()).is_err());
        let p = PlaneBasis::from_spanning(&v).unwrap();
        assert_eq!(p.dim(), 2);
    }
}
