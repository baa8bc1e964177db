//! Numerical toolkit for minimal graphs of higher codimension: Jacobian and
//! Grassmannian invariants, closed-form model graphs, a finite-difference
//! minimal-surface solver, curvature diagnostics, volume quadrature and
//! brute-force checks of the algebraic inequalities behind the Δ log v
//! estimates.
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod diagnostics;
pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod measure;
pub mod model_zoo;
pub mod par;
pub mod patch;
pub mod report;
pub mod selfcheck;
pub mod solver;

pub use error::{Error, Result};
pub use grassmann::{JacobianSample, PlaneBasis, SingularSpectrum};
pub use model_zoo::AnalyticModel;
pub use patch::GraphPatch;
pub use report::ScanReport;
