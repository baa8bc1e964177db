//! JSON run configurations. Every field has a default, and the resolved
//! configuration is written back into the output manifest.

use std::fs;
use std::path::Path;

use mingraph::model_zoo::{model_affine, model_by_label, model_quadratic, AnalyticModel};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Read {
                path: p.to_path_buf(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// A catalogue label, or explicit affine / quadratic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Label(String),
    Affine { affine: AffineSpec },
    Quadratic { quadratic: QuadraticSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    /// Rows of the m×n matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// One n×n matrix (as rows) per component.
    pub c: Vec<Vec<Vec<f64>>>,
}

fn matrix(rows: &[Vec<f64>]) -> CliResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Config("matrices need equal-length, non-empty rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<AnalyticModel> {
        Ok(match self {
            ModelSpec::Label(l) => model_by_label(l)?,
            ModelSpec::Affine { affine } => {
                model_affine(matrix(&affine.a)?, DVector::from_vec(affine.b.clone()))?
            }
            ModelSpec::Quadratic { quadratic } => {
                let c = quadratic.c.iter().map(|m| matrix(m)).collect::<CliResult<Vec<_>>>()?;
                model_quadratic(matrix(&quadratic.a)?, DVector::from_vec(quadratic.b.clone()), c)?
            }
        })
    }

    pub fn label(&self) -> &str {
        match self {
            ModelSpec::Label(l) => l,
            ModelSpec::Affine { .. } => "affine",
            ModelSpec::Quadratic { .. } => "quadratic",
        }
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Label("lawson-osserman".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labels_and_coefficients() {
        let m: ModelSpec = serde_json::from_str(r#""slag-exp""#).unwrap();
        assert_eq!(m.build().unwrap().n(), 2);
        let m: ModelSpec = serde_json::from_str(r#"{"affine":{"a":[[1,0,2]],"b":[0]}}"#).unwrap();
        let model = m.build().unwrap();
        assert_eq!((model.n(), model.m()), (3, 1));
        let m: ModelSpec =
            serde_json::from_str(r#"{"quadratic":{"a":[[0,0]],"b":[1],"c":[[[2,0],[0,-2]]]}}"#).unwrap();
        assert_eq!(m.label(), "quadratic");
        assert!(m.build().is_ok());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let m: ModelSpec = serde_json::from_str(r#"{"affine":{"a":[[1,0],[2]],"b":[0,0]}}"#).unwrap();
        assert!(matches!(m.build(), Err(CliError::Config(_))));
    }
}
