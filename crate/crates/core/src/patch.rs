//! Uniform grid patches and the MGP1 on-disk format.
//!
//! MGP1 is a JSON manifest
//! `{"format":"MGP1","n":..,"m":..,"dims":[..],"spacing":..,"origin":[..],"data":"<path>"}`
//! next to a raw file of little-endian `f64`s: nodes in row-major order
//! (last axis fastest), `m` consecutive components per node. The data path
//! is resolved relative to the manifest's directory. The boundary mask is
//! implicit: exactly the outermost node layer.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model_zoo::{AnalyticModel, Order};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPatch {
    n: usize,
    m: usize,
    dims: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    n: usize,
    m: usize,
    dims: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
    data: String,
}

impl GraphPatch {
    /// Zero-valued patch; `n ∈ {2, 3}`, at least 3 nodes per axis.
    pub fn new(m: usize, dims: Vec<usize>, spacing: f64, origin: Vec<f64>) -> Result<Self> {
        let n = dims.len();
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidInput(format!(
                "patches support n = 2 or 3, got n = {n}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidInput("codimension must be ≥ 1".into()));
        }
        if let Some(d) = dims.iter().find(|d| **d < 3) {
            return Err(Error::InvalidInput(format!("axis with {d} < 3 nodes")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("spacing {spacing} must be > 0")));
        }
        if origin.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("origin in ℝ^{n}"),
                got: format!("ℝ^{}", origin.len()),
            });
        }
        ensure_finite(&origin, "origin")?;
        let count: usize = dims.iter().product();
        Ok(Self {
            n,
            m,
            dims,
            spacing,
            origin,
            values: vec![0.0; count * m],
        })
    }

    /// Patch with every node set to the model's value.
    pub fn sampled(
        model: &AnalyticModel,
        dims: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self::new(model.m(), dims, spacing, origin)?;
        if model.n() != p.n {
            return Err(Error::DimensionMismatch {
                expected: format!("model over ℝ^{}", p.n),
                got: format!("ℝ^{}", model.n()),
            });
        }
        p.fill_from(model, |_| true)?;
        Ok(p)
    }

    /// Boundary layer from the model, interior left at zero.
    pub fn with_boundary(
        model: &AnalyticModel,
        dims: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self::new(model.m(), dims, spacing, origin)?;
        p.fill_from(model, |b| b)?;
        Ok(p)
    }

    fn fill_from(&mut self, model: &AnalyticModel, select: impl Fn(bool) -> bool) -> Result<()> {
        for node in 0..self.node_count() {
            let idx = self.multi_index(node);
            if select(self.is_boundary(&idx)) {
                let x = self.coords(&idx);
                let v = model.jet(&x, Order::First)?.value;
                self.node_mut(node).copy_from_slice(v.as_slice());
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides (last axis fastest), in nodes.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.n];
        for k in (0..self.n - 1).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for k in (0..self.n).rev() {
            idx[k] = node % self.dims[k];
            node /= self.dims[k];
        }
        idx
    }

    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + i as f64 * self.spacing)
            .collect()
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.dims).any(|(&i, &d)| i == 0 || i + 1 == d)
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|node| self.is_boundary(&self.multi_index(node)))
            .collect()
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.m..(node + 1) * self.m]
    }

    /// Applies `f` to every node value; used for rigid motions and scalings
    /// of the data.
    pub fn map_values(&mut self, mut f: impl FnMut(&[f64]) -> Vec<f64>) {
        for node in 0..self.node_count() {
            let out = f(self.node(node));
            self.node_mut(node).copy_from_slice(&out);
        }
    }

    /// Writes the manifest and a sibling `.bin` data file.
    pub fn write_mgp1(&self, manifest: &Path) -> Result<()> {
        ensure_finite(&self.values, "patch values")?;
        let data_path = manifest.with_extension("bin");
        let data_name = data_path
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Format("manifest path has no file name".into()))?
            .to_string();
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&data_path, bytes)?;
        let man = Manifest {
            format: "MGP1".into(),
            n: self.n,
            m: self.m,
            dims: self.dims.clone(),
            spacing: self.spacing,
            origin: self.origin.clone(),
            data: data_name,
        };
        let text = serde_json::to_string_pretty(&man).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(manifest, text + "\n")?;
        Ok(())
    }

    pub fn read_mgp1(manifest: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest)?;
        let man: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if man.format != "MGP1" {
            return Err(Error::Format(format!("unknown format tag `{}`", man.format)));
        }
        if man.n != man.dims.len() {
            return Err(Error::Format(format!(
                "n = {} but {} axis sizes",
                man.n,
                man.dims.len()
            )));
        }
        let mut patch = Self::new(man.m, man.dims, man.spacing, man.origin)?;
        let data_path: PathBuf = manifest
            .parent()
            .map(|d| d.join(&man.data))
            .unwrap_or_else(|| PathBuf::from(&man.data));
        let bytes = fs::read(&data_path)?;
        if bytes.len() != patch.values.len() * 8 {
            return Err(Error::Format(format!(
                "data file has {} bytes, expected {}",
                bytes.len(),
                patch.values.len() * 8
            )));
        }
        for (dst, chunk) in patch.values.iter_mut().zip(bytes.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        ensure_finite(&patch.values, "patch values")?;
        Ok(patch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::model_slag_exp;

    #[test]
    fn indexing_is_row_major_last_axis_fastest() {
        let p = GraphPatch::new(1, vec![3, 4, 5], 0.1, vec![0.0; 3]).unwrap();
        assert_eq!(p.strides(), vec![20, 5, 1]);
        assert_eq!(p.linear_index(&[1, 2, 3]), 33);
        assert_eq!(p.multi_index(33), vec![1, 2, 3]);
        let mask = p.boundary_mask();
        assert_eq!(mask.iter().filter(|b| !**b).count(), 2 * 3);
    }

    #[test]
    fn invalid_patches_rejected() {
        assert!(GraphPatch::new(1, vec![3], 0.1, vec![0.0]).is_err());
        assert!(GraphPatch::new(1, vec![2, 3], 0.1, vec![0.0; 2]).is_err());
        assert!(GraphPatch::new(1, vec![3, 3], 0.0, vec![0.0; 2]).is_err());
        assert!(GraphPatch::new(0, vec![3, 3], 0.1, vec![0.0; 2]).is_err());
        assert!(GraphPatch::new(1, vec![3, 3], 0.1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn mgp1_layout_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = GraphPatch::new(2, vec![3, 3], 0.5, vec![-1.0, 2.0]).unwrap();
        for (k, v) in p.values_mut().iter_mut().enumerate() {
            *v = k as f64 + 0.25;
        }
        let man = dir.path().join("patch.json");
        p.write_mgp1(&man).unwrap();
        let raw = std::fs::read(dir.path().join("patch.bin")).unwrap();
        assert_eq!(raw.len(), 18 * 8);
        // node (0, 1), component 1 sits at float index (0·3 + 1)·2 + 1 = 3
        assert_eq!(f64::from_le_bytes(raw[24..32].try_into().unwrap()), 3.25);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&man).unwrap()).unwrap();
        assert_eq!(json["format"], "MGP1");
        assert_eq!(json["data"], "patch.bin");
        assert_eq!(GraphPatch::read_mgp1(&man).unwrap(), p);
    }

    #[test]
    fn mgp1_rejects_truncated_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = GraphPatch::sampled(&model_slag_exp(), vec![4, 4], 0.1, vec![0.0, 0.0]).unwrap();
        let man = dir.path().join("s.json");
        p.write_mgp1(&man).unwrap();
        std::fs::write(dir.path().join("s.bin"), [0u8; 10]).unwrap();
        assert!(matches!(GraphPatch::read_mgp1(&man), Err(Error::Format(_))));
    }
}
