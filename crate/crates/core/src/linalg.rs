//! Small dense helpers and a banded LU used by the grid solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Full singular value decomposition `J = U Σ Vᵀ` with square orthogonal
/// factors: `u` is m×m, `v` is n×n and `values` has length n, sorted
/// descending and zero-padded past `min(m, n)`.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub values: Vec<f64>,
}

pub fn full_svd(j: &DMatrix<f64>) -> FullSvd {
    let (m, n) = j.shape();
    let k = m.min(n);
    let (w, v_acc) = hestenes(j);
    let norms: Vec<f64> = (0..n).map(|c| w.column(c).norm()).collect();

    // stable descending order; ties keep column order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let top = norms[order[0]];
    let mut u_cols = Vec::with_capacity(m);
    let mut v_cols = Vec::with_capacity(n);
    let mut values = vec![0.0; n];
    for (slot, &idx) in order.iter().enumerate() {
        v_cols.push(v_acc.column(idx).into_owned());
        if slot < k {
            values[slot] = norms[idx];
            if norms[idx] > top * 1e-13 {
                u_cols.push(w.column(idx) / norms[idx]);
            }
        }
    }
    complete_basis(&mut u_cols, m);
    FullSvd {
        u: DMatrix::from_columns(&u_cols),
        v: DMatrix::from_columns(&v_cols),
        values,
    }
}

/// One-sided Jacobi: rotates column pairs of `J V` until they are mutually
/// orthogonal. Returns `(J V, V)`. Accurate for clustered singular values,
/// where the library SVD with vectors was observed to lose digits.
fn hestenes(j: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = j.ncols();
    let mut w = j.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let (a, b) = (mat[(r, p)], mat[(r, q)]);
                        mat[(r, p)] = c * a - s * b;
                        mat[(r, q)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Extends an orthonormal family to an orthonormal basis of ℝ^dim by
/// greedy Gram–Schmidt over the standard basis.
pub fn complete_basis(cols: &mut Vec<DVector<f64>>, dim: usize) {
    while cols.len() < dim {
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = -1.0;
        for e in 0..dim {
            let mut w = DVector::zeros(dim);
            w[e] = 1.0;
            for _ in 0..2 {
                for c in cols.iter() {
                    let p = c.dot(&w);
                    w.axpy(-p, c, 1.0);
                }
            }
            let nrm = w.norm();
            if nrm > best_norm + 1e-12 {
                best_norm = nrm;
                best = Some(w);
            }
        }
        let w = best.expect("dim > 0");
        cols.push(w / best_norm);
    }
}

/// Orthonormalizes the columns of `a` (ambient × k) with modified
/// Gram–Schmidt, keeping the orientation of the spanned k-vector: the
/// implied triangular factor has a positive diagonal.
pub fn orthonormalize(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut q = a.clone();
    for i in 0..q.ncols() {
        for _ in 0..2 {
            for j in 0..i {
                let p = q.column(j).dot(&q.column(i));
                let cj = q.column(j).into_owned();
                q.column_mut(i).axpy(-p, &cj, 1.0);
            }
        }
        let nrm = q.column(i).norm();
        if !(nrm > 1e-14) {
            return Err(Error::InvalidInput(format!(
                "column {i} is linearly dependent on the previous ones"
            )));
        }
        q.column_mut(i).unscale_mut(nrm);
    }
    Ok(q)
}

/// Banded matrix with partial-pivoting LU, stored row-wise with room for
/// pivot fill-in (`2·lower + upper + 1` slots per row).
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.lower + self.upper);
        row * self.width + col + self.lower - row
    }

    /// Adds `value` at (row, col); the entry must lie inside the declared band.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper,
            "entry ({row}, {col}) outside band"
        );
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.lower < row || col > row + self.lower + self.upper {
            return 0.0;
        }
        self.data[self.slot(row, col)]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.lower);
                let hi = (r + self.upper).min(self.n - 1);
                (lo..=hi).map(|c| self.get(r, c) * x[c]).sum()
            })
            .collect()
    }

    /// Factorizes in place and solves `A x = b`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let kl = self.lower;
        let span = kl + self.upper;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last {
                let a = self.data[self.slot(r, k)].abs();
                if a > best {
                    best = a;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let cmax = (k + span).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (sa, sb) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(sa, sb);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last {
                let srk = self.slot(r, k);
                let f = self.data[srk] / pivot;
                self.data[srk] = f;
                if f == 0.0 {
                    continue;
                }
                let base_k = k * self.width + kl - k;
                let base_r = r * self.width + kl - r;
                for c in k + 1..=cmax {
                    self.data[base_r + c] -= f * self.data[base_k + c];
                }
            }
        }

        let mut x = b.to_vec();
        for k in 0..n {
            if piv[k] != k {
                x.swap(k, piv[k]);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    x[r] -= self.data[self.slot(r, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + span).min(n - 1);
            let mut acc = x[k];
            for c in k + 1..=cmax {
                acc -= self.data[self.slot(k, c)] * x[c];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}
