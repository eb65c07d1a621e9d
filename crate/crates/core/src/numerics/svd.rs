//! Truncated singular value decomposition by one-sided (Hestenes) Jacobi.
//!
//! The Jacobi sweep orthogonalizes the columns of a working copy of the
//! input; the accumulated rotations form `V`, column norms are the singular
//! values and the normalized columns form `U`. It is slower than bidiagonal
//! methods but reaches full relative accuracy, which the exactness checks in
//! this crate rely on.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvdResult {
    /// M x r, orthonormal columns.
    pub u: Array2<f64>,
    /// r singular values, descending.
    pub s: Array1<f64>,
    /// N x r, orthonormal columns.
    pub v: Array2<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Number of singular values above `rel_tol * s[0]`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let top = self.s.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// `U diag(S) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let us = &self.u * &self.s.view().insert_axis(ndarray::Axis(0));
        us.dot(&self.v.t())
    }
}

pub fn truncated_svd(a: ArrayView2<f64>, r: usize) -> Result<SvdResult> {
    let (m, n) = a.dim();
    if r == 0 || r > m.min(n) {
        return Err(Error::param(
            "rank",
            format!("must satisfy 1 <= r <= min(M, N) = {}, got {r}", m.min(n)),
        ));
    }
    let full = if m >= n {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(a.t());
        SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    };
    let mut out = SvdResult {
        u: full.u.slice(ndarray::s![.., ..r]).to_owned(),
        s: full.s.slice(ndarray::s![..r]).to_owned(),
        v: full.v.slice(ndarray::s![.., ..r]).to_owned(),
    };
    fix_signs(&mut out);
    Ok(out)
}

/// Full thin SVD of an M x N matrix with M >= N; U is M x N, V is N x N.
fn jacobi_tall(a: ArrayView2<f64>) -> SvdResult {
    let (m, n) = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (cp, cq) = pair_mut(&mut cols, p, q);
                rotate(cp, cq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s);
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));

    let s_max = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let zero_tol = (m.max(n) as f64) * f64::EPSILON * s_max;

    let mut u = Array2::<f64>::zeros((m, n));
    let mut vv = Array2::<f64>::zeros((n, n));
    let mut s = Array1::<f64>::zeros(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        s[k] = sigma[j];
        for i in 0..n {
            vv[[i, k]] = v[j][i];
        }
        if sigma[j] > zero_tol && sigma[j] > 0.0 {
            for i in 0..m {
                u[[i, k]] = cols[j][i] / sigma[j];
            }
        } else {
            s[k] = if sigma[j] > zero_tol { sigma[j] } else { 0.0 };
            missing.push(k);
        }
    }
    complete_basis(&mut u, &missing);
    SvdResult { u, s, v: vv }
}

/// Fills the listed columns of `q` with unit vectors orthogonal to every
/// other column (Gram-Schmidt over the standard basis).
pub(crate) fn complete_basis(q: &mut Array2<f64>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let (m, ncols) = q.dim();
    let mut filled: Vec<usize> = (0..ncols).filter(|c| !missing.contains(c)).collect();
    let mut candidate = 0usize;
    for &k in missing {
        while candidate < m {
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &c in &filled {
                    let col = q.column(c);
                    let proj: f64 = col.iter().zip(&w).map(|(a, b)| a * b).sum();
                    for (wi, ci) in w.iter_mut().zip(col.iter()) {
                        *wi -= proj * ci;
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 0.5 {
                for (i, wi) in w.iter().enumerate() {
                    q[[i, k]] = wi / norm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

/// Makes the largest-magnitude entry of every V column positive.
fn fix_signs(svd: &mut SvdResult) {
    for k in 0..svd.s.len() {
        let col = svd.v.column(k);
        let mut best = 0usize;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            svd.v.column_mut(k).mapv_inplace(|x| -x);
            svd.u.column_mut(k).mapv_inplace(|x| -x);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn rotate(p: &mut [f64], q: &mut [f64], c: f64, s: f64) {
    for (x, y) in p.iter_mut().zip(q.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}
