//! Principal-angle distances between the dominant subspaces of two datasets.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::euclid::check_dims;
use crate::error::{Error, Result};
use crate::numerics::truncated_svd;

/// Relative singular-value threshold for the numerical rank check.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceKind {
    Grassmann,
    Chordal,
    Asimov,
}

pub fn default_rank(n: usize) -> usize {
    16.min(n)
}

/// Top-`r` right singular vectors of the mean-centred data (N x r).
pub fn subspace_basis(a: ArrayView2<f64>, r: usize) -> Result<Array2<f64>> {
    let (m, n) = a.dim();
    if r == 0 || r > n || r + 1 > m {
        return Err(Error::param(
            "rank",
            format!("need 1 <= r <= min(M - 1, N) = {}, got {r}", (m.saturating_sub(1)).min(n)),
        ));
    }
    let mean = a.mean_axis(Axis(0)).ok_or(Error::EmptyDataset)?;
    let centred = &a - &mean;
    let svd = truncated_svd(centred.view(), r)?;
    let available = svd.numerical_rank(RANK_TOL);
    if available < r {
        return Err(Error::RankDeficient {
            requested: r,
            available,
        });
    }
    Ok(svd.v)
}

/// Principal angles (ascending) between the column spans of orthonormal
/// `ua` and `ub`. Small angles come from the sines (singular values of the
/// component of `ub` orthogonal to `ua`), large ones from the cosines.
pub fn principal_angles(ua: &Array2<f64>, ub: &Array2<f64>) -> Result<Array1<f64>> {
    let r = ua.ncols().min(ub.ncols());
    let cos = truncated_svd(ua.t().dot(ub).view(), r)?.s;
    let resid = ub - &ua.dot(&ua.t().dot(ub));
    let mut sin = truncated_svd(resid.view(), r.min(resid.nrows()))?.s.to_vec();
    sin.sort_by(f64::total_cmp);
    Ok(Array1::from_shape_fn(r, |i| {
        let c = cos[i].clamp(0.0, 1.0);
        if c * c >= 0.5 {
            sin[i].clamp(0.0, 1.0).asin()
        } else {
            c.acos()
        }
    }))
}

pub fn subspace_distance(theta: &Array1<f64>, kind: SubspaceKind) -> f64 {
    match kind {
        SubspaceKind::Grassmann => theta.dot(theta).sqrt(),
        SubspaceKind::Chordal => theta.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt(),
        SubspaceKind::Asimov => theta.iter().copied().fold(0.0, f64::max),
    }
}

pub fn d_subspace(a: ArrayView2<f64>, b: ArrayView2<f64>, kind: SubspaceKind, r: usize) -> Result<f64> {
    check_dims(a, b)?;
    let ua = subspace_basis(a, r)?;
    let ub = subspace_basis(b, r)?;
    Ok(subspace_distance(&principal_angles(&ua, &ub)?, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn orthogonal_lines() {
        let a = array![[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        let b = array![[0.0, -1.0], [0.0, 0.0], [0.0, 1.0]];
        let g = d_subspace(a.view(), b.view(), SubspaceKind::Grassmann, 1).unwrap();
        let c = d_subspace(a.view(), b.view(), SubspaceKind::Chordal, 1).unwrap();
        let s = d_subspace(a.view(), b.view(), SubspaceKind::Asimov, 1).unwrap();
        assert!((g - FRAC_PI_2).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-12);
        assert!((s - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn identical_is_zero() {
        let a = Array2::from_shape_fn((20, 5), |(i, j)| ((i * 13 + j * 7) % 17) as f64 + (i * j) as f64 * 0.1);
        for kind in [SubspaceKind::Grassmann, SubspaceKind::Chordal, SubspaceKind::Asimov] {
            assert!(d_subspace(a.view(), a.view(), kind, 3).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rank_checks() {
        let line = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(
            subspace_basis(line.view(), 2),
            Err(Error::RankDeficient { requested: 2, available: 1 })
        ));
        assert!(subspace_basis(line.view(), 3).is_err());
    }
}
