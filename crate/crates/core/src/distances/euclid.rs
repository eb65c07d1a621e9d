//! Point-set Euclidean distances and cosine distance.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::numerics::kmeans;

pub(crate) fn check_dims(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    Ok(())
}

fn euclid(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Mean Euclidean distance over all cross pairs (row sums first, then the
/// row totals, so the reduction order is fixed).
pub(crate) fn mean_cross_distance(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let total: f64 = a
        .rows()
        .into_iter()
        .map(|x| b.rows().into_iter().map(|y| euclid(x, y)).sum::<f64>())
        .sum();
    total / (a.nrows() * b.nrows()) as f64
}

pub fn d_pairwise_euclidean(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    Ok(mean_cross_distance(a, b))
}

pub fn d_centroid_euclidean(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let (ma, mb) = (means(a), means(b));
    Ok(euclid(ma.view(), mb.view()))
}

pub(crate) fn means(a: ArrayView2<f64>) -> Array1<f64> {
    a.mean_axis(Axis(0)).expect("non-empty")
}

/// Mean distance between the k-means centroids of `a` and those of `b`.
pub fn d_clustered_euclidean(a: ArrayView2<f64>, b: ArrayView2<f64>, k: usize, seed: u64) -> Result<f64> {
    check_dims(a, b)?;
    let limit = a.nrows().min(b.nrows());
    if k == 0 || k > limit {
        return Err(Error::param(
            "k",
            format!("need 1 <= k <= min(M1, M2) = {limit}, got {k}"),
        ));
    }
    let ca = kmeans(a, k, seed)?.centroids;
    let cb = kmeans(b, k, seed)?.centroids;
    Ok(mean_cross_distance(ca.view(), cb.view()))
}

/// Mean cosine distance `1 - cos(x, y)` over cross pairs.
pub fn d_cosine(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let unit = |m: ArrayView2<f64>, which: &str| -> Result<ndarray::Array2<f64>> {
        let mut out = m.to_owned();
        for (row, mut r) in out.rows_mut().into_iter().enumerate() {
            let norm = r.dot(&r).sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNormRow {
                    dataset: which.to_string(),
                    row,
                });
            }
            r.mapv_inplace(|v| v / norm);
        }
        Ok(out)
    };
    let (ua, ub) = (unit(a, "A")?, unit(b, "B")?);
    let total: f64 = ua
        .rows()
        .into_iter()
        .map(|x| {
            ub.rows()
                .into_iter()
                .map(|y| (1.0 - x.dot(&y)).clamp(0.0, 2.0))
                .sum::<f64>()
        })
        .sum();
    Ok(total / (a.nrows() * b.nrows()) as f64)
}
