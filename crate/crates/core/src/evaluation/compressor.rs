//! Rank-`latent_dim` linear autoencoder and NMSE.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::numerics::truncated_svd;

pub const NMSE_FLOOR_DB: f64 = -300.0;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressorModel {
    pub mean: Array1<f64>,
    /// N x latent_dim, orthonormal columns.
    pub basis: Array2<f64>,
    pub latent_dim: usize,
    pub trained_on: String,
    /// Numerical rank of the centred training data when below `latent_dim`.
    pub rank_deficient: Option<usize>,
}

impl CompressorModel {
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok((&x - &self.mean).dot(&self.basis))
    }

    pub fn decode(&self, z: ArrayView2<f64>) -> Array2<f64> {
        z.dot(&self.basis.t()) + &self.mean
    }

    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.decode(self.encode(x)?.view()))
    }
}

pub fn fit_compressor(train: &Dataset, latent_dim: usize) -> Result<CompressorModel> {
    fit_compressor_points(train.view(), latent_dim, &train.name)
}

pub(crate) fn fit_compressor_points(x: ArrayView2<f64>, latent_dim: usize, name: &str) -> Result<CompressorModel> {
    let (m, n) = x.dim();
    if latent_dim == 0 || latent_dim > n {
        return Err(Error::param("latent_dim", format!("need 1 <= latent_dim <= N = {n}, got {latent_dim}")));
    }
    if m <= latent_dim {
        return Err(Error::param(
            "latent_dim",
            format!("training split of `{name}` has {m} rows; need more than latent_dim = {latent_dim}"),
        ));
    }
    let mean = x.mean_axis(Axis(0)).ok_or(Error::EmptyDataset)?;
    let centred = &x - &mean;
    let svd = truncated_svd(centred.view(), latent_dim)?;
    let rank = svd.numerical_rank(RANK_TOL);
    Ok(CompressorModel {
        mean,
        basis: svd.v,
        latent_dim,
        trained_on: name.to_string(),
        rank_deficient: (rank < latent_dim).then_some(rank),
    })
}

/// `10 log10(||H - H_hat||_F^2 / ||H||_F^2)` over the whole batch, floored
/// at -300 dB.
pub fn nmse_db(h: ArrayView2<f64>, h_hat: ArrayView2<f64>) -> Result<f64> {
    if h.dim() != h_hat.dim() {
        return Err(Error::param(
            "h_hat",
            format!("shape {:?} does not match reference {:?}", h_hat.dim(), h.dim()),
        ));
    }
    let power: f64 = h.iter().map(|v| v * v).sum();
    if power == 0.0 {
        return Err(Error::param("h", "reference batch has zero norm"));
    }
    let err: f64 = h.iter().zip(h_hat.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((10.0 * (err / power).log10()).max(NMSE_FLOOR_DB))
}
