use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named collection of M feature rows in R^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub points: Array2<f64>,
    /// File path or generator description.
    pub source: String,
    /// Transforms applied since load, oldest first.
    pub preprocessing: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, rejecting empty matrices and non-finite entries.
    pub fn new(name: impl Into<String>, points: Array2<f64>, source: impl Into<String>) -> Result<Self> {
        check_points(points.view())?;
        Ok(Self {
            name: name.into(),
            points,
            source: source.into(),
            preprocessing: Vec::new(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub(crate) fn derived(&self, points: Array2<f64>, step: String) -> Self {
        let mut preprocessing = self.preprocessing.clone();
        preprocessing.push(step);
        Self {
            name: self.name.clone(),
            points,
            source: self.source.clone(),
            preprocessing,
        }
    }
}

pub(crate) fn check_points(points: ArrayView2<f64>) -> Result<()> {
    if points.nrows() == 0 || points.ncols() == 0 {
        return Err(Error::EmptyDataset);
    }
    for ((row, col), v) in points.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Checks that every dataset shares the first one's feature dimension.
pub fn check_same_dim(datasets: &[Dataset]) -> Result<usize> {
    let first = datasets.first().ok_or(Error::EmptyDataset)?;
    let n = first.dim();
    for ds in datasets {
        if ds.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: ds.dim(),
            });
        }
    }
    Ok(n)
}

/// M complex channel matrices of shape `n_antennas x n_subcarriers`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    n_antennas: usize,
    n_subcarriers: usize,
    /// M x (n_antennas * n_subcarriers), antenna-major.
    data: Array2<Complex64>,
}

impl ChannelTensor {
    pub fn new(data: Array2<Complex64>, n_antennas: usize, n_subcarriers: usize) -> Result<Self> {
        if n_antennas == 0 || n_subcarriers == 0 {
            return Err(Error::param("shape", "antennas and subcarriers must be >= 1"));
        }
        if data.ncols() != n_antennas * n_subcarriers {
            return Err(Error::DimensionMismatch {
                expected: n_antennas * n_subcarriers,
                got: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            n_antennas,
            n_subcarriers,
            data,
        })
    }

    /// Reinterprets a dataset whose rows hold interleaved `(re, im)` pairs.
    pub fn from_interleaved(ds: &Dataset, n_antennas: usize) -> Result<Self> {
        let n = ds.dim();
        if n % 2 != 0 {
            return Err(Error::Format {
                format: "complex",
                msg: format!("interleaved row length {n} is odd"),
            });
        }
        let n_complex = n / 2;
        if n_antennas == 0 || n_complex % n_antennas != 0 {
            return Err(Error::param(
                "n_antennas",
                format!("{n_complex} complex entries per row not divisible by {n_antennas}"),
            ));
        }
        let data = Array2::from_shape_fn((ds.n_points(), n_complex), |(i, c)| {
            Complex64::new(ds.points[[i, 2 * c]], ds.points[[i, 2 * c + 1]])
        });
        Self::new(data, n_antennas, n_complex / n_antennas)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    /// Gain of sample `m`, antenna `a`, subcarrier `k`.
    pub fn get(&self, m: usize, a: usize, k: usize) -> Complex64 {
        self.data[[m, a * self.n_subcarriers + k]]
    }

    pub fn sample_row(&self, m: usize) -> ndarray::ArrayView1<'_, Complex64> {
        self.data.row(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_finite_with_position() {
        let err = Dataset::new("x", array![[1.0, 2.0], [f64::NAN, 0.0]], "t").unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn rejects_empty() {
        let err = Dataset::new("x", Array2::zeros((0, 3)), "t").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn interleaved_round_trip() {
        let ds = Dataset::new("c", array![[1.0, 2.0, 3.0, 4.0]], "t").unwrap();
        let ch = ChannelTensor::from_interleaved(&ds, 1).unwrap();
        assert_eq!(ch.get(0, 0, 1), Complex64::new(3.0, 4.0));
        assert_eq!(ch.n_subcarriers(), 2);
    }
}
