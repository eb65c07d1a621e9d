//! Correlation, shared-edge histograms and empirical quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HIST_SMOOTHING: f64 = 1e-10;
pub const DEFAULT_BINS: usize = 64;

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 pairs, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one of the inputs is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Average ranks (ties share the mean rank), 1-based.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramPair {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Normalized counts over shared edges spanning `[min(x u y), max(x u y)]`,
/// without smoothing. A degenerate range yields the single-bin `(1)`, `(1)`.
pub fn histogram_pair_raw(x: &[f64], y: &[f64], bins: usize) -> Result<HistogramPair> {
    if bins < 2 {
        return Err(Error::param("bins", format!("need bins >= 2, got {bins}")));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (lo, hi) = x
        .iter()
        .chain(y)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Ok(HistogramPair {
            p: vec![1.0],
            q: vec![1.0],
        });
    }
    let width = hi - lo;
    let fill = |s: &[f64]| {
        let mut c = vec![0.0; bins];
        for &v in s {
            let b = (((v - lo) / width) * bins as f64).floor() as usize;
            c[b.min(bins - 1)] += 1.0;
        }
        let n = s.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    };
    Ok(HistogramPair {
        p: fill(x),
        q: fill(y),
    })
}

/// Shared-edge histograms with additive smoothing `HIST_SMOOTHING`, renormalized.
pub fn histogram_pair(x: &[f64], y: &[f64], bins: usize) -> Result<HistogramPair> {
    let raw = histogram_pair_raw(x, y, bins)?;
    let smooth = |v: Vec<f64>| {
        let z = 1.0 + HIST_SMOOTHING * v.len() as f64;
        v.into_iter().map(|p| (p + HIST_SMOOTHING) / z).collect()
    };
    Ok(HistogramPair {
        p: smooth(raw.p),
        q: smooth(raw.q),
    })
}

/// Left-continuous empirical quantile function.
#[derive(Debug, Clone)]
pub struct EmpiricalQuantile {
    sorted: Vec<f64>,
}

impl EmpiricalQuantile {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn from_sorted(sorted: Vec<f64>) -> Result<Self> {
        if sorted.is_empty() {
            return Err(Error::EmptyDataset);
        }
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Smallest sample `x` with `ECDF(x) >= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.sorted.len();
        if t <= 0.0 {
            return self.sorted[0];
        }
        let k = (t * n as f64 - 1e-12).ceil().max(1.0) as usize;
        self.sorted[k.min(n) - 1]
    }

    /// Fraction of samples `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}
