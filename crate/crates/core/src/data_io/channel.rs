//! Subcarrier-to-delay-domain conversion for complex channel matrices.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ChannelTensor, Dataset};
use crate::error::{Error, Result};

/// Delay-domain taps of every antenna row: `X[t] = sum_k H[k] exp(-2 pi i k t / N_sub)`
/// (unnormalized forward DFT), keeping the first `n_taps` taps.
///
/// Output rows have length `n_antennas * n_taps * 2`, antenna-major, taps
/// next, then interleaved `(re, im)`.
pub fn channel_to_features(
    channels: &ChannelTensor,
    n_taps: usize,
    name: &str,
    source: &str,
) -> Result<Dataset> {
    let n_sub = channels.n_subcarriers();
    let n_bs = channels.n_antennas();
    if n_taps == 0 || n_taps > n_sub {
        return Err(Error::param(
            "n_taps",
            format!("need 1 <= n_taps <= n_subcarriers = {n_sub}, got {n_taps}"),
        ));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_sub);
    let width = n_bs * n_taps * 2;
    let mut out = Array2::<f64>::zeros((channels.n_samples(), width));
    let mut buf = vec![Complex64::new(0.0, 0.0); n_sub];
    for m in 0..channels.n_samples() {
        let row = channels.sample_row(m);
        for a in 0..n_bs {
            for (b, x) in buf.iter_mut().zip(row.slice(ndarray::s![a * n_sub..(a + 1) * n_sub])) {
                *b = *x;
            }
            fft.process(&mut buf);
            for (t, x) in buf.iter().take(n_taps).enumerate() {
                let base = (a * n_taps + t) * 2;
                out[[m, base]] = x.re;
                out[[m, base + 1]] = x.im;
            }
        }
    }
    let mut ds = Dataset::new(name, out, source)?;
    ds.preprocessing.push(format!("delay-taps(n_taps={n_taps}, n_antennas={n_bs})"));
    Ok(ds)
}
