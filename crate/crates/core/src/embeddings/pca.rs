use ndarray::{Array1, Axis};

use super::{restore_order, Corpus, EmbeddingKind, EmbeddingModel, PcaBasis};
use crate::error::{Error, Result};
use crate::numerics::truncated_svd;

/// Mean-centred projection onto the top `out_dim` right singular vectors.
pub fn fit_pca(corpus: &Corpus, out_dim: usize) -> Result<EmbeddingModel> {
    let (m, n) = corpus.points.dim();
    if out_dim == 0 || out_dim > n {
        return Err(Error::param("out_dim", format!("need 1 <= out_dim <= N = {n}, got {out_dim}")));
    }
    let order = corpus.canonical_order();
    let canon = corpus.points.select(Axis(0), &order);
    let mean = canon.mean_axis(Axis(0)).ok_or(Error::EmptyDataset)?;
    let centred = &canon - &mean;
    let total_variance = centred.iter().map(|x| x * x).sum::<f64>() / m as f64;

    let (basis, explained) = if out_dim <= m {
        let svd = truncated_svd(centred.view(), out_dim)?;
        let ev = svd.s.mapv(|s| s * s / m as f64);
        (svd.v, ev)
    } else {
        // fewer rows than requested components: complete the basis
        let svd = truncated_svd(centred.view(), m)?;
        let mut v = ndarray::Array2::<f64>::zeros((n, out_dim));
        v.slice_mut(ndarray::s![.., ..m]).assign(&svd.v);
        crate::numerics::svd::complete_basis(&mut v, &(m..out_dim).collect::<Vec<_>>());
        let mut ev = Array1::zeros(out_dim);
        ev.slice_mut(ndarray::s![..m]).assign(&svd.s.mapv(|s| s * s / m as f64));
        (v, ev)
    };

    let pca = PcaBasis {
        mean,
        basis,
        explained_variance: explained,
        total_variance,
    };
    let coords = restore_order(&pca.transform(canon.view())?, &order);
    Ok(EmbeddingModel {
        kind: EmbeddingKind::Pca,
        coords,
        ranges: corpus.ranges.clone(),
        pca: Some(pca),
        umap: None,
        kl_trace: Vec::new(),
    })
}
