//! Feature maps over patches, empirical averages, subsampling and the
//! covariance-decay table.

mod experiment;
mod recovery;

pub use experiment::*;
pub use recovery::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mra::{add_power_into, check_order, MomentTensor};
use crate::mtd_sim::{Dim, Latent, PatchSet};
use crate::stats;

/// `F: R^d -> R^k` applied patchwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureMap {
    Identity,
    Moment { order: usize },
}

impl FeatureMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureMap::Identity => Ok(()),
            FeatureMap::Moment { order } => check_order(*order),
        }
    }

    /// Tensor order of the feature; the identity is order 1.
    pub fn order(&self) -> usize {
        match self {
            FeatureMap::Identity => 1,
            FeatureMap::Moment { order } => *order,
        }
    }

    pub fn output_dim(&self, patch_dim: usize) -> usize {
        patch_dim.pow(self.order() as u32)
    }

    pub fn apply(&self, patch: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim(patch.len())];
        add_power_into(&mut out, self.order(), patch, 1.0);
        out
    }
}

/// `(1/N) sum_k Z_k^{(x) n}`, accumulated in patch order.
pub fn empirical_moment(patches: &PatchSet, n: usize) -> Result<MomentTensor> {
    check_order(n)?;
    if patches.count() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut t = MomentTensor::zeros(n, patches.patch_len())?;
    for p in patches.patches() {
        t.add_power(p, 1.0);
    }
    t.scale(1.0 / patches.count() as f64);
    Ok(t)
}

/// Empirical moment with per-entry standard errors from batch means.
/// `batch = 1` gives the i.i.d. standard error.
pub fn empirical_moment_with_se(
    patches: &PatchSet,
    n: usize,
    batch: usize,
) -> Result<(MomentTensor, Vec<f64>)> {
    check_order(n)?;
    let count = patches.count();
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    let batch = batch.max(1);
    let n_batches = count / batch;
    if n_batches < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{count} patches do not fill two batches of {batch}"
        )));
    }
    let size = patches.patch_len().pow(n as u32);
    let mut batch_means = vec![vec![0.0; size]; n_batches];
    for (b, means) in batch_means.iter_mut().enumerate() {
        for k in b * batch..(b + 1) * batch {
            add_power_into(means, n, patches.patch(k), 1.0);
        }
        means.iter_mut().for_each(|v| *v /= batch as f64);
    }
    let mut mean = MomentTensor::zeros(n, patches.patch_len())?;
    let mut se = vec![0.0; size];
    let mut column = vec![0.0; n_batches];
    for (e, slot) in se.iter_mut().enumerate() {
        for (c, bm) in column.iter_mut().zip(&batch_means) {
            *c = bm[e];
        }
        mean.entries[e] = stats::mean(&column);
        *slot = (stats::variance(&column) / n_batches as f64).sqrt();
    }
    Ok((mean, se))
}

/// Keeps patches `m-1, 2m-1, ...` (0-based); in 2D the coarse grid
/// `(k1 m - 1, k2 m - 1)`.
pub fn subsample(patches: &PatchSet, m: usize) -> Result<PatchSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("subsampling step must be >= 1".into()));
    }
    let kept = patches.grid / m;
    if kept == 0 {
        return Err(Error::SubsampleEmpty {
            count: patches.grid,
            m,
        });
    }
    let indices: Vec<usize> = match patches.dim {
        Dim::One => (1..=kept).map(|k| k * m - 1).collect(),
        Dim::Two => {
            let g = patches.grid;
            (1..=kept)
                .flat_map(|a| (1..=kept).map(move |b| (a * m - 1) * g + (b * m - 1)))
                .collect()
        }
    };
    let mut data = Vec::with_capacity(indices.len() * patches.patch_len());
    for &i in &indices {
        data.extend_from_slice(patches.patch(i));
    }
    let latent = patches.latent.as_ref().map(|lat| match lat {
        Latent::OneD(v) => Latent::OneD(indices.iter().map(|&i| v[i]).collect()),
        Latent::TwoD(v) => Latent::TwoD(indices.iter().map(|&i| v[i]).collect()),
    });
    PatchSet::new(patches.dim, patches.l, kept, data, latent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub lag: usize,
    /// Frobenius norm of the empirical cross-covariance.
    pub norm: f64,
    /// Root-sum-square of the per-entry standard errors: the scale of the
    /// norm when the true covariance is zero.
    pub std_error: f64,
    pub pairs: usize,
}

/// `|| Cov(F(Z_k), F(Z_{k+d})) ||` per lag. 2D patch sets use horizontal lags
/// within each grid row.
pub fn covariance_decay(
    patches: &PatchSet,
    feature: FeatureMap,
    lags: &[usize],
) -> Result<Vec<CovarianceRow>> {
    feature.validate()?;
    let features: Vec<Vec<f64>> = patches.patches().map(|p| feature.apply(p)).collect();
    let dim = feature.output_dim(patches.patch_len());
    let mut mu = vec![0.0; dim];
    for f in &features {
        for (m, v) in mu.iter_mut().zip(f) {
            *m += v;
        }
    }
    let count = features.len().max(1) as f64;
    mu.iter_mut().for_each(|m| *m /= count);
    let centered: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().zip(&mu).map(|(a, b)| a - b).collect())
        .collect();

    let pair_index = |d: usize| -> Vec<(usize, usize)> {
        match patches.dim {
            Dim::One => (0..patches.grid.saturating_sub(d)).map(|k| (k, k + d)).collect(),
            Dim::Two => {
                let g = patches.grid;
                (0..g)
                    .flat_map(|r| (0..g.saturating_sub(d)).map(move |c| (r * g + c, r * g + c + d)))
                    .collect()
            }
        }
    };

    lags.iter()
        .map(|&d| {
            let pairs = pair_index(d);
            if pairs.len() < 2 {
                return Err(Error::InsufficientSamples(format!(
                    "lag {d} leaves {} pairs",
                    pairs.len()
                )));
            }
            let n = pairs.len() as f64;
            let mut norm2 = 0.0;
            let mut se2 = 0.0;
            let mut products = vec![0.0; pairs.len()];
            for i in 0..dim {
                for j in 0..dim {
                    for (p, &(a, b)) in products.iter_mut().zip(&pairs) {
                        *p = centered[a][i] * centered[b][j];
                    }
                    let c = stats::mean(&products);
                    norm2 += c * c;
                    se2 += stats::variance(&products) / n;
                }
            }
            Ok(CovarianceRow {
                lag: d,
                norm: norm2.sqrt(),
                std_error: se2.sqrt(),
                pairs: pairs.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_1d(l: usize, data: Vec<f64>) -> PatchSet {
        let m = data.len() / l;
        PatchSet::new(Dim::One, l, m, data, None).unwrap()
    }

    #[test]
    fn single_patch_moment_is_its_power() {
        let p = set_1d(2, vec![1.5, -2.0]);
        let m3 = empirical_moment(&p, 3).unwrap();
        assert_eq!(m3, MomentTensor::power(&[1.5, -2.0], 3).unwrap());
        let z = set_1d(2, vec![0.0; 8]);
        assert_eq!(empirical_moment(&z, 2).unwrap().norm(), 0.0);
        assert_eq!(empirical_moment(&z, 0), Err(Error::UnsupportedOrder(0)));
        let empty = set_1d(2, vec![]);
        assert_eq!(empirical_moment(&empty, 1), Err(Error::EmptyInput));
    }

    #[test]
    fn subsample_index_arithmetic() {
        let data: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let p = set_1d(1, data);
        assert_eq!(subsample(&p, 1).unwrap(), p);
        let s = subsample(&p, 3).unwrap();
        assert_eq!(s.data(), &[2.0, 5.0, 8.0]); // positions 3, 6, 9 counted from 1
        assert_eq!(subsample(&p, 11), Err(Error::SubsampleEmpty { count: 10, m: 11 }));

        let g = 9;
        let data: Vec<f64> = (0..g * g).map(|i| i as f64).collect();
        let p2 = PatchSet::new(Dim::Two, 1, g, data, None).unwrap();
        let s2 = subsample(&p2, 3).unwrap();
        assert_eq!(s2.count(), 9);
        assert_eq!(s2.patch(0), &[(2 * g + 2) as f64]);
        assert_eq!(s2.patch(8), &[(8 * g + 8) as f64]);
    }

    #[test]
    fn lag_zero_is_feature_variance() {
        let data = vec![1.0, 3.0, 2.0, 6.0, 4.0];
        let p = set_1d(1, data.clone());
        let rows = covariance_decay(&p, FeatureMap::Identity, &[0]).unwrap();
        let m = stats::mean(&data);
        let pop_var = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / data.len() as f64;
        assert!((rows[0].norm - pop_var).abs() < 1e-12);
        assert!(covariance_decay(&p, FeatureMap::Identity, &[4]).is_err());
    }

    #[test]
    fn feature_json_shape() {
        let f: FeatureMap = serde_json::from_str(r#"{"kind":"moment","order":2}"#).unwrap();
        assert_eq!(f, FeatureMap::Moment { order: 2 });
        assert_eq!(f.output_dim(3), 9);
        let id: FeatureMap = serde_json::from_str(r#"{"kind":"identity"}"#).unwrap();
        assert_eq!(id.apply(&[1.0, 2.0]), vec![1.0, 2.0]);
    }
}
