//! MRA forward model: cyclic shifts of the padded signal, the block
//! projections back to patch size, i.i.d. sampling from a group law, and
//! population moments with Gaussian noise corrections.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardcore2d::EmpiricalGroupDistribution2D;
use crate::markov1d::GroupDistribution1D;
use crate::mtd_sim::{Dim, Latent, PatchSet};
use crate::types::{
    GroupElement1D, GroupElement2D, NoiseSpec, PaddedSignal1D, PaddedSignal2D, Shift2, Signal1D,
    Signal2D,
};

pub const MAX_ORDER: usize = 3;

/// `out[xi] = x[(xi - shift) mod 2L]`.
pub fn act_1d(shift: usize, x: &PaddedSignal1D) -> Vec<f64> {
    let v = x.values();
    let n = v.len();
    let s = shift % n;
    (0..n).map(|i| v[(i + n - s) % n]).collect()
}

/// Second half of `a` plus first half of `b`.
pub fn project_1d(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.len() % 2 != 0 {
        return Err(Error::Shape(format!(
            "projection needs two vectors of equal even length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let l = a.len() / 2;
    Ok(a[l..].iter().zip(&b[..l]).map(|(x, y)| x + y).collect())
}

/// Noiseless patch `P(g . [X~, X~])`.
pub fn clean_patch_1d(g: GroupElement1D, x: &Signal1D) -> Vec<f64> {
    let padded = x.padded();
    // halves have equal length by construction
    project_1d(&act_1d(g.g1, &padded), &act_1d(g.g2, &padded)).expect("padded halves")
}

pub fn forward_1d<R: Rng + ?Sized>(
    g: GroupElement1D,
    x: &Signal1D,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !g.in_range(x.len()) {
        return Err(Error::InvalidParameter(format!(
            "group element {g:?} outside range for L = {}",
            x.len()
        )));
    }
    let mut patch = clean_patch_1d(g, x);
    add_noise(&mut patch, noise, rng);
    Ok(patch)
}

/// Double cyclic shift of a `2L x 2L` row-major image.
pub fn act_2d(shift: Shift2, x: &PaddedSignal2D) -> Vec<f64> {
    let n = 2 * x.signal_side();
    let v = x.values();
    let (a, b) = (shift.row % n, shift.col % n);
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        let src = (r + n - a) % n;
        for c in 0..n {
            out[r * n + c] = v[src * n + (c + n - b) % n];
        }
    }
    out
}

/// Top-left of the first image, top-right of the second, bottom-left of the
/// third, bottom-right of the fourth, summed in that order.
pub fn project_2d(blocks: [&[f64]; 4], l: usize) -> Result<Vec<f64>> {
    let n = 2 * l;
    if l == 0 || blocks.iter().any(|b| b.len() != n * n) {
        return Err(Error::Shape(format!(
            "projection needs four {n}x{n} images"
        )));
    }
    let corners = [(0, 0), (0, l), (l, 0), (l, l)];
    let mut out = vec![0.0; l * l];
    for (img, (r0, c0)) in blocks.iter().zip(corners) {
        for r in 0..l {
            for c in 0..l {
                out[r * l + c] += img[(r0 + r) * n + c0 + c];
            }
        }
    }
    Ok(out)
}

pub fn clean_patch_2d(g: &GroupElement2D, x: &Signal2D) -> Vec<f64> {
    let padded = x.padded();
    let imgs: Vec<Vec<f64>> = g.parts.iter().map(|&s| act_2d(s, &padded)).collect();
    project_2d([&imgs[0], &imgs[1], &imgs[2], &imgs[3]], x.side()).expect("padded blocks")
}

pub fn forward_2d<R: Rng + ?Sized>(
    g: &GroupElement2D,
    x: &Signal2D,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !g.in_range(x.side()) {
        return Err(Error::InvalidParameter(format!(
            "group element {g:?} outside range for L = {}",
            x.side()
        )));
    }
    let mut patch = clean_patch_2d(g, x);
    add_noise(&mut patch, noise, rng);
    Ok(patch)
}

fn add_noise<R: Rng + ?Sized>(patch: &mut [f64], noise: NoiseSpec, rng: &mut R) {
    if noise.sigma > 0.0 {
        for v in patch.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += noise.sigma * e;
        }
    }
}

/// Dense order-`n` tensor over `R^dim`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTensor {
    pub order: usize,
    #[serde(rename = "dims")]
    pub dim: usize,
    pub entries: Vec<f64>,
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(order))
    }
}

impl MomentTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        check_order(order)?;
        Ok(MomentTensor {
            order,
            dim,
            entries: vec![0.0; dim.pow(order as u32)],
        })
    }

    pub fn from_entries(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        check_order(order)?;
        if entries.len() != dim.pow(order as u32) {
            return Err(Error::Shape(format!(
                "order-{order} tensor over R^{dim} needs {} entries, got {}",
                dim.pow(order as u32),
                entries.len()
            )));
        }
        Ok(MomentTensor {
            order,
            dim,
            entries,
        })
    }

    /// `v^{(x) n}`.
    pub fn power(v: &[f64], order: usize) -> Result<Self> {
        let mut t = MomentTensor::zeros(order, v.len())?;
        t.add_power(v, 1.0);
        Ok(t)
    }

    /// `self += w * v^{(x) n}`.
    pub fn add_power(&mut self, v: &[f64], w: f64) {
        debug_assert_eq!(v.len(), self.dim);
        add_power_into(&mut self.entries, self.order, v, w);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let flat = idx.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.entries[flat]
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.iter_mut().for_each(|e| *e *= s);
    }

    pub fn sub(&self, other: &MomentTensor) -> Result<MomentTensor> {
        self.check_same_shape(other)?;
        Ok(MomentTensor {
            order: self.order,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_same_shape(&self, other: &MomentTensor) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::Shape(format!(
                "tensor shapes differ: order {} dim {} vs order {} dim {}",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &MomentTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Largest entry difference between the tensor and any index permutation of it.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        match self.order {
            2 => {
                for i in 0..d {
                    for j in 0..d {
                        worst = worst.max((self.get(&[i, j]) - self.get(&[j, i])).abs());
                    }
                }
            }
            3 => {
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let base = self.get(&[i, j, k]);
                            for p in [[j, i, k], [i, k, j], [k, j, i], [j, k, i], [k, i, j]] {
                                worst = worst.max((base - self.get(&p)).abs());
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }
}

/// Each distinct index multiset is computed once, in sorted index order, and
/// scattered to all its permutations, so the result is exactly symmetric.
pub(crate) fn add_power_into(entries: &mut [f64], order: usize, v: &[f64], w: f64) {
    let d = v.len();
    match order {
        1 => {
            for (e, &a) in entries.iter_mut().zip(v) {
                *e += w * a;
            }
        }
        2 => {
            for i in 0..d {
                let wi = w * v[i];
                entries[i * d + i] += wi * v[i];
                for j in i + 1..d {
                    let t = wi * v[j];
                    entries[i * d + j] += t;
                    entries[j * d + i] += t;
                }
            }
        }
        3 => {
            for i in 0..d {
                let wi = w * v[i];
                for j in i..d {
                    let wij = wi * v[j];
                    for k in j..d {
                        let t = wij * v[k];
                        let at = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
                        if i == j && j == k {
                            entries[at(i, i, i)] += t;
                        } else if i == j {
                            entries[at(i, i, k)] += t;
                            entries[at(i, k, i)] += t;
                            entries[at(k, i, i)] += t;
                        } else if j == k {
                            entries[at(i, j, j)] += t;
                            entries[at(j, i, j)] += t;
                            entries[at(j, j, i)] += t;
                        } else {
                            for idx in [at(i, j, k), at(i, k, j), at(j, i, k), at(j, k, i), at(k, i, j), at(k, j, i)] {
                                entries[idx] += t;
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!("order checked by caller"),
    }
}

/// Gaussian correction of a clean moment: order 2 gains `sigma^2 I`, order 3
/// gains `sigma^2 (m_i d_jk + m_j d_ik + m_k d_ij)` with `m` the clean mean.
pub fn noise_corrected(clean: &MomentTensor, clean_mean: &[f64], sigma: f64) -> MomentTensor {
    let mut out = clean.clone();
    let s2 = sigma * sigma;
    if s2 == 0.0 {
        return out;
    }
    let d = clean.dim;
    match clean.order {
        2 => {
            for i in 0..d {
                out.entries[i * d + i] += s2;
            }
        }
        3 => {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut c = 0.0;
                        if j == k {
                            c += clean_mean[i];
                        }
                        if i == k {
                            c += clean_mean[j];
                        }
                        if i == j {
                            c += clean_mean[k];
                        }
                        out.entries[(i * d + j) * d + k] += s2 * c;
                    }
                }
            }
        }
        _ => {}
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Signal {
    OneD(Signal1D),
    TwoD(Signal2D),
}

impl Signal {
    /// `L` (the side in 2D).
    pub fn l(&self) -> usize {
        match self {
            Signal::OneD(s) => s.len(),
            Signal::TwoD(s) => s.side(),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Signal::OneD(s) => s.values(),
            Signal::TwoD(s) => s.values(),
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            Signal::OneD(_) => Dim::One,
            Signal::TwoD(_) => Dim::Two,
        }
    }

    /// Same geometry, new entries.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Signal> {
        match self {
            Signal::OneD(_) => Ok(Signal::OneD(Signal1D::new(values)?)),
            Signal::TwoD(s) => Ok(Signal::TwoD(Signal2D::new(s.side(), values)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupLaw {
    OneD(GroupDistribution1D),
    TwoD(EmpiricalGroupDistribution2D),
}

impl GroupLaw {
    pub fn l(&self) -> usize {
        match self {
            GroupLaw::OneD(p) => p.l,
            GroupLaw::TwoD(p) => p.l,
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            GroupLaw::OneD(_) => Dim::One,
            GroupLaw::TwoD(_) => Dim::Two,
        }
    }
}

/// A signal, a law on group elements, and a noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedModelSpec {
    pub signal: Signal,
    pub law: GroupLaw,
    pub noise: NoiseSpec,
}

/// Clean patches of the support with their probabilities, in law order.
#[derive(Debug, Clone)]
pub struct WeightedPatches {
    pub latent: Latent,
    pub patches: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl InducedModelSpec {
    pub fn new(signal: Signal, law: GroupLaw, noise: NoiseSpec) -> Result<Self> {
        if signal.dim() != law.dim() || signal.l() != law.l() {
            return Err(Error::Shape(format!(
                "signal (L = {}) and group law (L = {}) disagree",
                signal.l(),
                law.l()
            )));
        }
        let total = match &law {
            GroupLaw::OneD(p) => p.total(),
            GroupLaw::TwoD(p) => {
                if p.total() == 0 {
                    0.0
                } else {
                    1.0
                }
            }
        };
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("group law is not normalised".into()));
        }
        Ok(InducedModelSpec { signal, law, noise })
    }

    pub fn patch_dim(&self) -> usize {
        match self.signal.dim() {
            Dim::One => self.signal.l(),
            Dim::Two => self.signal.l() * self.signal.l(),
        }
    }

    pub fn support(&self) -> WeightedPatches {
        support_of(&self.signal, &self.law)
    }
}

pub(crate) fn support_of(signal: &Signal, law: &GroupLaw) -> WeightedPatches {
    match (signal, law) {
        (Signal::OneD(x), GroupLaw::OneD(p)) => {
            let (gs, ws): (Vec<_>, Vec<_>) = p.iter().filter(|(_, w)| *w > 0.0).unzip();
            WeightedPatches {
                patches: gs.iter().map(|&g| clean_patch_1d(g, x)).collect(),
                latent: Latent::OneD(gs),
                weights: ws,
            }
        }
        (Signal::TwoD(x), GroupLaw::TwoD(p)) => {
            let (gs, ws): (Vec<_>, Vec<_>) = p.probabilities().into_iter().unzip();
            WeightedPatches {
                patches: gs.iter().map(|g| clean_patch_2d(g, x)).collect(),
                latent: Latent::TwoD(gs),
                weights: ws,
            }
        }
        _ => unreachable!("dimensions checked at construction"),
    }
}

/// `M` i.i.d. patches in 1D, `M x M` in 2D.
pub fn sample_iid<R: Rng + ?Sized>(spec: &InducedModelSpec, m: usize, rng: &mut R) -> Result<PatchSet> {
    let support = spec.support();
    let index = WeightedIndex::new(&support.weights)
        .map_err(|e| Error::InvalidParameter(format!("group law: {e}")))?;
    let count = match spec.signal.dim() {
        Dim::One => m,
        Dim::Two => m * m,
    };
    let mut data = Vec::with_capacity(count * spec.patch_dim());
    let mut picks = Vec::with_capacity(count);
    for _ in 0..count {
        let i = index.sample(rng);
        picks.push(i);
        let start = data.len();
        data.extend_from_slice(&support.patches[i]);
        add_noise(&mut data[start..], spec.noise, rng);
    }
    let latent = match &support.latent {
        Latent::OneD(gs) => Latent::OneD(picks.iter().map(|&i| gs[i]).collect()),
        Latent::TwoD(gs) => Latent::TwoD(picks.iter().map(|&i| gs[i]).collect()),
    };
    PatchSet::new(spec.signal.dim(), spec.signal.l(), m, data, Some(latent))
}

fn weighted_moment(support: &WeightedPatches, dim: usize, n: usize) -> Result<MomentTensor> {
    let mut t = MomentTensor::zeros(n, dim)?;
    for (p, &w) in support.patches.iter().zip(&support.weights) {
        t.add_power(p, w);
    }
    Ok(t)
}

/// `E_{g ~ pi} (P(g . X))^{(x) n}`, summed exactly over the support.
pub fn clean_moment(spec: &InducedModelSpec, n: usize) -> Result<MomentTensor> {
    check_order(n)?;
    weighted_moment(&spec.support(), spec.patch_dim(), n)
}

/// Moment of the noisy patch `P(g . X) + eps`.
pub fn noisy_population_moment(spec: &InducedModelSpec, n: usize) -> Result<MomentTensor> {
    check_order(n)?;
    let support = spec.support();
    let clean = weighted_moment(&support, spec.patch_dim(), n)?;
    let mean = weighted_moment(&support, spec.patch_dim(), 1)?;
    Ok(noise_corrected(&clean, &mean.entries, spec.noise.sigma))
}
