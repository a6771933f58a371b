//! Exact machinery for the 1D latent process.
//!
//! The start-offset chain `omega_k` lives on `{0, ..., L}`: `omega_k < L` is
//! the offset of a copy starting in patch `k`, and `L` means no start. The
//! patch-level state is the pair `g_k = (omega_{k-1} or 0, omega_k)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_gap_lambda, Error, Result};
use crate::types::GroupElement1D;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Row-stochastic `(L+1) x (L+1)` transition matrix of the start-offset chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    l: usize,
    lambda: f64,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn states(&self) -> usize {
        self.l + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.states() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.states();
        &self.entries[i * n..(i + 1) * n]
    }

    /// `mu P` for a row vector `mu`.
    pub fn left_apply(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.states();
        let mut out = vec![0.0; n];
        for (i, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += w * p;
            }
        }
        out
    }

    /// Draws the successor of state `from`.
    pub fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(from);
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // u fell in the rounding slack of the row sum
        row.iter().rposition(|&p| p > 0.0).unwrap_or(self.l)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.states();
        DMatrix::from_row_slice(n, n, &self.entries)
    }
}

pub fn transition_matrix(l: usize, lambda: f64) -> Result<TransitionMatrix> {
    check_gap_lambda(lambda)?;
    if l == 0 {
        return Err(Error::InvalidParameter("L must be >= 1".into()));
    }
    let n = l + 1;
    let mut entries = vec![0.0; n * n];
    for i in 0..l {
        for j in i..l {
            entries[i * n + j] = (1.0 - lambda).powi((j - i) as i32) * lambda;
        }
        entries[i * n + l] = (1.0 - lambda).powi((l - i) as i32);
    }
    let (head, tail) = entries.split_at_mut(l * n);
    tail.copy_from_slice(&head[..n]);
    Ok(TransitionMatrix { l, lambda, entries })
}

/// Law over pair states `(g1, g2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution1D {
    pub l: usize,
    probabilities: BTreeMap<GroupElement1D, f64>,
}

impl GroupDistribution1D {
    pub fn from_map(l: usize, probabilities: BTreeMap<GroupElement1D, f64>) -> Result<Self> {
        if let Some(g) = probabilities.keys().find(|g| !g.in_range(l)) {
            return Err(Error::InvalidParameter(format!(
                "group element {g:?} outside range for L={l}"
            )));
        }
        let total: f64 = probabilities.values().sum();
        if (total - 1.0).abs() > 1e-9 || probabilities.values().any(|&p| p < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "probabilities must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        Ok(GroupDistribution1D { l, probabilities })
    }

    /// Point mass at `g`.
    pub fn point_mass(l: usize, g: GroupElement1D) -> Result<Self> {
        GroupDistribution1D::from_map(l, [(g, 1.0)].into_iter().collect())
    }

    pub fn probability(&self, g: GroupElement1D) -> f64 {
        self.probabilities.get(&g).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupElement1D, f64)> + '_ {
        self.probabilities.iter().map(|(g, p)| (*g, *p))
    }

    pub fn as_map(&self) -> &BTreeMap<GroupElement1D, f64> {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }
}

/// Stationary law `rho` of the start-offset chain in closed form.
pub fn rho_closed_form(l: usize, lambda: f64) -> Result<Vec<f64>> {
    check_gap_lambda(lambda)?;
    let z = 1.0 + (l as f64 - 1.0) * lambda;
    let mut rho = vec![lambda / z; l + 1];
    rho[l] = (1.0 - lambda) / z;
    Ok(rho)
}

/// Stationary pair law, five-case closed form. Zero outside the support.
pub fn stationary_closed_form(l: usize, lambda: f64) -> Result<GroupDistribution1D> {
    check_gap_lambda(lambda)?;
    if l == 0 {
        return Err(Error::InvalidParameter("L must be >= 1".into()));
    }
    let z = 1.0 + (l as f64 - 1.0) * lambda;
    let q = 1.0 - lambda;
    let mut probabilities = BTreeMap::new();
    for x in 0..l {
        for y in 0..=l {
            let p = if x == 0 && y == l {
                q.powi(l as i32) / z
            } else if x > 0 && y == l {
                lambda * q.powi((l - x) as i32) / z
            } else if x == 0 {
                lambda * q.powi(y as i32) / z
            } else if x <= y {
                lambda * lambda * q.powi((y - x) as i32) / z
            } else {
                0.0
            };
            if p > 0.0 {
                probabilities.insert(GroupElement1D::new(x, y), p);
            }
        }
    }
    Ok(GroupDistribution1D { l, probabilities })
}

/// Pair law assembled from a stationary `rho`: the joint law of
/// `(omega_{k-1}, omega_k)` is `rho(a) P(a, b)`, pushed through the map
/// `(a, b) -> (a if a < L else 0, b)`.
pub fn stationary_from_rho(p: &TransitionMatrix, rho: &[f64]) -> GroupDistribution1D {
    let l = p.l();
    let mut probabilities = BTreeMap::new();
    for (a, &ra) in rho.iter().enumerate() {
        for b in 0..=l {
            let w = ra * p.get(a, b);
            if w > 0.0 {
                let g = GroupElement1D::new(if a < l { a } else { 0 }, b);
                *probabilities.entry(g).or_insert(0.0) += w;
            }
        }
    }
    GroupDistribution1D { l, probabilities }
}

/// Left Perron vector of `p` by power iteration.
pub fn stationary_eigen(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = p.states();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITER {
        let mut next = p.left_apply(&v);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < POWER_TOL {
            return Ok(v);
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: POWER_MAX_ITER,
    })
}

/// One trajectory of pair states `g_1..g_M` with `omega_0 = 0`.
pub fn simulate_chain<R: Rng + ?Sized>(
    l: usize,
    lambda: f64,
    m: usize,
    rng: &mut R,
) -> Result<Vec<GroupElement1D>> {
    let p = transition_matrix(l, lambda)?;
    let mut prev = 0;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let next = p.step(prev, rng);
        out.push(GroupElement1D::new(if prev < l { prev } else { 0 }, next));
        prev = next;
    }
    Ok(out)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `curves[s][k] = sum_w |P^k(s, w) - rho(w)|` for `k = 0..=kmax`.
///
/// The distance is the plain l1 sum, so it lies in `[0, 2]`.
pub fn tv_mixing_curve(p: &TransitionMatrix, kmax: usize) -> Result<Vec<Vec<f64>>> {
    let rho = rho_closed_form(p.l(), p.lambda())?;
    let n = p.states();
    Ok((0..n)
        .map(|s| {
            let mut mu = vec![0.0; n];
            mu[s] = 1.0;
            let mut curve = Vec::with_capacity(kmax + 1);
            curve.push(l1(&mu, &rho));
            for _ in 0..kmax {
                mu = p.left_apply(&mu);
                curve.push(l1(&mu, &rho));
            }
            curve
        })
        .collect())
}

/// Same as [`tv_mixing_curve`] but for the pair chain: for every start
/// state `g'` in the support of the pair law, the l1 distance between
/// `P(g_{k+j} = . | g_k = g')` and the closed-form pair law, `j = 0..=kmax`.
pub fn pair_mixing_curve(
    p: &TransitionMatrix,
    kmax: usize,
) -> Result<Vec<(GroupElement1D, Vec<f64>)>> {
    let l = p.l();
    let pi = stationary_closed_form(l, p.lambda())?;
    let n = p.states();
    let distance = |law: &BTreeMap<GroupElement1D, f64>| {
        let mut acc = 0.0;
        for (g, &q) in pi.as_map() {
            acc += (law.get(g).copied().unwrap_or(0.0) - q).abs();
        }
        for (g, &w) in law {
            if !pi.as_map().contains_key(g) {
                acc += w.abs();
            }
        }
        acc
    };
    let starts: Vec<GroupElement1D> = pi.as_map().keys().copied().collect();
    Ok(starts
        .into_iter()
        .map(|start| {
            let mut curve = Vec::with_capacity(kmax + 1);
            curve.push(distance(&[(start, 1.0)].into_iter().collect()));
            // law of omega_{k+j-1}; g_k fixes omega_k = start.g2
            let mut mu = vec![0.0; n];
            mu[start.g2] = 1.0;
            for _ in 0..kmax {
                curve.push(distance(stationary_from_rho(p, &mu).as_map()));
                mu = p.left_apply(&mu);
            }
            (start, curve)
        })
        .collect())
}

/// `1 - |lambda_2|` from the full complex spectrum (real Schur form).
pub fn spectral_gap(p: &TransitionMatrix) -> Result<f64> {
    let schur = nalgebra::linalg::Schur::try_new(p.to_dmatrix(), 1e-14, POWER_MAX_ITER)
        .ok_or(Error::ConvergenceFailure {
            iterations: POWER_MAX_ITER,
        })?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let second = moduli.get(1).copied().unwrap_or(0.0);
    Ok(1.0 - second)
}

/// `(1 - lambda)^(L - 1)`.
pub fn minorization_beta(l: usize, lambda: f64) -> Result<f64> {
    check_gap_lambda(lambda)?;
    if l == 0 {
        return Err(Error::InvalidParameter("L must be >= 1".into()));
    }
    Ok((1.0 - lambda).powi(l as i32 - 1))
}

/// `sum_j min_i P_ij`, evaluated numerically.
pub fn minorization_beta_numeric(p: &TransitionMatrix) -> f64 {
    let n = p.states();
    (0..n)
        .map(|j| (0..n).map(|i| p.get(i, j)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Envelope constant used with the rate `1 - beta`.
pub fn envelope_constant(l: usize) -> f64 {
    2.0 * (l as f64 + 1.0)
}

/// Smallest `C` with `curve[k] <= C (1 - beta)^k` for all `k` in the curves.
/// Infinite when `beta = 1` and some tail value is nonzero.
pub fn empirical_envelope_constant(curves: &[Vec<f64>], beta: f64) -> f64 {
    let rate = 1.0 - beta;
    let mut c: f64 = 0.0;
    for curve in curves {
        for (k, &v) in curve.iter().enumerate() {
            let env = rate.powi(k as i32);
            if env > 0.0 {
                c = c.max(v / env);
            } else if v > 0.0 {
                c = f64::INFINITY;
            }
        }
    }
    c
}
