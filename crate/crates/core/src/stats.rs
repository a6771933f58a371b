//! Small statistics helpers. All reductions run sequentially in index order
//! so results do not depend on how the inputs were produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean of independent draws.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Batch-means standard error for a serially correlated sequence.
pub fn batch_means_std_error(xs: &[f64], batch: usize) -> f64 {
    let batch = batch.max(1);
    let n_batches = xs.len() / batch;
    if n_batches < 2 {
        return std_error(xs);
    }
    let means: Vec<f64> = (0..n_batches)
        .map(|b| mean(&xs[b * batch..(b + 1) * batch]))
        .collect();
    (variance(&means) / n_batches as f64).sqrt()
}

/// Total variation distance `0.5 * sum |p - q|` between two pmfs keyed alike.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut acc = 0.0;
    for (k, &pv) in p {
        acc += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qv) in q {
        if !p.contains_key(k) {
            acc += qv.abs();
        }
    }
    0.5 * acc
}

/// Normalises integer counts into a pmf.
pub fn normalize_counts<K: Ord + Clone>(counts: &BTreeMap<K, u64>) -> BTreeMap<K, f64> {
    let total: u64 = counts.values().sum();
    counts
        .iter()
        .map(|(k, &c)| (k.clone(), c as f64 / total as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. A perfect fit
/// (including a constant series) reports `r2 = 1`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need >= 2 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite coordinate".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 || ss_res <= 1e-30 * ss_tot.max(1e-300) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LineFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 0.5).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 0.5).abs() < 1e-12);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn line_fit_rejects_degenerate() {
        assert!(fit_line(&[1.0, 1.0], &[0.0, 2.0]).is_err());
        assert!(fit_line(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn tv_counts_missing_keys() {
        let p: BTreeMap<u8, f64> = [(0, 0.5), (1, 0.5)].into_iter().collect();
        let q: BTreeMap<u8, f64> = [(1, 0.5), (2, 0.5)].into_iter().collect();
        assert!((tv_distance(&p, &q) - 0.5).abs() < 1e-15);
        assert_eq!(tv_distance(&p, &p), 0.0);
    }

    #[test]
    fn batch_means_falls_back_for_short_input() {
        let xs = [1.0, 2.0, 3.0];
        assert_eq!(batch_means_std_error(&xs, 10), std_error(&xs));
    }
}
