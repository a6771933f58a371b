use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mra::{noise_corrected, support_of, GroupLaw, MomentTensor, Signal, WeightedPatches};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    pub max_iterations: usize,
    /// Stop once `max |J^T r|` falls below this.
    pub gradient_tol: f64,
    /// Relative finite-difference step, scaled by `1 + |x_j|`.
    pub fd_step: f64,
    pub max_halvings: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            max_iterations: 200,
            gradient_tol: 1e-10,
            fd_step: 1e-6,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub estimate: Signal,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub jacobian_rank: usize,
}

/// Moment map `X -> (M^1, ..., M^N)` of the induced model at a fixed law
/// and noise level, with the weights `1 / dim^n`.
struct MomentObjective<'a> {
    observed: &'a [MomentTensor],
    law: &'a GroupLaw,
    sigma: f64,
    weights: Vec<f64>,
}

impl MomentObjective<'_> {
    fn new<'a>(
        observed: &'a [MomentTensor],
        law: &'a GroupLaw,
        sigma: f64,
        template: &Signal,
    ) -> Result<MomentObjective<'a>> {
        if observed.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, t) in observed.iter().enumerate() {
            if t.order != i + 1 {
                return Err(Error::InvalidParameter(
                    "moment orders must be 1, 2, ... in sequence".into(),
                ));
            }
        }
        crate::mra::check_order(observed.len())?;
        let dim = template.values().len();
        if template.l() != law.l() || template.dim() != law.dim() {
            return Err(Error::Shape("initial signal does not match the group law".into()));
        }
        if observed.iter().any(|t| t.dim != dim) {
            return Err(Error::Shape(format!("moments must be over R^{dim}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
        }
        Ok(MomentObjective {
            observed,
            law,
            sigma,
            weights: observed
                .iter()
                .map(|t| 1.0 / (dim as f64).powi(t.order as i32))
                .collect(),
        })
    }

    fn residual(&self, x: &Signal) -> Vec<f64> {
        let support: WeightedPatches = support_of(x, self.law);
        let dim = x.values().len();
        let mut mean = MomentTensor::zeros(1, dim).expect("order 1");
        for (p, &w) in support.patches.iter().zip(&support.weights) {
            mean.add_power(p, w);
        }
        let mut out = Vec::new();
        for (obs, &w) in self.observed.iter().zip(&self.weights) {
            let model = if obs.order == 1 {
                mean.clone()
            } else {
                let mut clean = MomentTensor::zeros(obs.order, dim).expect("order checked");
                for (p, &pw) in support.patches.iter().zip(&support.weights) {
                    clean.add_power(p, pw);
                }
                noise_corrected(&clean, &mean.entries, self.sigma)
            };
            let sw = w.sqrt();
            out.extend(model.entries.iter().zip(&obs.entries).map(|(a, b)| sw * (a - b)));
        }
        out
    }
}

/// `sum_n w_n || M^n(x) - observed_n ||^2`.
pub fn moment_residual(
    moments: &[MomentTensor],
    law: &GroupLaw,
    sigma: f64,
    x: &Signal,
) -> Result<f64> {
    let obj = MomentObjective::new(moments, law, sigma, x)?;
    Ok(obj.residual(x).iter().map(|r| r * r).sum())
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Damped Gauss-Newton on the weighted moment residual with a forward
/// finite-difference Jacobian and pseudo-inverse steps.
pub fn recover_signal(
    moments: &[MomentTensor],
    law: &GroupLaw,
    sigma: f64,
    init: &Signal,
    opts: RecoveryOptions,
) -> Result<RecoveryResult> {
    let obj = MomentObjective::new(moments, law, sigma, init)?;
    let dim = init.values().len();
    let mut x: Vec<f64> = init.values().to_vec();
    let mut r = obj.residual(init);
    let mut f = cost(&r);
    let eval = |v: &[f64]| -> Result<Vec<f64>> { Ok(obj.residual(&init.with_values(v.to_vec())?)) };

    let mut iterations = 0;
    let mut rank;
    let mut converged = false;
    loop {
        let mut jac = DMatrix::zeros(r.len(), dim);
        for j in 0..dim {
            let h = opts.fd_step * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let rp = eval(&xp)?;
            for (i, (a, b)) in rp.iter().zip(&r).enumerate() {
                jac[(i, j)] = (a - b) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * 1e-10 * dim.max(r.len()) as f64;
        rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if grad.amax() <= opts.gradient_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: (2.0 * f).sqrt(),
            });
        }
        iterations += 1;
        let step = svd
            .solve(&rv, tol.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let rt = eval(&trial)?;
            let ft = cost(&rt);
            if ft < f {
                x = trial;
                r = rt;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual_norm = (2.0 * f).sqrt();
    if !converged && rank < dim && residual_norm > 1e-12 {
        return Err(Error::IllConditioned { rank, dim });
    }
    Ok(RecoveryResult {
        estimate: init.with_values(x)?,
        residual_norm,
        iterations,
        converged,
        jacobian_rank: rank,
    })
}
