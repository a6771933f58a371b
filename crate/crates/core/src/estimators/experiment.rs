use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureMap;
use crate::error::{check_activity, check_gap_lambda, Error, Result};
use crate::hardcore2d::{self, ConflictGraph, EmpiricalGroupDistribution2D, GlauberOptions};
use crate::markov1d::{minorization_beta, stationary_closed_form};
use crate::mra::{add_power_into, noisy_population_moment, sample_iid, GroupLaw, InducedModelSpec, Signal};
use crate::mtd_sim::{
    extract_patches_1d, extract_patches_2d, latent_groups_1d, latent_groups_2d, sample_placements_1d,
    synthesize_1d, synthesize_2d, Dim, Latent, PatchSet, PlacementConfig2D,
};
use crate::rng::{SeedSpec, StreamRng};
use crate::stats::{self, fit_line, LineFit};
use crate::types::{NoiseSpec, Signal1D, Signal2D};

const MTD_STREAM: u64 = 0;
const MRA_STREAM: u64 = 1;
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubsampleRule {
    None,
    /// `m = ceil(c ln M)`; `c` defaults to `3 / gamma` with
    /// `gamma = -ln(1 - (1 - lambda)^(L-1))`.
    Log { c: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseConfig {
    pub model: Dim,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default)]
    pub gap_lambda: Option<f64>,
    #[serde(default)]
    pub activity_lambda: Option<f64>,
    pub sigma: f64,
    #[serde(rename = "M_list")]
    pub m_list: Vec<usize>,
    pub m_rule: SubsampleRule,
    pub feature: FeatureMap,
    pub trials: usize,
    pub seed: u64,
    /// Row-major signal entries; a fixed ramp when absent.
    #[serde(default)]
    pub signal: Option<Vec<f64>>,
    /// Glauber samples used to estimate the 2D group law.
    #[serde(default)]
    pub pilot_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    #[serde(rename = "M")]
    pub m_patches: usize,
    pub m: usize,
    /// Patches actually averaged (`M' = floor(M/m)`, squared in 2D).
    pub effective: usize,
    pub trials: usize,
    pub mse_mtd: f64,
    pub mse_mra: f64,
    pub se_mtd: f64,
    pub se_mra: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub model: Dim,
    pub sigma: f64,
    pub rows: Vec<MseRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub mtd: LineFit,
    pub mra: LineFit,
}

/// Fixed default target: `x_j = 1 - j / L` (and `1 - (r + c) / 2L` in 2D).
pub fn default_signal(dim: Dim, l: usize) -> Result<Signal> {
    match dim {
        Dim::One => Ok(Signal::OneD(Signal1D::new(
            (0..l).map(|j| 1.0 - j as f64 / l as f64).collect(),
        )?)),
        Dim::Two => Ok(Signal::TwoD(Signal2D::new(
            l,
            (0..l * l)
                .map(|i| 1.0 - ((i / l) + (i % l)) as f64 / (2 * l) as f64)
                .collect(),
        )?)),
    }
}

pub fn signal_from(dim: Dim, l: usize, values: Option<&[f64]>) -> Result<Signal> {
    match values {
        None => default_signal(dim, l),
        Some(v) => match dim {
            Dim::One => {
                if v.len() != l {
                    return Err(Error::Config(format!("signal has {} entries, L = {l}", v.len())));
                }
                Ok(Signal::OneD(Signal1D::new(v.to_vec())?))
            }
            Dim::Two => Ok(Signal::TwoD(Signal2D::new(l, v.to_vec())?)),
        },
    }
}

/// Default constant of the logarithmic subsampling rule.
pub fn default_log_c(l: usize, gap_lambda: f64) -> Result<f64> {
    let beta = minorization_beta(l, gap_lambda)?;
    if beta >= 1.0 {
        // neighbouring patches are already independent
        return Ok(0.0);
    }
    Ok(3.0 / -(1.0 - beta).ln())
}

pub fn log_rule_step(c: f64, m_patches: usize) -> usize {
    ((c * (m_patches as f64).ln()).ceil() as usize).max(1)
}

/// Noisy MTD patches with their latent groups.
pub fn simulate_mtd_1d(
    x: &Signal1D,
    m: usize,
    gap_lambda: f64,
    noise: NoiseSpec,
    rng: &mut StreamRng,
) -> Result<PatchSet> {
    let placements = sample_placements_1d(x.len(), m, gap_lambda, rng)?;
    let z = synthesize_1d(x, &placements, noise, rng)?;
    let p = extract_patches_1d(&z)?;
    let latent = Latent::OneD(latent_groups_1d(&placements));
    PatchSet::new(Dim::One, p.l, p.grid, p.into_data(), Some(latent))
}

/// Noisy 2D MTD patches on an `M x M` grid; placements from a Glauber run
/// of the default length.
pub fn simulate_mtd_2d(
    x: &Signal2D,
    m: usize,
    activity: f64,
    noise: NoiseSpec,
    rng: &mut StreamRng,
) -> Result<PatchSet> {
    let l = x.side();
    let graph = ConflictGraph::mtd(l, m)?;
    let mut chain = hardcore2d::GlauberChain::new(&graph, activity)?;
    chain.run(GlauberOptions::defaults(&graph).burn_in, rng);
    let placements = PlacementConfig2D::new(l, m, graph.anchors(chain.occupied()), activity)?;
    let z = synthesize_2d(x, &placements, noise, rng)?;
    let p = extract_patches_2d(&z)?;
    let latent = Latent::TwoD(latent_groups_2d(&placements));
    PatchSet::new(Dim::Two, l, m, p.into_data(), Some(latent))
}

/// Interior-pooled group law of the hard-core model on an `M x M` patch grid.
pub fn pilot_group_law_2d(
    l: usize,
    m: usize,
    activity: f64,
    samples: usize,
    seed: SeedSpec,
) -> Result<EmpiricalGroupDistribution2D> {
    let graph = ConflictGraph::mtd(l, m)?;
    let opts = GlauberOptions::defaults(&graph);
    let mut rng = seed.rng();
    let configs = hardcore2d::sample_glauber(&graph, activity, opts.burn_in, opts.thin, samples, &mut rng)?;
    hardcore2d::empirical_pi_2d(&configs, &graph, 2)
}

/// Average of `F(Z_k)` over a patch set.
pub fn feature_mean(patches: &PatchSet, feature: FeatureMap) -> Result<Vec<f64>> {
    feature.validate()?;
    if patches.count() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut acc = vec![0.0; feature.output_dim(patches.patch_len())];
    for p in patches.patches() {
        add_power_into(&mut acc, feature.order(), p, 1.0);
    }
    let n = patches.count() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Ok(acc)
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Model {
    spec: InducedModelSpec,
    lambda: f64,
    target: Vec<f64>,
}

impl Model {
    fn mtd_patches(&self, m: usize, rng: &mut StreamRng) -> Result<PatchSet> {
        match &self.spec.signal {
            Signal::OneD(x) => simulate_mtd_1d(x, m, self.lambda, self.spec.noise, rng),
            Signal::TwoD(x) => simulate_mtd_2d(x, m, self.lambda, self.spec.noise, rng),
        }
    }
}

fn build_model(cfg: &MseConfig) -> Result<Model> {
    let noise = NoiseSpec::new(cfg.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let signal = signal_from(cfg.model, cfg.l, cfg.signal.as_deref())?;
    let (law, lambda) = match cfg.model {
        Dim::One => {
            if cfg.activity_lambda.is_some() {
                return Err(Error::Config("activity_lambda applies to the 2d model only".into()));
            }
            let lam = cfg
                .gap_lambda
                .ok_or_else(|| Error::Config("1d model needs gap_lambda".into()))?;
            check_gap_lambda(lam).map_err(|e| Error::Config(e.to_string()))?;
            (GroupLaw::OneD(stationary_closed_form(cfg.l, lam)?), lam)
        }
        Dim::Two => {
            if cfg.gap_lambda.is_some() {
                return Err(Error::Config("gap_lambda applies to the 1d model only".into()));
            }
            let lam = cfg
                .activity_lambda
                .ok_or_else(|| Error::Config("2d model needs activity_lambda".into()))?;
            check_activity(lam).map_err(|e| Error::Config(e.to_string()))?;
            let largest = cfg.m_list.iter().copied().max().unwrap_or(5).max(5);
            let pilot = cfg.pilot_samples.unwrap_or(2_000);
            let seed = SeedSpec::new(cfg.seed).derive(PILOT_STREAM);
            (
                GroupLaw::TwoD(pilot_group_law_2d(cfg.l, largest, lam, pilot, seed)?),
                lam,
            )
        }
    };
    let spec = InducedModelSpec::new(signal, law, noise)?;
    let target = noisy_population_moment(&spec, cfg.feature.order())?.entries;
    Ok(Model {
        spec,
        lambda,
        target,
    })
}

pub fn validate_mse_config(cfg: &MseConfig) -> Result<()> {
    if cfg.l == 0 {
        return Err(Error::Config("L must be >= 1".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if cfg.m_list.is_empty() || cfg.m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("M_list must be non-empty and strictly increasing".into()));
    }
    cfg.feature.validate().map_err(|e| Error::Config(e.to_string()))?;
    if let SubsampleRule::Log { c: Some(c) } = cfg.m_rule {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Config(format!("subsampling constant c = {c} is invalid")));
        }
    }
    if cfg.model == Dim::Two && matches!(cfg.m_rule, SubsampleRule::Log { c: None }) {
        return Err(Error::Config("the 2d model needs an explicit subsampling constant c".into()));
    }
    Ok(())
}

/// Subsampling step used for `M` patches (1 without subsampling).
pub fn subsample_step(cfg: &MseConfig, m_patches: usize) -> Result<usize> {
    match cfg.m_rule {
        SubsampleRule::None => Ok(1),
        SubsampleRule::Log { c: Some(c) } => Ok(log_rule_step(c, m_patches)),
        SubsampleRule::Log { c: None } => {
            let lam = cfg
                .gap_lambda
                .ok_or_else(|| Error::Config("default c needs gap_lambda".into()))?;
            Ok(log_rule_step(default_log_c(cfg.l, lam)?, m_patches))
        }
    }
}

/// MSE of the feature average under MTD patches and matched i.i.d. samples.
/// With subsampling, the i.i.d. estimator uses the same effective size.
pub fn mse_experiment(cfg: &MseConfig) -> Result<MseCurve> {
    validate_mse_config(cfg)?;
    let model = build_model(cfg)?;
    let root = SeedSpec::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    for &m_patches in &cfg.m_list {
        let step = subsample_step(cfg, m_patches)?;
        let kept = m_patches / step;
        if kept == 0 {
            return Err(Error::SubsampleEmpty {
                count: m_patches,
                m: step,
            });
        }
        let size_seed = root.derive(m_patches as u64);
        let errors: Vec<(f64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<(f64, f64)> {
                let trial = size_seed.derive(t as u64);
                let mut rng = trial.derive(MTD_STREAM).rng();
                let mut mtd = model.mtd_patches(m_patches, &mut rng)?;
                if step > 1 {
                    mtd = super::subsample(&mtd, step)?;
                }
                let e_mtd = squared_error(&feature_mean(&mtd, cfg.feature)?, &model.target);
                let mut rng = trial.derive(MRA_STREAM).rng();
                let mra = sample_iid(&model.spec, kept, &mut rng)?;
                let e_mra = squared_error(&feature_mean(&mra, cfg.feature)?, &model.target);
                Ok((e_mtd, e_mra))
            })
            .collect::<Result<Vec<_>>>()?;
        let (mtd, mra): (Vec<f64>, Vec<f64>) = errors.into_iter().unzip();
        rows.push(MseRow {
            m_patches,
            m: step,
            effective: match cfg.model {
                Dim::One => kept,
                Dim::Two => kept * kept,
            },
            trials: cfg.trials,
            mse_mtd: stats::mean(&mtd),
            mse_mra: stats::mean(&mra),
            se_mtd: stats::std_error(&mtd),
            se_mra: stats::std_error(&mra),
        });
    }
    Ok(MseCurve {
        model: cfg.model,
        sigma: cfg.sigma,
        rows,
    })
}

/// Least-squares lines of `ln mse` on `ln M'` for both series.
pub fn fit_rate(curve: &MseCurve) -> Result<RateFit> {
    if curve.rows.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need >= 4 rows, got {}",
            curve.rows.len()
        )));
    }
    let xs: Vec<f64> = curve.rows.iter().map(|r| (r.effective as f64).ln()).collect();
    let ln = |v: f64| {
        if v > 0.0 {
            Ok(v.ln())
        } else {
            Err(Error::DegenerateFit(format!("non-positive mse {v}")))
        }
    };
    let mtd: Vec<f64> = curve.rows.iter().map(|r| ln(r.mse_mtd)).collect::<Result<_>>()?;
    let mra: Vec<f64> = curve.rows.iter().map(|r| ln(r.mse_mra)).collect::<Result<_>>()?;
    Ok(RateFit {
        mtd: fit_line(&xs, &mtd)?,
        mra: fit_line(&xs, &mra)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    #[serde(rename = "L")]
    pub l: usize,
    pub gap_lambda: f64,
    /// Moment order.
    pub n: usize,
    pub sigma_list: Vec<f64>,
    #[serde(rename = "M")]
    pub m_patches: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub signal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub mse: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub n: usize,
    pub rows: Vec<SigmaRow>,
    /// Line of `ln mse` on `ln sigma`.
    pub fit: LineFit,
}

/// Fixed-`M` MSE of the order-`n` empirical moment of 1D MTD patches
/// against the noisy population moment, across noise levels.
pub fn sigma_scaling_experiment(cfg: &SigmaConfig) -> Result<SigmaTable> {
    crate::mra::check_order(cfg.n).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.trials == 0 || cfg.m_patches == 0 {
        return Err(Error::Config("trials and M must be >= 1".into()));
    }
    let lo = cfg.sigma_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.sigma_list.iter().copied().fold(0.0, f64::max);
    if cfg.sigma_list.len() < 2 || lo < 1.0 || !hi.is_finite() || hi / lo < 10.0 {
        return Err(Error::Config(
            "sigma_list needs >= 2 values, all >= 1, spanning at least a decade".into(),
        ));
    }
    check_gap_lambda(cfg.gap_lambda).map_err(|e| Error::Config(e.to_string()))?;
    let Signal::OneD(x) = signal_from(Dim::One, cfg.l, cfg.signal.as_deref())? else {
        unreachable!()
    };
    let law = GroupLaw::OneD(stationary_closed_form(cfg.l, cfg.gap_lambda)?);
    let feature = FeatureMap::Moment { order: cfg.n };
    let root = SeedSpec::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.sigma_list.len());
    for (si, &sigma) in cfg.sigma_list.iter().enumerate() {
        let noise = NoiseSpec::new(sigma)?;
        let spec = InducedModelSpec::new(Signal::OneD(x.clone()), law.clone(), noise)?;
        let target = noisy_population_moment(&spec, cfg.n)?.entries;
        let level = root.derive(si as u64);
        let errs: Vec<f64> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<f64> {
                let mut rng = level.derive(t as u64).rng();
                let p = simulate_mtd_1d(&x, cfg.m_patches, cfg.gap_lambda, noise, &mut rng)?;
                Ok(squared_error(&feature_mean(&p, feature)?, &target))
            })
            .collect::<Result<_>>()?;
        rows.push(SigmaRow {
            sigma,
            mse: stats::mean(&errs),
            se: stats::std_error(&errs),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.sigma.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mse.ln()).collect();
    Ok(SigmaTable {
        n: cfg.n,
        fit: fit_line(&xs, &ys)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg() -> MseConfig {
        MseConfig {
            model: Dim::One,
            l: 2,
            gap_lambda: Some(0.5),
            activity_lambda: None,
            sigma: 1.0,
            m_list: vec![64, 128, 256, 512],
            m_rule: SubsampleRule::None,
            feature: FeatureMap::Moment { order: 1 },
            trials: 8,
            seed: 3,
            signal: None,
            pilot_samples: None,
        }
    }

    #[test]
    fn exact_power_law_fits() {
        let rows = [1e2, 1e3, 1e4, 1e5]
            .iter()
            .map(|&m| MseRow {
                m_patches: m as usize,
                m: 1,
                effective: m as usize,
                trials: 1,
                mse_mtd: 3.0 / m,
                mse_mra: 0.25,
                se_mtd: 0.0,
                se_mra: 0.0,
            })
            .collect();
        let fit = fit_rate(&MseCurve {
            model: Dim::One,
            sigma: 1.0,
            rows,
        })
        .unwrap();
        assert!((fit.mtd.slope + 1.0).abs() < 1e-9);
        assert!(fit.mra.slope.abs() < 1e-12);
    }

    #[test]
    fn config_errors() {
        let mut c = base_cfg();
        c.gap_lambda = None;
        assert!(matches!(mse_experiment(&c), Err(Error::Config(_))));
        let mut c = base_cfg();
        c.m_list = vec![10, 5];
        assert!(matches!(mse_experiment(&c), Err(Error::Config(_))));
        let mut c = base_cfg();
        c.activity_lambda = Some(0.2);
        assert!(matches!(mse_experiment(&c), Err(Error::Config(_))));
    }

    #[test]
    fn experiment_is_deterministic() {
        let c = base_cfg();
        assert_eq!(mse_experiment(&c).unwrap(), mse_experiment(&c).unwrap());
    }

    #[test]
    fn noiseless_error_vanishes_with_size() {
        let mut c = base_cfg();
        c.sigma = 0.0;
        c.m_list = vec![16, 4096];
        let rows = mse_experiment(&c).unwrap().rows;
        assert!(rows[1].mse_mtd < rows[0].mse_mtd);
        assert!(rows[1].mse_mra < rows[0].mse_mra);
        assert!(rows[1].mse_mra < 1e-3);
    }

    #[test]
    fn default_c_and_step() {
        let c = default_log_c(2, 0.5).unwrap();
        assert!((c - 3.0 / 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_rule_step(c, 1024), (c * 1024f64.ln()).ceil() as usize);
        assert_eq!(default_log_c(1, 0.3).unwrap(), 0.0);
        assert_eq!(log_rule_step(0.0, 1000), 1);
    }

    #[test]
    fn sigma_config_requires_a_decade() {
        let cfg = SigmaConfig {
            l: 2,
            gap_lambda: 0.5,
            n: 1,
            sigma_list: vec![1.0, 2.0, 4.0],
            m_patches: 100,
            trials: 4,
            seed: 0,
            signal: None,
        };
        assert!(matches!(sigma_scaling_experiment(&cfg), Err(Error::Config(_))));
    }
}
