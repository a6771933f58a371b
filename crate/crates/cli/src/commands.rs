use std::collections::BTreeMap;
use std::path::Path;

use mtdmra::estimators::{
    empirical_moment, empirical_moment_with_se, fit_rate, mse_experiment, pilot_group_law_2d,
    recover_signal, sigma_scaling_experiment, signal_from, simulate_mtd_1d, simulate_mtd_2d,
    MseConfig, RecoveryOptions, SigmaConfig,
};
use mtdmra::hardcore2d::{
    enumerate_exact, mixing_diagnostic, sample_glauber, ConflictGraph, GlauberOptions, MixingOptions,
};
use mtdmra::io::{Container, ContainerKind};
use mtdmra::markov1d::{
    envelope_constant, minorization_beta, simulate_chain, spectral_gap, stationary_closed_form,
    transition_matrix, tv_mixing_curve,
};
use mtdmra::mra::{noisy_population_moment, GroupLaw, InducedModelSpec, Signal};
use mtdmra::mtd_sim::{
    extract_patches_1d, extract_patches_2d, latent_groups_1d, latent_groups_2d, sample_placements_1d,
    sample_placements_2d, synthesize_1d, synthesize_2d, Dim, PatchSet, Sampler,
};
use mtdmra::stats::{fit_line, normalize_counts};
use mtdmra::{GroupElement1D, NoiseSpec, SeedSpec};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{f, io_err, usage, CliError, CliResult, Run};

const CSV_MEASUREMENT_LIMIT: usize = 100_000;

fn dim(model: Model) -> Dim {
    match model {
        Model::OneD => Dim::One,
        Model::TwoD => Dim::Two,
    }
}

fn require<T: Copy>(v: Option<T>, flag: &str, model: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for the {model} model")))
}

fn check_positive(v: usize, flag: &str) -> CliResult<()> {
    if v == 0 {
        return usage(format!("--{flag} must be >= 1"));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> CliResult<NoiseSpec> {
    NoiseSpec::new(sigma).map_err(|_| CliError::Usage(format!("--sigma must be finite and >= 0, got {sigma}")))
}

fn check_order(n: usize, flag: &str) -> CliResult<()> {
    if !(1..=3).contains(&n) {
        return usage(format!("--{flag} must be 1, 2 or 3"));
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs, run: &mut Run) -> CliResult<()> {
    check_positive(a.l, "L")?;
    check_positive(a.m, "M")?;
    let noise = check_sigma(a.sigma)?;
    let signal = signal_from(dim(a.model), a.l, a.signal.as_deref())?;
    let seed = SeedSpec::new(a.seed);
    let mut place_rng = seed.derive(0).rng();
    let mut noise_rng = seed.derive(1).rng();

    let (values, side, patches, anchors, latents): (Vec<f64>, usize, PatchSet, Vec<Vec<String>>, Vec<Vec<String>>) =
        match (&signal, a.model) {
            (Signal::OneD(x), Model::OneD) => {
                let lambda = require(a.gap_lambda, "gap-lambda", "1d")?;
                let p = sample_placements_1d(a.l, a.m, lambda, &mut place_rng)?;
                let z = synthesize_1d(x, &p, noise, &mut noise_rng)?;
                let patches = extract_patches_1d(&z)?;
                let anchors = p
                    .anchors
                    .iter()
                    .enumerate()
                    .map(|(i, t)| vec![i.to_string(), "0".into(), t.to_string()])
                    .collect();
                let latents = latent_groups_1d(&p)
                    .iter()
                    .enumerate()
                    .map(|(k, g)| vec![k.to_string(), g.g1.to_string(), g.g2.to_string()])
                    .collect();
                let n = z.values.len();
                (z.values, n, patches, anchors, latents)
            }
            (Signal::TwoD(x), Model::TwoD) => {
                let activity = require(a.activity, "activity", "2d")?;
                let sampler = match a.sampler {
                    SamplerArg::Exact => Sampler::Exact,
                    SamplerArg::Glauber => Sampler::Glauber,
                };
                let p = sample_placements_2d(a.l, a.m, activity, sampler, &mut place_rng)?;
                let z = synthesize_2d(x, &p, noise, &mut noise_rng)?;
                let patches = extract_patches_2d(&z)?;
                let anchors = p
                    .anchors
                    .iter()
                    .enumerate()
                    .map(|(i, (r, c))| vec![i.to_string(), r.to_string(), c.to_string()])
                    .collect();
                let latents = latent_groups_2d(&p)
                    .iter()
                    .enumerate()
                    .map(|(k, g)| {
                        let mut row = vec![(k / a.m).to_string(), (k % a.m).to_string()];
                        for s in g.parts {
                            row.push(s.row.to_string());
                            row.push(s.col.to_string());
                        }
                        row
                    })
                    .collect();
                let side = z.side();
                (z.values, side, patches, anchors, latents)
            }
            _ => unreachable!("signal built for the requested model"),
        };

    let container = |kind, values: Vec<f64>| Container {
        dim: dim(a.model),
        kind,
        l: a.l as u64,
        m: a.m as u64,
        sigma: a.sigma,
        seed: a.seed,
        values,
    };
    let path = run.path("measurement.bin");
    container(ContainerKind::Measurement, values.clone())
        .write(&path)
        .map_err(|e| io_err(&path, e))?;
    let path = run.path("patches.bin");
    container(ContainerKind::Patches, patches.data().to_vec())
        .write(&path)
        .map_err(|e| io_err(&path, e))?;
    run.csv("placements.csv", &["anchor", "row", "col"], &anchors)?;
    let latent_header: &[&str] = match a.model {
        Model::OneD => &["k", "g1", "g2"],
        Model::TwoD => &["k1", "k2", "a_row", "a_col", "b_row", "b_col", "c_row", "c_col", "d_row", "d_col"],
    };
    run.csv("latents.csv", latent_header, &latents)?;
    if values.len() <= CSV_MEASUREMENT_LIMIT {
        let rows: Vec<Vec<String>> = values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), f(*v)])
            .collect();
        run.csv("measurement.csv", &["index", "value"], &rows)?;
    }
    run.summary(&json!({
        "measurement_side": side,
        "patches": patches.count(),
        "anchors": anchors.len(),
    }))
}

pub fn stationary(a: &StationaryArgs, run: &mut Run) -> CliResult<()> {
    check_positive(a.l, "L")?;
    check_positive(a.chain_steps, "chain-steps")?;
    let pi = stationary_closed_form(a.l, a.gap_lambda)?;
    let mut rng = SeedSpec::new(a.seed).rng();
    let groups = match a.source {
        ChainSource::Chain => simulate_chain(a.l, a.gap_lambda, a.chain_steps, &mut rng)?,
        ChainSource::Mtd => latent_groups_1d(&sample_placements_1d(a.l, a.chain_steps, a.gap_lambda, &mut rng)?),
    };
    let mut counts: BTreeMap<GroupElement1D, u64> = BTreeMap::new();
    for g in groups {
        *counts.entry(g).or_insert(0) += 1;
    }
    let empirical = normalize_counts(&counts);
    let mut rows = Vec::new();
    let mut tv = 0.0;
    for x in 0..a.l {
        for y in 0..=a.l {
            let g = GroupElement1D::new(x, y);
            let closed = pi.probability(g);
            let emp = empirical.get(&g).copied().unwrap_or(0.0);
            if closed > 0.0 || emp > 0.0 {
                tv += (closed - emp).abs();
                rows.push(vec![x.to_string(), y.to_string(), f(closed), f(emp)]);
            }
        }
    }
    run.csv("stationary.csv", &["x", "y", "pi_closed", "pi_empirical"], &rows)?;
    run.summary(&json!({ "tv": 0.5 * tv, "states": rows.len(), "steps": a.chain_steps }))
}

pub fn mixing(a: &MixingArgs, run: &mut Run) -> CliResult<()> {
    check_positive(a.l, "L")?;
    match a.model {
        Model::OneD => {
            let lambda = require(a.gap_lambda, "gap-lambda", "1d")?;
            let p = transition_matrix(a.l, lambda)?;
            let c = envelope_constant(a.l);
            let beta = minorization_beta(a.l, lambda)?;
            let rate = 1.0 - beta;
            let curves = tv_mixing_curve(&p, a.kmax)?;
            let mut rows = Vec::new();
            for (s, curve) in curves.iter().enumerate() {
                for (k, v) in curve.iter().enumerate() {
                    rows.push(vec![s.to_string(), k.to_string(), f(*v), f(c * rate.powi(k as i32))]);
                }
            }
            run.csv("mixing.csv", &["start", "k", "tv", "envelope"], &rows)?;
            run.summary(&json!({
                "C": c,
                "rate": rate,
                "beta": beta,
                "spectral_gap": spectral_gap(&p)?,
                "empirical_C": mtdmra::markov1d::empirical_envelope_constant(&curves, beta),
            }))
        }
        Model::TwoD => {
            let m = require(a.m, "M", "2d")?;
            let activity = require(a.activity, "activity", "2d")?;
            if a.separations.is_empty() || a.separations.contains(&0) {
                return usage("--separations must be a non-empty list of positive integers");
            }
            let graph = ConflictGraph::mtd(a.l, m)?;
            let d = MixingOptions::defaults(&graph);
            let opts = MixingOptions {
                chains: a.chains.unwrap_or(d.chains),
                samples_per_chain: a.samples_per_chain.unwrap_or(d.samples_per_chain),
                margin: a.margin.unwrap_or(d.margin),
                min_hits: a.min_hits.unwrap_or(d.min_hits),
                ..d
            };
            let table = mixing_diagnostic(&graph, activity, &a.separations, SeedSpec::new(a.seed), opts)?;
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.separation.to_string(),
                        f(r.deviation),
                        f(r.std_error),
                        r.pairs.to_string(),
                        r.conditioning_states.to_string(),
                    ]
                })
                .collect();
            run.csv(
                "mixing.csv",
                &["separation", "deviation", "std_error", "pairs", "conditioning_states"],
                &rows,
            )?;
            let xs: Vec<f64> = table.rows.iter().map(|r| r.separation as f64).collect();
            let ys: Vec<f64> = table.rows.iter().map(|r| r.deviation.ln()).collect();
            let fit = if xs.len() >= 2 && ys.iter().all(|y| y.is_finite()) {
                fit_line(&xs, &ys).ok()
            } else {
                None
            };
            run.summary(&json!({
                "log_linear_fit": fit,
                "reference_states": table.reference.counts().len(),
                "reference_total": table.reference.total(),
            }))
        }
    }
}

pub fn hardcore(a: &HardcoreArgs, run: &mut Run) -> CliResult<()> {
    check_positive(a.l, "L")?;
    check_positive(a.m, "M")?;
    check_positive(a.samples, "samples")?;
    let graph = ConflictGraph::mtd(a.l, a.m)?;
    let mut rng = SeedSpec::new(a.seed).rng();
    let mut summary = json!({
        "vertices": graph.vertex_count(),
        "samples": a.samples,
        "sampler": a.sampler,
    });
    let configs = match a.sampler {
        SamplerArg::Exact => {
            let exact = enumerate_exact(&graph, a.lambda)?;
            summary["partition_function"] = json!(exact.partition_function());
            summary["independent_sets"] = json!(exact.independent_set_count());
            (0..a.samples).map(|_| exact.sample_configuration(&mut rng)).collect::<Vec<_>>()
        }
        SamplerArg::Glauber => {
            let d = GlauberOptions::defaults(&graph);
            let burn_in = a.burn_in.unwrap_or(d.burn_in);
            let thin = a.thin.unwrap_or(d.thin);
            summary["burn_in"] = json!(burn_in);
            summary["thin"] = json!(thin);
            sample_glauber(&graph, a.lambda, burn_in, thin, a.samples, &mut rng)?
        }
    };
    let mut rows = Vec::new();
    let mut occupied = 0usize;
    for (i, c) in configs.iter().enumerate() {
        for (r, col) in graph.anchors(c) {
            rows.push(vec![i.to_string(), r.to_string(), col.to_string()]);
            occupied += 1;
        }
    }
    summary["admissible"] = json!(configs.iter().all(|c| graph.is_independent(c)));
    summary["mean_occupancy"] = json!(occupied as f64 / configs.len() as f64);
    run.csv("configurations.csv", &["sample", "row", "col"], &rows)?;
    run.summary(&summary)
}

fn index_label(mut flat: usize, order: usize, d: usize) -> String {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
    idx.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn moments(a: &MomentsArgs, run: &mut Run) -> CliResult<()> {
    check_positive(a.l, "L")?;
    check_positive(a.m, "M")?;
    check_order(a.order, "order")?;
    check_positive(a.batches, "batches")?;
    let noise = check_sigma(a.sigma)?;
    let signal = signal_from(dim(a.model), a.l, a.signal.as_deref())?;
    let seed = SeedSpec::new(a.seed);
    let mut rng = seed.derive(0).rng();
    let (patches, law) = match (&signal, a.model) {
        (Signal::OneD(x), Model::OneD) => {
            let lambda = require(a.gap_lambda, "gap-lambda", "1d")?;
            let patches = simulate_mtd_1d(x, a.m, lambda, noise, &mut rng)?;
            (patches, GroupLaw::OneD(stationary_closed_form(a.l, lambda)?))
        }
        (Signal::TwoD(x), Model::TwoD) => {
            let activity = require(a.activity, "activity", "2d")?;
            let patches = simulate_mtd_2d(x, a.m, activity, noise, &mut rng)?;
            let law = pilot_group_law_2d(a.l, a.m, activity, a.pilot_samples, seed.derive(1))?;
            (patches, GroupLaw::TwoD(law))
        }
        _ => unreachable!("signal built for the requested model"),
    };
    if patches.count() < a.batches {
        return usage(format!("--batches {} exceeds the {} patches", a.batches, patches.count()));
    }
    let batch = patches.count() / a.batches;
    let spec = InducedModelSpec::new(signal, law, noise)?;
    let d = spec.patch_dim();
    let mut rows = Vec::new();
    let mut worst_z: f64 = 0.0;
    for n in 1..=a.order {
        let (est, se) = empirical_moment_with_se(&patches, n, batch)?;
        let pop = noisy_population_moment(&spec, n)?;
        for (i, ((e, p), s)) in est.entries.iter().zip(&pop.entries).zip(&se).enumerate() {
            if *s > 0.0 {
                worst_z = worst_z.max((e - p).abs() / s);
            }
            rows.push(vec![n.to_string(), index_label(i, n, d), f(*e), f(*p), f(*s)]);
        }
    }
    run.csv("moments.csv", &["order", "index", "empirical", "population", "std_error"], &rows)?;
    run.summary(&json!({ "patches": patches.count(), "max_abs_z": worst_z }))
}

pub fn recover(a: &RecoverArgs, run: &mut Run) -> CliResult<()> {
    check_order(a.orders, "orders")?;
    let c = Container::read(&a.patches).map_err(|e| CliError::Usage(format!("{}: {e}", a.patches.display())))?;
    if c.kind != ContainerKind::Patches {
        return usage(format!("{} holds a measurement, not patches", a.patches.display()));
    }
    let (l, m) = (c.l as usize, c.m as usize);
    let sigma = a.sigma.unwrap_or(c.sigma);
    check_sigma(sigma)?;
    let seed = SeedSpec::new(a.seed);
    let law = match c.dim {
        Dim::One => GroupLaw::OneD(stationary_closed_form(l, require(a.gap_lambda, "gap-lambda", "1d")?)?),
        Dim::Two => {
            let activity = require(a.activity, "activity", "2d")?;
            GroupLaw::TwoD(pilot_group_law_2d(l, m, activity, a.pilot_samples, seed.derive(1))?)
        }
    };
    let patches = PatchSet::new(c.dim, l, m, c.values, None)?;
    let d = patches.patch_len();
    let observed = (1..=a.orders)
        .map(|n| empirical_moment(&patches, n))
        .collect::<mtdmra::Result<Vec<_>>>()?;
    let init_values = match &a.init {
        Some(v) if v.len() == d => v.clone(),
        Some(v) => return usage(format!("--init has {} entries, the signal has {d}", v.len())),
        None => {
            let mut rng = seed.derive(0).rng();
            (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        }
    };
    let init = signal_from(c.dim, l, Some(&init_values))?;
    let result = recover_signal(&observed, &law, sigma, &init, RecoveryOptions::default())?;
    run.json("recovery.json", &result)?;
    run.summary(&json!({
        "estimate": result.estimate.values(),
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
    }))
}

#[derive(Serialize)]
#[serde(untagged)]
enum ExperimentConfig {
    Sigma(SigmaConfig),
    Mse(MseConfig),
}

pub fn load_experiment_config(a: &ExperimentArgs) -> CliResult<Value> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| {
        CliError::Usage(format!(
            "cannot read config {}: {e}; usage: mtdmra experiment --config <FILE>",
            a.config.display()
        ))
    })?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", a.config.display())))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
    if let Some(t) = a.trials {
        obj.insert("trials".into(), json!(t));
    }
    if let Some(s) = a.seed {
        obj.insert("seed".into(), json!(s));
    }
    Ok(value)
}

fn parse_experiment(value: Value) -> CliResult<ExperimentConfig> {
    let bad = |e: serde_json::Error| CliError::Usage(format!("invalid experiment config: {e}"));
    if value.get("sigma_list").is_some() {
        Ok(ExperimentConfig::Sigma(serde_json::from_value(value).map_err(bad)?))
    } else {
        Ok(ExperimentConfig::Mse(serde_json::from_value(value).map_err(bad)?))
    }
}

pub fn experiment_from_value(value: Value, run: &mut Run) -> CliResult<()> {
    let cfg = parse_experiment(value)?;
    run.resolved(&cfg)?;
    match &cfg {
        ExperimentConfig::Mse(c) => {
            let curve = mse_experiment(c)?;
            let mut rows = Vec::new();
            for r in &curve.rows {
                for (series, mse, se) in [("mtd", r.mse_mtd, r.se_mtd), ("iid", r.mse_mra, r.se_mra)] {
                    rows.push(vec![
                        r.m_patches.to_string(),
                        r.m.to_string(),
                        r.effective.to_string(),
                        series.to_string(),
                        f(mse),
                        f(se),
                        r.trials.to_string(),
                    ]);
                }
            }
            run.csv("mse.csv", &["M", "m", "effective", "series", "mse", "se", "trials"], &rows)?;
            let fit = fit_rate(&curve).ok();
            run.summary(&json!({
                "kind": "mse",
                "slope_mtd": fit.map(|f| f.mtd.slope),
                "r2_mtd": fit.map(|f| f.mtd.r2),
                "slope_iid": fit.map(|f| f.mra.slope),
                "r2_iid": fit.map(|f| f.mra.r2),
                "max_ratio": curve.rows.iter().map(|r| r.mse_mtd / r.mse_mra).fold(0.0, f64::max),
            }))
        }
        ExperimentConfig::Sigma(c) => {
            let table = sigma_scaling_experiment(c)?;
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| vec![f(r.sigma), f(r.mse), f(r.se)])
                .collect();
            run.csv("sigma.csv", &["sigma", "mse", "se"], &rows)?;
            run.summary(&json!({
                "kind": "sigma",
                "n": table.n,
                "slope": table.fit.slope,
                "intercept": table.fit.intercept,
                "r2": table.fit.r2,
            }))
        }
    }
}

pub struct Replayed {
    pub command: Command,
    pub resolved: Option<Value>,
}

pub fn load_manifest(path: &Path) -> CliResult<Replayed> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("manifest {} is not valid JSON: {e}", path.display())))?;
    let command: Command = serde_json::from_value(v.get("config").cloned().unwrap_or(Value::Null))
        .map_err(|e| CliError::Usage(format!("manifest {} has no usable config: {e}", path.display())))?;
    if matches!(command, Command::Replay(_)) {
        return usage("a manifest cannot replay another replay");
    }
    Ok(Replayed {
        command,
        resolved: v.get("resolved_config").cloned(),
    })
}
