//! Worked examples across modules, mostly Monte Carlo against closed forms.

use std::collections::BTreeMap;

use mtdmra::estimators::{covariance_decay, empirical_moment_with_se, simulate_mtd_1d, FeatureMap};
use mtdmra::hardcore2d::{
    empirical_pi_2d_on, enumerate_exact, interior_patches, sample_glauber, ConflictGraph,
    EmpiricalGroupDistribution2D, GlauberOptions,
};
use mtdmra::markov1d::{
    minorization_beta, minorization_beta_numeric, rho_closed_form, simulate_chain, spectral_gap,
    stationary_closed_form, stationary_eigen, transition_matrix,
};
use mtdmra::mra::{
    clean_moment, clean_patch_1d, noisy_population_moment, sample_iid, GroupLaw, InducedModelSpec, MomentTensor,
    Signal,
};
use mtdmra::mtd_sim::{latent_groups_1d, sample_placements_1d, Latent};
use mtdmra::stats::{fit_line, mean, normalize_counts, std_error, tv_distance};
use mtdmra::{GroupElement1D, GroupElement2D, NoiseSpec, SeedSpec, Signal1D};
use rand::Rng;
use rand_distr::StandardNormal;

fn pmf<K: Ord + Clone>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, f64> {
    let mut counts = BTreeMap::new();
    for k in items {
        *counts.entry(k).or_insert(0u64) += 1;
    }
    normalize_counts(&counts)
}

fn spec_1d(x: &[f64], lambda: f64, sigma: f64) -> InducedModelSpec {
    InducedModelSpec::new(
        Signal::OneD(Signal1D::new(x.to_vec()).unwrap()),
        GroupLaw::OneD(stationary_closed_form(x.len(), lambda).unwrap()),
        NoiseSpec::new(sigma).unwrap(),
    )
    .unwrap()
}

#[test]
fn mean_gap_matches_geometric_mean() {
    let (l, lambda) = (2, 0.5);
    let p = sample_placements_1d(l, 100_000, lambda, &mut SeedSpec::new(11).rng()).unwrap();
    let gaps: Vec<f64> = p.anchors.windows(2).map(|w| (w[1] - w[0] - l) as f64).collect();
    let expect = (1.0 - lambda) / lambda;
    assert!(((mean(&gaps) - expect) / expect).abs() < 0.02, "mean gap {}", mean(&gaps));
    assert!(p.anchors.windows(2).all(|w| w[1] - w[0] >= l));
}

#[test]
fn near_unit_gap_parameter_packs_copies() {
    let p = sample_placements_1d(3, 50, 1.0 - 1e-12, &mut SeedSpec::new(12).rng()).unwrap();
    let expect: Vec<usize> = (0..p.anchors.len()).map(|i| 3 * i).collect();
    assert_eq!(p.anchors, expect);
    assert_eq!(p.anchors.len(), 50);
}

#[test]
fn chain_and_latents_agree_on_consecutive_pairs() {
    let (l, lambda, m) = (2, 0.5, 1_000_000);
    let chain = simulate_chain(l, lambda, m, &mut SeedSpec::new(13).rng()).unwrap();
    let placements = sample_placements_1d(l, m, lambda, &mut SeedSpec::new(14).rng()).unwrap();
    let latent = latent_groups_1d(&placements);
    let pairs = |v: &[GroupElement1D]| pmf(v.windows(2).map(|w| (w[0], w[1])));
    let tv = tv_distance(&pairs(&chain), &pairs(&latent));
    assert!(tv < 0.01, "two-sample TV on pairs {tv}");
    assert_eq!(chain[0].g1, 0);
    assert_eq!(latent[0].g1, 0);
}

#[test]
fn eigen_route_matches_closed_rho_on_random_parameters() {
    let mut rng = SeedSpec::new(15).rng();
    for _ in 0..100 {
        let l = rng.random_range(1..=8);
        let lambda = rng.random_range(0.01..0.99);
        let p = transition_matrix(l, lambda).unwrap();
        let eig = stationary_eigen(&p).unwrap();
        let rho = rho_closed_form(l, lambda).unwrap();
        let diff = eig.iter().zip(&rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "L={l} lambda={lambda} diff={diff}");
        assert!(eig.iter().all(|&v| v >= 0.0));
        assert!((minorization_beta(l, lambda).unwrap() - minorization_beta_numeric(&p)).abs() < 1e-12);
    }
}

#[test]
fn spectral_gap_positive_on_grid() {
    for l in 1..=8 {
        for k in 1..=9 {
            let p = transition_matrix(l, k as f64 / 10.0).unwrap();
            assert!(spectral_gap(&p).unwrap() > 0.0);
        }
    }
    let gap = spectral_gap(&transition_matrix(1, 0.5).unwrap()).unwrap();
    assert!((gap - 1.0).abs() < 1e-12);
}

#[test]
fn tiny_activity_leaves_grid_empty() {
    let g = ConflictGraph::mtd(2, 2).unwrap();
    let exact = enumerate_exact(&g, 1e-9).unwrap();
    assert!(exact.probability(0) > 1.0 - 1e-7);
    let samples = sample_glauber(&g, 1e-9, 2000, 9, 1000, &mut SeedSpec::new(16).rng()).unwrap();
    assert!(samples.iter().all(|c| c.iter().all(|&b| !b)));

    let pi = stationary_closed_form(3, 1e-9).unwrap();
    assert!(pi.probability(GroupElement1D::new(0, 3)) > 1.0 - 1e-8);
}

#[test]
fn empty_configurations_give_point_mass() {
    let g = ConflictGraph::mtd(2, 4).unwrap();
    let configs = vec![vec![false; g.vertex_count()]; 5];
    let idx = interior_patches(4, 1);
    let emp = empirical_pi_2d_on(&configs, &g, &idx).unwrap();
    assert_eq!(emp.total(), (5 * idx.len()) as u64);
    assert_eq!(emp.counts().len(), 1);
    assert_eq!(emp.probability(GroupElement2D::empty(2)), 1.0);
}

#[test]
fn hard_core_marginal_is_translation_invariant() {
    let (l, m, lambda) = (2, 8, 0.2);
    let g = ConflictGraph::mtd(l, m).unwrap();
    let opts = GlauberOptions::defaults(&g);
    // The plug-in TV over a couple of hundred states carries a bias near 0.02
    // at 1e5 draws per side, so each side gets 4e5.
    let configs = sample_glauber(&g, lambda, opts.burn_in, opts.thin, 100_000, &mut SeedSpec::new(17).rng()).unwrap();
    // two disjoint 2x2 blocks of interior patches
    let left = [(3, 2), (3, 3), (4, 2), (4, 3)];
    let right = [(3, 4), (3, 5), (4, 4), (4, 5)];
    let a = empirical_pi_2d_on(&configs, &g, &left).unwrap();
    let b = empirical_pi_2d_on(&configs, &g, &right).unwrap();
    assert_eq!(a.total(), 400_000);
    let tv = a.tv_distance(&b);
    assert!(tv <= 0.02, "TV between blocks {tv}");
    let mut pooled = EmpiricalGroupDistribution2D::new(l);
    pooled.merge(&a);
    pooled.merge(&b);
    assert_eq!(pooled.total(), 800_000);
}

#[test]
fn iid_sampler_follows_group_law() {
    let spec = spec_1d(&[1.0, 2.0], 0.5, 0.0);
    let set = sample_iid(&spec, 1_000_000, &mut SeedSpec::new(18).rng()).unwrap();
    let Some(Latent::OneD(groups)) = &set.latent else {
        panic!("i.i.d. sampler must report its groups")
    };
    let GroupLaw::OneD(pi) = &spec.law else { unreachable!() };
    let tv = tv_distance(&pmf(groups.iter().copied()), pi.as_map());
    assert!(tv < 0.01, "TV {tv}");
}

#[test]
fn iid_patch_means_are_uncorrelated() {
    let spec = spec_1d(&[1.0, 0.5], 0.5, 1.0);
    let set = sample_iid(&spec, 200_000, &mut SeedSpec::new(19).rng()).unwrap();
    let means: Vec<f64> = set.patches().map(mean).collect();
    let mu = mean(&means);
    let prods: Vec<f64> = means.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).collect();
    assert!(mean(&prods).abs() <= 2.0 * std_error(&prods));
}

#[test]
fn noisy_moments_match_large_monte_carlo() {
    let spec = spec_1d(&[1.0, 0.5], 0.5, 1.0);
    let set = sample_iid(&spec, 10_000_000, &mut SeedSpec::new(20).rng()).unwrap();
    for n in 1..=3 {
        let (est, se) = empirical_moment_with_se(&set, n, 10_000).unwrap();
        let target = noisy_population_moment(&spec, n).unwrap();
        for ((a, b), s) in est.entries.iter().zip(&target.entries).zip(&se) {
            assert!((a - b).abs() <= 3.0 * s, "order {n}: {a} vs {b}, se {s}");
        }
    }
    assert_eq!(
        noisy_population_moment(&spec_1d(&[1.0, 0.5], 0.5, 0.0), 3).unwrap(),
        clean_moment(&spec, 3).unwrap()
    );
}

#[test]
fn mtd_moment_error_within_clt_scale() {
    let x = Signal1D::new(vec![1.0, 0.5]).unwrap();
    let spec = spec_1d(x.values(), 0.5, 1.0);
    let patches = simulate_mtd_1d(&x, 1_000_000, 0.5, NoiseSpec::new(1.0).unwrap(), &mut SeedSpec::new(21).rng()).unwrap();
    for n in 1..=3 {
        let (est, se) = empirical_moment_with_se(&patches, n, 1000).unwrap();
        let err = est.sub(&noisy_population_moment(&spec, n).unwrap()).unwrap().norm();
        let predicted = se.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(err < 3.0 * predicted, "order {n}: error {err}, predicted {predicted}");
    }
}

/// Exact `|| Cov(Y_k, Y_{k+d}) ||_F` of clean MTD patches, by summing over
/// the offset chain: `(omega_{k-1}, omega_k)` from `rho P`, then `d - 1`
/// steps to `omega_{k+d-1}` and one more to `omega_{k+d}`.
fn exact_lag_covariance(x: &[f64], lambda: f64, lag: usize) -> f64 {
    let l = x.len();
    let p = transition_matrix(l, lambda).unwrap();
    let rho = rho_closed_form(l, lambda).unwrap();
    let s = Signal1D::new(x.to_vec()).unwrap();
    let patch = |a: usize, b: usize| clean_patch_1d(GroupElement1D::new(if a < l { a } else { 0 }, b), &s);
    let mut cross = vec![0.0; l * l];
    let mut mu = vec![0.0; l];
    for a in 0..=l {
        for b in 0..=l {
            let w = rho[a] * p.get(a, b);
            if w == 0.0 {
                continue;
            }
            let y = patch(a, b);
            for i in 0..l {
                mu[i] += w * y[i];
            }
            let mut dist = vec![0.0; l + 1];
            dist[b] = 1.0;
            for _ in 1..lag {
                dist = p.left_apply(&dist);
            }
            for c in 0..=l {
                for e in 0..=l {
                    let w2 = w * dist[c] * p.get(c, e);
                    let z = patch(c, e);
                    for i in 0..l {
                        for j in 0..l {
                            cross[i * l + j] += w2 * y[i] * z[j];
                        }
                    }
                }
            }
        }
    }
    let mut f = 0.0;
    for i in 0..l {
        for j in 0..l {
            f += (cross[i * l + j] - mu[i] * mu[j]).powi(2);
        }
    }
    f.sqrt()
}

#[test]
fn covariance_decays_for_mtd_and_vanishes_for_iid() {
    let lags: Vec<usize> = (0..=6).collect();
    let spec = spec_1d(&[1.0, -1.0], 0.5, 1.0);
    let iid = sample_iid(&spec, 200_000, &mut SeedSpec::new(22).rng()).unwrap();
    let rows = covariance_decay(&iid, FeatureMap::Identity, &lags).unwrap();
    for r in &rows[1..] {
        assert!(r.norm <= 2.0 * r.std_error, "iid lag {}: {} vs se {}", r.lag, r.norm, r.std_error);
    }

    let x = Signal1D::new(vec![1.0, -1.0]).unwrap();
    let mtd = simulate_mtd_1d(&x, 200_000, 0.5, NoiseSpec::new(1.0).unwrap(), &mut SeedSpec::new(23).rng()).unwrap();
    let rows = covariance_decay(&mtd, FeatureMap::Identity, &lags).unwrap();

    // lag 0 is the plain feature covariance
    let feats: Vec<Vec<f64>> = mtd.patches().map(<[f64]>::to_vec).collect();
    let mut cov = MomentTensor::zeros(2, 2).unwrap();
    let mu: Vec<f64> = (0..2).map(|i| mean(&feats.iter().map(|f| f[i]).collect::<Vec<_>>())).collect();
    for f in &feats {
        let c: Vec<f64> = f.iter().zip(&mu).map(|(a, b)| a - b).collect();
        cov.add_power(&c, 1.0 / feats.len() as f64);
    }
    assert!((rows[0].norm - cov.norm()).abs() < 1e-9 * cov.norm());

    for r in &rows[1..] {
        let exact = exact_lag_covariance(x.values(), 0.5, r.lag);
        assert!(
            (r.norm - exact).abs() <= 3.0 * r.std_error,
            "lag {}: {} vs exact {exact}, se {}",
            r.lag,
            r.norm,
            r.std_error
        );
    }
    for w in rows[1..].windows(2) {
        assert!(w[1].norm < w[0].norm + 2.0 * w[1].std_error.hypot(w[0].std_error));
    }
    assert!(rows[1].norm > 10.0 * rows[1].std_error);
    assert!(rows[5].norm <= 2.0 * rows[5].std_error, "lag 5 above noise floor");
}

#[test]
fn some_signals_have_uncorrelated_patches() {
    // with L = 2 and gap parameter 1/2, [1, 0.5] gives zero cross-covariance at every lag
    for d in 1..=5 {
        assert!(exact_lag_covariance(&[1.0, 0.5], 0.5, d) < 1e-12);
        assert!(exact_lag_covariance(&[1.0, 0.5], 0.2, d) > 1e-8);
    }
}

#[test]
fn line_fit_recovers_exact_rates() {
    let xs: Vec<f64> = (4..12).map(|e| ((1u64 << e) as f64).ln()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * (-x).exp()).ln()).collect();
    let f = fit_line(&xs, &ys).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-9);
    let flat = fit_line(&xs, &vec![2.5; xs.len()]).unwrap();
    assert_eq!(flat.slope, 0.0);
}

#[test]
fn noiseless_mse_shrinks_to_zero() {
    let x = Signal1D::new(vec![1.0, -0.5, 0.25]).unwrap();
    let spec = spec_1d(x.values(), 0.3, 0.0);
    let target = noisy_population_moment(&spec, 2).unwrap();
    let mut errs = Vec::new();
    for &m in &[1000usize, 100_000] {
        let p = simulate_mtd_1d(&x, m, 0.3, NoiseSpec::noiseless(), &mut SeedSpec::new(24).rng()).unwrap();
        let (est, _) = empirical_moment_with_se(&p, 2, 10).unwrap();
        errs.push(est.sub(&target).unwrap().norm());
    }
    assert!(errs[1] < errs[0] && errs[1] < 0.02, "{errs:?}");
}

#[test]
fn standard_normal_draws_are_centered() {
    // guards the noise generator used throughout
    let mut rng = SeedSpec::new(25).rng();
    let v: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    assert!(mean(&v).abs() < 4.0 * std_error(&v));
}
