//! Distributional invariants checked by Monte Carlo at fixed seeds.

use statrs::distribution::{ContinuousCDF, Normal};

use eigenchaos::dynamics::{ou_advance, resample_draw};
use eigenchaos::montecarlo::collect_samples;
use eigenchaos::paths::{path_spectrum_sweep, path_sup_m, PathGrid};
use eigenchaos::stats::{frequency, quantile_estimate};
use eigenchaos::{entries_partition, sample_goe, Ensemble, SeedStream, VarianceProfile};

/// Asymptotic Kolmogorov-Smirnov p-value of `samples` against `cdf`.
fn ks_p_value(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0f64, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

#[test]
fn ou_transitions_keep_goe_marginals() {
    let n = 4;
    let profile = VarianceProfile::goe(n).unwrap();
    let mut rng = SeedStream::new(2024, 0).rng();
    let mut diag = Vec::new();
    let mut off = Vec::new();
    for _ in 0..100_000 {
        let x = sample_goe(n, &mut rng);
        let y = ou_advance(&x, 0.7, 1.0, &profile, &mut rng).unwrap();
        diag.push(y.get(1, 1));
        off.push(y.get(0, 2));
    }
    let p_diag = ks_p_value(&mut diag, |x| Normal::new(0.0, 2f64.sqrt()).unwrap().cdf(x));
    let p_off = ks_p_value(&mut off, |x| Normal::new(0.0, 1.0).unwrap().cdf(x));
    assert!(p_diag > 1e-3, "diagonal KS p = {p_diag}");
    assert!(p_off > 1e-3, "off-diagonal KS p = {p_off}");
}

#[test]
fn ks_detects_a_wrong_variance() {
    let mut rng = SeedStream::new(5, 0).rng();
    let mut xs: Vec<f64> = (0..100_000).map(|_| sample_goe(1, &mut rng).get(0, 0)).collect();
    assert!(ks_p_value(&mut xs, |x| Normal::new(0.0, 1.0).unwrap().cdf(x)) < 1e-3);
}

#[test]
fn max_entry_grows_like_log_n() {
    let mut ratios = Vec::new();
    for n in [32usize, 64, 128, 256, 512] {
        let (sq, _) = collect_samples(7, n as u64, 200, |rng| {
            let x = sample_goe(n, rng);
            Ok(x.max_abs().powi(2))
        })
        .unwrap();
        let mean = sq.iter().sum::<f64>() / sq.len() as f64;
        ratios.push(mean / (n as f64).ln());
    }
    assert!(ratios.iter().all(|&r| r <= 10.0), "{ratios:?}");
}

/// One-entry-resampled GOE pairs: sup over the path of `M·n^{1/4}` must stay
/// below 1 in at least 99% of trials.
#[test]
fn eigenvectors_stay_delocalized_along_one_block_paths() {
    let n = 128;
    let p = entries_partition(n).unwrap();
    let ens = Ensemble::goe(n);
    let grid = PathGrid::uniform(33).unwrap();
    let (sups, _) = collect_samples(31, 0, 200, |rng| {
        let pair = resample_draw(&ens, &p, 1, rng)?;
        path_sup_m(&pair.first, &pair.second, &grid)
    })
    .unwrap();
    let scale = (n as f64).powf(0.25);
    let pass = frequency(sups.iter().map(|m| m * scale <= 1.0));
    let median = quantile_estimate(&sups, 0.5).mean * (n as f64).sqrt();
    assert!(pass.mean >= 0.99, "pass rate {:.3}, median sup M·√n = {median:.2} vs n^(1/4) = {:.2}", pass.mean, scale);
}

#[test]
fn spacing_sums_along_paths_scale_stably() {
    let grid = PathGrid::uniform(33).unwrap();
    let mut c = Vec::new();
    for n in [64usize, 128, 256] {
        let p = entries_partition(n).unwrap();
        let ens = Ensemble::goe(n);
        let (sups, _) = collect_samples(37, n as u64, 40, |rng| {
            let pair = resample_draw(&ens, &p, 1, rng)?;
            Ok(path_spectrum_sweep(&pair.first, &pair.second, &grid, 1)?.sup_s_alpha())
        })
        .unwrap();
        c.push(quantile_estimate(&sups, 0.5).mean * (n as f64).powf(-0.8));
    }
    let ratio = c.iter().copied().fold(0.0f64, f64::max) / c.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(ratio <= 2.0, "C_emp = {c:?}, ratio {ratio:.3}");
}
