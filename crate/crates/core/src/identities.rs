//! Monte Carlo checks of the variance identities linking eigenvalue
//! fluctuations to eigenvector overlaps and block differences.
//!
//! Every check draws its two sides from independent trial rows of the same
//! master seed, so `z = max(0, |lhs − rhs| − allowance)/√(se_lhs² + se_rhs²)`
//! uses an honest combined standard error. Within one side all terms of a
//! trial share the same draws.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{ou_advance, ou_advance_counts, pdbou_ring_counts, PdbouPath, RingCounts};
use crate::eigen::{eigenvalue, eigh, eigvalsh};
use crate::ensemble::{sample_goe, Ensemble, VarianceProfile};
use crate::error::{Error, Result};
use crate::matrix::{Position, SymmetricMatrix};
use crate::montecarlo::{collect_means, collect_samples};
use crate::partition::AdmissiblePartition;
use crate::rng::{SeedStream, StreamRng};
use crate::spectral::{overlap_sq_spectra, squared_inner};
use crate::stats::{z_score, MCEstimate};

/// Largest block count for exact enumeration of `(B, A)` cells.
pub const MAX_ENUMERATED_BLOCKS: usize = 8;

/// Two Monte Carlo sides of an identity and their discrepancy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: MCEstimate,
    /// Exact right-hand sides carry `std_error = 0`.
    pub rhs: MCEstimate,
    pub rhs_exact: bool,
    /// Deterministic error budget (quadrature, truncation) subtracted from
    /// `|lhs − rhs|` before standardizing.
    pub allowance: f64,
    pub z: f64,
    pub trials: u64,
    pub seed: u64,
    pub degenerate_redraws: u64,
    pub params: Value,
}

impl IdentityReport {
    fn build(name: &str, lhs: MCEstimate, rhs: MCEstimate, rhs_exact: bool, allowance: f64, seed: u64, redraws: u64, params: Value) -> Self {
        let diff = ((lhs.mean - rhs.mean).abs() - allowance).max(0.0);
        let z = z_score(diff, lhs.std_error.hypot(rhs.std_error));
        Self { name: name.into(), lhs, rhs, rhs_exact, allowance, z, trials: lhs.trials, seed, degenerate_redraws: redraws, params }
    }

    pub fn passes(&self, z_max: f64) -> bool {
        self.z <= z_max
    }

    /// `{lhs, rhs, se_lhs, se_rhs, z, trials, seed, params}` plus the name,
    /// allowance and redraw count.
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "lhs": self.lhs.mean,
            "rhs": self.rhs.mean,
            "se_lhs": self.lhs.std_error,
            "se_rhs": self.rhs.std_error,
            "z": self.z,
            "allowance": self.allowance,
            "trials": self.trials,
            "seed": self.seed,
            "degenerate_redraws": self.degenerate_redraws,
            "params": self.params,
        })
    }
}

/// Time nodes `t_k = −ln(x_k)/τ` for `x_k` equally spaced from 1 down to
/// `e^{−τ t_max}`; `t_0 = 0` and the last node is `t_max` exactly.
pub fn ou_time_grid(tau: f64, t_max: f64, nodes: usize) -> Result<Vec<f64>> {
    if nodes < 3 || !(tau > 0.0) || !(t_max > 0.0) {
        return Err(Error::invalid("time grid needs nodes >= 3, tau > 0, t_max > 0"));
    }
    let x_end = (-tau * t_max).exp();
    let mut t: Vec<f64> = (0..nodes)
        .map(|k| {
            let x = 1.0 - (1.0 - x_end) * k as f64 / (nodes - 1) as f64;
            -x.ln() / tau
        })
        .collect();
    t[0] = 0.0;
    t[nodes - 1] = t_max;
    Ok(t)
}

fn check_time_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("time grid must start at 0 and increase strictly"));
    }
    Ok(())
}

/// Trapezoid weights for `∫ g dx` over nodes `x` (any monotone order).
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for k in 0..x.len() - 1 {
        let h = (x[k] - x[k + 1]).abs() / 2.0;
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// `E⟨v_α(G(0)), v_α(G(t))⟩²` along one stationary GOE OU trajectory per
/// trial, sampled at every grid time. `t = 0` contributes exactly 1.
fn ou_overlap_trial(n: usize, alpha: usize, tau: f64, grid: &[f64], profile: &VarianceProfile, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let g0 = sample_goe(n, rng);
    let s0 = eigh(&g0)?;
    s0.ensure_simple(alpha)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut g = g0;
    let mut prev = 0.0;
    for &t in grid {
        if t == 0.0 {
            out.push(1.0);
            continue;
        }
        g = ou_advance(&g, t - prev, tau, profile, rng)?;
        prev = t;
        out.push(overlap_sq_spectra(&s0, &eigh(&g)?, alpha)?);
    }
    Ok(out)
}

/// Checks `Var λ_α(G) = 2τ ∫_0^∞ e^{−τt} E⟨v_α(G(0)), v_α(G(t))⟩² dt` for
/// `G` stationary GOE OU.
///
/// The integral is computed as `2 ∫_0^1 m dx` with `x = e^{−τt}` by the
/// trapezoid rule on the grid nodes. The tail `x < e^{−τ t_max}` is bracketed
/// using that `m` is non-increasing in `t` with limit `1/n`: its midpoint
/// goes into the estimate and its half-width into the allowance, together
/// with a Richardson estimate `|fine − coarse|/3` of the quadrature error.
pub fn ou_variance_identity_check(n: usize, alpha: usize, tau: f64, grid: &[f64], trials: u64, seed: u64) -> Result<IdentityReport> {
    check_time_grid(grid)?;
    crate::eigen::check_rank(alpha, n)?;
    let t_max = grid[grid.len() - 1];
    if (-tau * t_max).exp() > 0.01 {
        return Err(Error::invalid(format!("t_max = {t_max} too short: need exp(-tau t_max) <= 0.01")));
    }
    let profile = VarianceProfile::goe(n)?;
    let (lhs_samples, r0) = collect_samples(seed, 0, trials, |rng| eigenvalue(&sample_goe(n, rng), alpha))?;
    let lhs = MCEstimate::variance_of(&lhs_samples);

    let x: Vec<f64> = grid.iter().map(|t| (-tau * t).exp()).collect();
    let fine_w = trapezoid_weights(&x);
    let coarse_idx: Vec<usize> = (0..x.len()).step_by(2).chain(std::iter::once(x.len() - 1)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let coarse_x: Vec<f64> = coarse_idx.iter().map(|&k| x[k]).collect();
    let coarse_w = trapezoid_weights(&coarse_x);
    let x_end = x[x.len() - 1];
    let floor = 1.0 / n as f64;
    let last = grid.len() - 1;

    let (means, r1) = collect_means(seed, 1, trials, |rng| {
        let m = ou_overlap_trial(n, alpha, tau, grid, &profile, rng)?;
        let tail = x_end * (m[last] + floor) / 2.0;
        let fine: f64 = fine_w.iter().zip(&m).map(|(w, v)| w * v).sum::<f64>() + tail;
        let coarse: f64 = coarse_w.iter().zip(&coarse_idx).map(|(w, &k)| w * m[k]).sum::<f64>() + tail;
        let mut row = vec![2.0 * fine, 2.0 * coarse];
        row.extend(m);
        Ok(row)
    })?;
    let rhs = means[0];
    let quadrature = (means[0].mean - means[1].mean).abs() / 3.0;
    let truncation = x_end * (means[2 + last].mean - floor).max(0.0);
    let params = json!({
        "n": n, "alpha": alpha, "tau": tau, "t_max": t_max, "grid_nodes": grid.len(),
        "quadrature_allowance": quadrature, "truncation_allowance": truncation,
    });
    Ok(IdentityReport::build("ou_variance", lhs, rhs, false, quadrature + truncation, seed, r0 + r1, params))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Per-trial `(rhs, T_0, …, T_{m−1})` of the block-resampling identity,
/// from `λ_α(X^S)` for every subset `S` of blocks.
fn pdbr_trial(ens: &Ensemble, p: &AdmissiblePartition, alpha: usize, owners: &[(Position, usize)], rng: &mut StreamRng) -> Result<Vec<f64>> {
    let m = p.m();
    let x = ens.sample(rng);
    let y = ens.sample(rng);
    let n = p.dim();
    let mut f = Vec::with_capacity(1 << m);
    let mut xs = x.clone();
    for mask in 0usize..(1 << m) {
        for &((i, j), b) in owners {
            let v = if mask >> b & 1 == 1 { y.get(i, j) } else { x.get(i, j) };
            xs.set(i, j, v);
        }
        f.push(eigvalsh(&xs)?[alpha - 1]);
    }
    debug_assert_eq!(xs.dim(), n);
    let mut t = vec![0.0; m];
    for mask in 0usize..(1 << m) {
        let k = mask.count_ones() as usize;
        if k >= m {
            continue;
        }
        for b in (0..m).filter(|b| mask >> b & 1 == 0) {
            let bit = 1 << b;
            t[k] += (f[0] - f[bit]) * (f[mask] - f[mask | bit]);
        }
    }
    for (k, tk) in t.iter_mut().enumerate() {
        *tk /= binomial(m - 1, k);
    }
    let rhs = t.iter().sum::<f64>() / (2 * m) as f64;
    let mut row = vec![rhs];
    row.extend(&t);
    row.extend(t.windows(2).map(|w| w[0] - w[1]));
    Ok(row)
}

/// The `T_k` ladder with its ordering and bound diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TkLadder {
    pub t: Vec<MCEstimate>,
    /// Paired estimates of `T_k − T_{k+1}`.
    pub steps: Vec<MCEstimate>,
    pub variance: MCEstimate,
    pub violations: Vec<String>,
}

impl TkLadder {
    fn assess(t: Vec<MCEstimate>, steps: Vec<MCEstimate>, variance: MCEstimate) -> Self {
        let m = t.len();
        let mut violations = Vec::new();
        for (k, s) in steps.iter().enumerate() {
            if s.mean < -2.0 * s.std_error {
                violations.push(format!("T_{k} < T_{} by {:.3e} ({:.2} SE)", k + 1, -s.mean, -s.mean / s.std_error));
            }
        }
        let last = t[m - 1];
        if last.mean < -2.0 * last.std_error {
            violations.push(format!("T_{} = {:.3e} is negative beyond 2 SE", m - 1, last.mean));
        }
        for (k, tk) in t.iter().enumerate() {
            let c = 2.0 * m as f64 / (k + 1) as f64;
            let se = tk.std_error.hypot(c * variance.std_error);
            if tk.mean > c * variance.mean + 3.0 * se {
                violations.push(format!("T_{k} = {:.4e} exceeds {c:.3}·Var = {:.4e} beyond 3 SE", tk.mean, c * variance.mean));
            }
        }
        Self { t, steps, variance, violations }
    }

    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn pdbr_run(ens: &Ensemble, p: &AdmissiblePartition, alpha: usize, trials: u64, seed: u64) -> Result<(IdentityReport, TkLadder)> {
    let m = p.m();
    if m > MAX_ENUMERATED_BLOCKS {
        return Err(Error::EnumerationTooLarge { m, max: MAX_ENUMERATED_BLOCKS });
    }
    if ens.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: ens.dim(), got: p.dim() });
    }
    crate::eigen::check_rank(alpha, p.dim())?;
    let n = p.dim();
    let owners: Vec<(Position, usize)> =
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| ((i, j), p.block_of(i, j))).collect();
    let (lhs_samples, r0) = collect_samples(seed, 0, trials, |rng| eigenvalue(&ens.sample(rng), alpha))?;
    let lhs = MCEstimate::variance_of(&lhs_samples);
    let (means, r1) = collect_means(seed, 1, trials, |rng| pdbr_trial(ens, p, alpha, &owners, rng))?;
    let params = json!({ "n": n, "m": m, "nu": p.nu(), "alpha": alpha, "law": ens.law });
    let report = IdentityReport::build("pdbr_variance", lhs, means[0], false, 0.0, seed, r0 + r1, params);
    let ladder = TkLadder::assess(means[1..=m].to_vec(), means[m + 1..].to_vec(), lhs);
    Ok((report, ladder))
}

/// Checks `Var λ_α(X) = (1/2m) Σ_k C(m−1,k)^{-1} Σ_B Σ_{A ∈ A_{k,B}}
/// E[Δ_B λ_α Δ_B λ_α^A]` for a disjoint partition with at most
/// [`MAX_ENUMERATED_BLOCKS`] blocks.
pub fn pdbr_variance_identity_check(ens: &Ensemble, p: &AdmissiblePartition, alpha: usize, trials: u64, seed: u64) -> Result<IdentityReport> {
    Ok(pdbr_run(ens, p, alpha, trials, seed)?.0)
}

/// Estimates of `T_0, …, T_{m−1}` with ordering and bound diagnostics.
pub fn t_k_ladder(ens: &Ensemble, p: &AdmissiblePartition, alpha: usize, trials: u64, seed: u64) -> Result<TkLadder> {
    Ok(pdbr_run(ens, p, alpha, trials, seed)?.1)
}

/// Both the identity report and the ladder from one run.
pub fn pdbr_identity_and_ladder(ens: &Ensemble, p: &AdmissiblePartition, alpha: usize, trials: u64, seed: u64) -> Result<(IdentityReport, TkLadder)> {
    pdbr_run(ens, p, alpha, trials, seed)
}

/// `E[Δ_B G_ij Δ_B G(K)_ij]`: `2(1 − e^{−τ})σ²` if `K_B = 0`, else
/// `−(1 − e^{−τ})² e^{−τ(K_B − 1)} σ²`.
pub fn pdbou_diff_cov(tau: f64, k_b: u32, sigma2: f64) -> f64 {
    let q = -(-tau).exp_m1();
    if k_b == 0 {
        2.0 * q * sigma2
    } else {
        -q * q * (-tau * (k_b - 1) as f64).exp() * sigma2
    }
}

/// Monte Carlo estimate of `E[Δ_B G_ij Δ_B G(K)_ij]` on coupled PDBOU
/// paths, against [`pdbou_diff_cov`].
pub fn pdbou_diff_cov_mc(
    p: &AdmissiblePartition,
    profile: &VarianceProfile,
    tau: f64,
    counts: &RingCounts,
    block: usize,
    entry: Position,
    trials: u64,
    seed: u64,
) -> Result<IdentityReport> {
    let (i, j) = entry;
    if block >= p.m() || i >= p.dim() || j >= p.dim() || p.block_of(i, j) != block {
        return Err(Error::invalid(format!("entry ({}, {}) is not in block {}", i + 1, j + 1, block + 1)));
    }
    profile.check_dim(p.dim())?;
    let ens = Ensemble::new(profile.clone(), crate::ensemble::EntryLaw::Gaussian)?;
    let zero = RingCounts::zeros(p);
    let (samples, redraws) = collect_samples(seed, 0, trials, |rng| {
        let g = ens.sample(rng);
        let path_rng = SeedStream::new(rand::Rng::random(rng), 0).rng();
        let mut path = PdbouPath::new(&g, p, profile, tau, path_rng)?;
        let g_e = path.advance_block(&zero, block)?;
        let g_k = path.matrix_at(counts)?;
        let g_k1 = path.advance_block(counts, block)?;
        Ok((g.get(i, j) - g_e.get(i, j)) * (g_k.get(i, j) - g_k1.get(i, j)))
    })?;
    let lhs = MCEstimate::from_samples(&samples);
    let k_b = counts.per_block()[block];
    let exact = pdbou_diff_cov(tau, k_b, profile.sigma2(i, j));
    let rhs = MCEstimate { mean: exact, std_error: 0.0, trials: 0 };
    let params = json!({ "n": p.dim(), "tau": tau, "k_b": k_b, "block": block + 1, "entry": [i + 1, j + 1] });
    Ok(IdentityReport::build("pdbou_diff_cov", lhs, rhs, true, 0.0, seed, redraws, params))
}

/// `e^τ/η · log(1/(1 − e^{−τ}))`, the largest time at which the positive
/// part of the block-difference sum is guaranteed to dominate.
pub fn pdbou_time_cap(tau: f64, eta: f64) -> f64 {
    tau.exp() / eta * (-(-(-tau).exp_m1()).ln())
}

/// `T_+`, `T_−` and the dominance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TPlusMinusReport {
    pub t_plus: MCEstimate,
    pub t_minus: MCEstimate,
    /// Paired estimate of `½T_+ − T_−`.
    pub margin: MCEstimate,
    pub t: f64,
    pub cap: f64,
    pub in_range: bool,
    /// `None` when `t` is outside the cap and dominance is not asserted.
    pub dominance: Option<bool>,
    pub probes: Vec<DerivativeProbe>,
}

/// `E[∂_ij λ_α ∂_ij λ_α^K]` for one fixed `K`, over all ordered `(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProbe {
    pub counts: Vec<u32>,
    pub estimates: Vec<MCEstimate>,
    /// `min_ij mean/SE`; nonnegativity holds when this is `≥ −2`.
    pub min_z: f64,
}

impl DerivativeProbe {
    pub fn nonnegative(&self) -> bool {
        self.min_z >= -2.0
    }
}

fn derivative_products(n: usize, alpha: usize, g: &SymmetricMatrix, gk: &SymmetricMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let s0 = eigh(g)?;
    let sk = eigh(gk)?;
    s0.ensure_simple(alpha)?;
    sk.ensure_simple(alpha)?;
    debug_assert_eq!(s0.dim(), n);
    Ok((s0.vector(alpha).to_vec(), sk.vector(alpha).to_vec()))
}

/// Monte Carlo `T_±(t)` on a GOE-started PDBOU with fresh `K ~ Poisson(ηt)`
/// per trial, plus `probes` fixed-`K` estimates of `E[∂_ij λ ∂_ij λ^K]`
/// using `probe_trials` trials each.
#[allow(clippy::too_many_arguments)]
pub fn t_plus_minus(
    p: &AdmissiblePartition,
    alpha: usize,
    eta: f64,
    tau: f64,
    t: f64,
    trials: u64,
    probes: usize,
    probe_trials: u64,
    seed: u64,
) -> Result<TPlusMinusReport> {
    let n = p.dim();
    crate::eigen::check_rank(alpha, n)?;
    let profile = VarianceProfile::goe(n)?;
    let coef = |i: usize, j: usize, kb: u32| {
        let mult = if i == j { 1.0 } else { 2.0 };
        mult * pdbou_diff_cov(tau, kb, profile.sigma2(i, j))
    };
    let (means, _) = collect_means(seed, 0, trials, |rng| {
        let g = sample_goe(n, rng);
        let k = pdbou_ring_counts(p, eta, t, rng)?;
        let gk = ou_advance_counts(&g, &k, tau, &profile, rng)?;
        let (v, w) = derivative_products(n, alpha, &g, &gk)?;
        let (mut tp, mut tm) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let kb = k.per_entry(i, j);
                let term = coef(i, j, kb) * v[i] * v[j] * w[i] * w[j];
                if kb == 0 {
                    tp += term;
                } else {
                    tm -= term;
                }
            }
        }
        Ok(vec![tp, tm, 0.5 * tp - tm])
    })?;
    let cap = pdbou_time_cap(tau, eta);
    let in_range = t <= cap;
    let margin = means[2];
    let dominance = in_range.then(|| margin.mean >= -2.0 * margin.std_error);

    let mut probe_reports = Vec::with_capacity(probes);
    for q in 0..probes {
        let mut krng = SeedStream::new(seed, 0).substream(1000 + q as u64).rng();
        let k = pdbou_ring_counts(p, eta, t, &mut krng)?;
        let (est, _) = collect_means(seed, 1 + q as u64, probe_trials, |rng| {
            let g = sample_goe(n, rng);
            let gk = ou_advance_counts(&g, &k, tau, &profile, rng)?;
            let (v, w) = derivative_products(n, alpha, &g, &gk)?;
            Ok((0..n * n).map(|c| v[c / n] * v[c % n] * w[c / n] * w[c % n]).collect())
        })?;
        let min_z = est.iter().map(|e| z_signed(e)).fold(f64::INFINITY, f64::min);
        probe_reports.push(DerivativeProbe { counts: k.per_block().to_vec(), estimates: est, min_z });
    }
    Ok(TPlusMinusReport { t_plus: means[0], t_minus: means[1], margin, t, cap, in_range, dominance, probes: probe_reports })
}

fn z_signed(e: &MCEstimate) -> f64 {
    if e.mean == 0.0 {
        0.0
    } else if e.std_error > 0.0 {
        e.mean / e.std_error
    } else {
        e.mean.signum() * f64::INFINITY
    }
}

/// `E⟨v_α(G(0)), v_α(G(t))⟩²` on a time grid with monotonicity diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub times: Vec<f64>,
    pub overlap: Vec<MCEstimate>,
    /// Paired estimates of `m(t_k) − m(t_{k+1})`.
    pub steps: Vec<MCEstimate>,
    pub violations: Vec<String>,
}

impl OverlapCurve {
    pub fn monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Estimates the squared overlap along stationary GOE OU trajectories,
/// flagging increases beyond 2 SE of the paired difference.
pub fn ou_overlap_monotonicity(n: usize, alpha: usize, tau: f64, grid: &[f64], trials: u64, seed: u64) -> Result<OverlapCurve> {
    if grid.is_empty() || !grid.windows(2).all(|w| w[0] < w[1]) || grid[0] < 0.0 {
        return Err(Error::invalid("time grid must be nonnegative and strictly increasing"));
    }
    crate::eigen::check_rank(alpha, n)?;
    let profile = VarianceProfile::goe(n)?;
    let k = grid.len();
    let (means, _) = collect_means(seed, 0, trials, |rng| {
        let g0 = sample_goe(n, rng);
        let s0 = eigh(&g0)?;
        s0.ensure_simple(alpha)?;
        let mut g = g0;
        let mut prev = 0.0;
        let mut m = Vec::with_capacity(2 * k);
        for &t in grid {
            if t == 0.0 {
                m.push(1.0);
                continue;
            }
            g = ou_advance(&g, t - prev, tau, &profile, rng)?;
            prev = t;
            let sk = eigh(&g)?;
            m.push(overlap_sq_spectra(&s0, &sk, alpha)?);
        }
        let steps: Vec<f64> = m.windows(2).map(|w| w[0] - w[1]).collect();
        m.extend(steps);
        Ok(m)
    })?;
    let overlap = means[..k].to_vec();
    let steps = means[k..].to_vec();
    let violations = steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.mean < -2.0 * s.std_error)
        .map(|(i, s)| format!("overlap rises from t = {} to t = {} by {:.3e}", grid[i], grid[i + 1], -s.mean))
        .collect();
    Ok(OverlapCurve { times: grid.to_vec(), overlap, steps, violations })
}

/// `⟨v, w⟩²` helper re-exported for examples.
pub fn overlap_of(v: &[f64], w: &[f64]) -> f64 {
    squared_inner(v, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::entries_partition;

    #[test]
    fn closed_form_covariances() {
        let e = std::f64::consts::E;
        assert!((pdbou_diff_cov(1.0, 0, 1.0) - 2.0 * (1.0 - 1.0 / e)).abs() < 1e-15);
        assert!((pdbou_diff_cov(1.0, 0, 1.0) - 1.264241).abs() < 1e-6);
        assert!((pdbou_diff_cov(1.0, 1, 1.0) + 0.399576).abs() < 1e-6);
        assert!((pdbou_diff_cov(60.0, 0, 1.5) - 3.0).abs() < 1e-12);
        for tau in [0.2, 1.0, 5.0] {
            assert!(pdbou_diff_cov(tau, 0, 1.0) > 0.0);
            for k in 1..5 {
                assert!(pdbou_diff_cov(tau, k, 1.0) < 0.0);
            }
        }
        assert!((pdbou_time_cap(1.0, 1.0) - 1.2469).abs() < 1e-4);
    }

    #[test]
    fn time_grid_shape() {
        let g = ou_time_grid(1.0, 5.0, 9).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[8], 5.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(ou_time_grid(1.0, 1.0, 9).is_ok());
    }

    #[test]
    fn ou_identity_small() {
        let grid = ou_time_grid(1.0, 6.0, 17).unwrap();
        let r = ou_variance_identity_check(2, 1, 1.0, &grid, 40_000, 11).unwrap();
        assert!(r.z <= 3.0, "{:#}", r.to_json());
        assert!(ou_variance_identity_check(2, 1, 1.0, &[0.0, 1.0], 10, 1).is_err());
    }

    #[test]
    fn pdbr_identity_and_ladder_small() {
        let p = entries_partition(2).unwrap();
        let ens = Ensemble::goe(2);
        let (r, ladder) = pdbr_identity_and_ladder(&ens, &p, 1, 50_000, 12).unwrap();
        assert!(r.z <= 3.0, "{:#}", r.to_json());
        assert!(ladder.holds(), "{:?}", ladder.violations);
        assert!(matches!(
            pdbr_variance_identity_check(&Ensemble::goe(4), &entries_partition(4).unwrap(), 1, 10, 1),
            Err(Error::EnumerationTooLarge { m: 10, .. })
        ));
    }

    #[test]
    fn diff_cov_mc_and_precondition() {
        let p = entries_partition(2).unwrap();
        let prof = VarianceProfile::goe(2).unwrap();
        let b = p.block_of(0, 1);
        let k = RingCounts::new(&p, vec![1, 2, 0]).unwrap();
        let r = pdbou_diff_cov_mc(&p, &prof, 1.0, &k, b, (0, 1), 50_000, 3).unwrap();
        assert!(r.z <= 4.0, "{:#}", r.to_json());
        assert!(pdbou_diff_cov_mc(&p, &prof, 1.0, &k, b, (0, 0), 10, 3).is_err());
    }

    #[test]
    fn t_plus_at_time_zero() {
        let p = entries_partition(3).unwrap();
        let r = t_plus_minus(&p, 1, 1.0, 1.0, 0.0, 2_000, 0, 0, 5).unwrap();
        assert_eq!(r.t_minus.mean, 0.0);
        let exact = 4.0 * (1.0 - (-1.0f64).exp());
        assert!((r.t_plus.mean - exact).abs() < 1e-12, "{:?}", r.t_plus);
        assert_eq!(r.dominance, Some(true));
    }

    #[test]
    fn overlap_curve_starts_at_one() {
        let c = ou_overlap_monotonicity(8, 1, 1.0, &[0.0, 0.1, 0.5], 500, 4).unwrap();
        assert_eq!(c.overlap[0].mean, 1.0);
        assert_eq!(c.overlap[0].std_error, 0.0);
    }
}
