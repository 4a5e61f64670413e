//! Fast self-check bundle: finite-difference derivative checks, eigensolver
//! reconstruction, closed-form block-difference covariances and classical
//! position residuals.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::dynamics::RingCounts;
use crate::eigen::{eigenvalue, eigh};
use crate::ensemble::{sample_goe, VarianceProfile};
use crate::error::Result;
use crate::identities::pdbou_diff_cov_mc;
use crate::matrix::SymmetricMatrix;
use crate::partition::entries_partition;
use crate::rng::SeedStream;
use crate::spectral::{directional_second_derivative, eig_grad, eig_hess, semicircle_cdf, classical_position, HessianFn};

pub const GRAD_STEP: f64 = 1e-6;
pub const GRAD_REL_TOL: f64 = 1e-5;
pub const HESS_STEP: f64 = 1e-4;
pub const HESS_REL_TOL: f64 = 1e-3;
/// Smallest eigenvalue gap of draws admitted to the derivative checks.
pub const MIN_GAP: f64 = 0.1;
/// Denominator floor of the relative errors, in units of the largest
/// magnitude compared in the same draw.
pub const REL_FLOOR: f64 = 1e-2;

/// Worst relative errors of the derivative formulas against central
/// differences over a batch of gap-guarded GOE draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub n: usize,
    pub draws: usize,
    /// Candidate draws discarded by the gap guard.
    pub rejected: usize,
    pub max_grad_rel: f64,
    pub max_hess_rel: f64,
}

impl DerivativeCheck {
    pub fn grad_ok(&self) -> bool {
        self.max_grad_rel <= GRAD_REL_TOL
    }

    pub fn hess_ok(&self) -> bool {
        self.max_hess_rel <= HESS_REL_TOL
    }
}

fn rel_err(approx: f64, exact: f64, scale: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(REL_FLOOR * scale)
}

/// Gradient entries at every unordered position and the second derivative
/// along one random GOE direction, for every rank of `draws` GOE draws.
///
/// The symmetric perturbation `e_i e_jᵀ + e_j e_iᵀ` moves both ordered
/// entries, so it is compared with `∂_ij + ∂_ji`.
pub fn derivative_check(n: usize, draws: usize, seed: u64, hess: HessianFn) -> Result<DerivativeCheck> {
    let mut rng = SeedStream::new(seed, 0).rng();
    let mut out = DerivativeCheck { n, draws, rejected: 0, max_grad_rel: 0.0, max_hess_rel: 0.0 };
    let mut accepted = 0;
    while accepted < draws {
        let x = sample_goe(n, &mut rng);
        let spec = eigh(&x)?;
        if spec.min_gap() < MIN_GAP {
            out.rejected += 1;
            continue;
        }
        accepted += 1;
        let dir = sample_goe(n, &mut rng);
        let mut fd_hess = Vec::with_capacity(n);
        let mut formula_hess = Vec::with_capacity(n);
        for alpha in 1..=n {
            let grad = eig_grad(&spec, alpha)?;
            let mut exact = Vec::new();
            let mut approx = Vec::new();
            for i in 0..n {
                for j in i..n {
                    let mut e = SymmetricMatrix::zeros(n);
                    e.set(i, j, if i == j { 2.0 } else { 1.0 });
                    let plus = eigenvalue(&x.lincomb(1.0, &e, GRAD_STEP)?, alpha)?;
                    let minus = eigenvalue(&x.lincomb(1.0, &e, -GRAD_STEP)?, alpha)?;
                    approx.push((plus - minus) / (2.0 * GRAD_STEP));
                    exact.push(grad.get(i, j) + grad.get(j, i));
                }
            }
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, e) in approx.iter().zip(&exact) {
                out.max_grad_rel = out.max_grad_rel.max(rel_err(*a, *e, scale));
            }

            let plus = eigenvalue(&x.lincomb(1.0, &dir, HESS_STEP)?, alpha)?;
            let minus = eigenvalue(&x.lincomb(1.0, &dir, -HESS_STEP)?, alpha)?;
            let mid = eigenvalue(&x, alpha)?;
            fd_hess.push((plus - 2.0 * mid + minus) / (HESS_STEP * HESS_STEP));
            formula_hess.push(directional_second_derivative(&spec, alpha, &dir, hess)?);
        }
        let scale = formula_hess.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, e) in fd_hess.iter().zip(&formula_hess) {
            out.max_hess_rel = out.max_hess_rel.max(rel_err(*a, *e, scale));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub items: Vec<OracleItem>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OracleItem> {
        self.items.iter().filter(|i| !i.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.items.push(OracleItem { name: name.into(), passed, detail: detail.into() });
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.items {
            writeln!(f, "[{}] {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail)?;
        }
        Ok(())
    }
}

/// Derivative draws and Monte Carlo trials used by [`oracle_suite`].
pub const SUITE_DRAWS: usize = 100;
pub const SUITE_COV_TRIALS: u64 = 40_000;

pub fn oracle_suite(seed: u64) -> Result<OracleReport> {
    oracle_suite_with(seed, eig_hess)
}

/// The suite with a replaceable Hessian evaluator.
pub fn oracle_suite_with(seed: u64, hess: HessianFn) -> Result<OracleReport> {
    let mut report = OracleReport::default();

    let d = derivative_check(8, SUITE_DRAWS, seed, hess)?;
    report.push(
        "gradient finite differences (n=8)",
        d.grad_ok(),
        format!("max rel err {:.2e} <= {GRAD_REL_TOL:e} over {} draws", d.max_grad_rel, d.draws),
    );
    report.push(
        "hessian finite differences (n=8)",
        d.hess_ok(),
        format!("max rel err {:.2e} <= {HESS_REL_TOL:e} over {} draws", d.max_hess_rel, d.draws),
    );

    let mut rng = SeedStream::new(seed, 1).rng();
    for n in [2usize, 5, 32] {
        let x = sample_goe(n, &mut rng);
        let s = eigh(&x)?;
        let r = s.residuals(&x);
        let bound = 1e-9 * (1.0 + x.frobenius_norm());
        report.push(
            format!("eigh reconstruction (n={n})"),
            r.orthonormality <= 1e-10 && r.reconstruction <= bound,
            format!("orthonormality {:.2e}, reconstruction {:.2e} (bound {bound:.2e})", r.orthonormality, r.reconstruction),
        );
    }

    let p = entries_partition(2)?;
    let profile = VarianceProfile::goe(2)?;
    let block = p.block_of(0, 1);
    let mut worst = 0.0f64;
    for k_b in 0..3u32 {
        let mut counts = vec![0; p.m()];
        counts[block] = k_b;
        for other in (0..p.m()).filter(|&b| b != block) {
            counts[other] = rng.random_range(0..3);
        }
        let k = RingCounts::new(&p, counts)?;
        let r = pdbou_diff_cov_mc(&p, &profile, 1.0, &k, block, (0, 1), SUITE_COV_TRIALS, seed.wrapping_add(k_b as u64))?;
        worst = worst.max(r.z);
    }
    report.push(
        "block-difference covariance closed form",
        worst <= 4.0,
        format!("max z {worst:.2} <= 4 for K_B in 0..3, tau = 1"),
    );

    let n = 100;
    let mut resid = 0.0f64;
    for beta in 1..=n {
        let g = classical_position(n, beta)?;
        resid = resid.max((n as f64 * (1.0 - semicircle_cdf(g)) - beta as f64).abs());
    }
    report.push("classical positions (n=100)", resid <= 1e-8, format!("max |n(1-F(gamma)) - beta| = {resid:.2e}"));
    Ok(report)
}
