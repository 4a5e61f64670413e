//! Spectral statistics: overlaps, eigenvalue derivatives, spacings,
//! delocalization, the resolvent diagonal, and semicircle quantiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::{check_rank, eigh, Spectrum};
use crate::error::{Error, Result};
use crate::matrix::{Position, SymmetricMatrix};

/// `α̂ = min(α, n + 1 − α)`.
pub fn hat_index(alpha: usize, n: usize) -> Result<usize> {
    check_rank(alpha, n)?;
    Ok(alpha.min(n + 1 - alpha))
}

/// Constants of the edge/bulk factor `F(n, α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FConstants {
    pub a1: f64,
    pub a2: f64,
}

impl Default for FConstants {
    fn default() -> Self {
        Self { a1: 1.0, a2: 1.01 }
    }
}

/// `A1` when `α̂ = 1`, else `(log n)^{A2 log log n}`.
pub fn f_factor(n: usize, alpha: usize, c: FConstants) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!("F(n, alpha) needs n >= 3, got {n}")));
    }
    if !(c.a1 > 0.0) || !(c.a2 > 1.0) {
        return Err(Error::invalid(format!("need A1 > 0 and A2 > 1, got {c:?}")));
    }
    if hat_index(alpha, n)? == 1 {
        return Ok(c.a1);
    }
    let ln = (n as f64).ln();
    Ok(ln.powf(c.a2 * ln.ln()))
}

/// Default degeneracy tolerance `1e-10·(1 + ‖X‖)`.
pub fn gap_tol(norm: f64) -> f64 {
    1e-10 * (1.0 + norm)
}

impl Spectrum {
    /// `Δ_α`: distance from `λ_α` to its nearest neighbour (`+∞` when `n = 1`).
    pub fn gap(&self, alpha: usize) -> f64 {
        let n = self.dim();
        let above = if alpha > 1 { self.value(alpha - 1) - self.value(alpha) } else { f64::INFINITY };
        let below = if alpha < n { self.value(alpha) - self.value(alpha + 1) } else { f64::INFINITY };
        above.min(below)
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values().windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    /// Fails with [`Error::NearDegenerate`] when `Δ_α < 1e-10·(1 + ‖X‖)`.
    pub fn ensure_simple(&self, alpha: usize) -> Result<()> {
        self.check_rank(alpha)?;
        let tol = gap_tol(self.operator_norm());
        let gap = self.gap(alpha);
        if gap < tol {
            return Err(Error::NearDegenerate { alpha, gap, tol });
        }
        Ok(())
    }

    /// Fails when any two eigenvalues are closer than the tolerance.
    pub fn ensure_all_simple(&self) -> Result<()> {
        let tol = gap_tol(self.operator_norm());
        for alpha in 1..self.dim() {
            let gap = self.value(alpha) - self.value(alpha + 1);
            if gap < tol {
                return Err(Error::NearDegenerate { alpha, gap, tol });
            }
        }
        Ok(())
    }
}

/// `⟨u, w⟩²` for equal-length vectors.
#[inline]
pub fn squared_inner(u: &[f64], w: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    d * d
}

/// `⟨v_α(X), v_α(Y)⟩²` from precomputed spectra, gap-guarded on both sides.
pub fn overlap_sq_spectra(x: &Spectrum, y: &Spectrum, alpha: usize) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    x.ensure_simple(alpha)?;
    y.ensure_simple(alpha)?;
    Ok(squared_inner(x.vector(alpha), y.vector(alpha)).min(1.0))
}

pub fn overlap_sq(x: &SymmetricMatrix, y: &SymmetricMatrix, alpha: usize) -> Result<f64> {
    overlap_sq_spectra(&eigh(x)?, &eigh(y)?, alpha)
}

/// `∂λ_α/∂X = v_α v_αᵀ`, one entry per ordered position.
pub fn eig_grad(spec: &Spectrum, alpha: usize) -> Result<SymmetricMatrix> {
    spec.ensure_simple(alpha)?;
    let v = spec.vector(alpha);
    Ok(SymmetricMatrix::from_upper_fn(spec.dim(), |i, j| v[i] * v[j]))
}

/// `((λ_α I − X)^+)_{ij} = Σ_{β≠α} (v_β)_i (v_β)_j / (λ_α − λ_β)`.
pub fn pseudo_inverse_entry(spec: &Spectrum, alpha: usize, i: usize, j: usize) -> f64 {
    let la = spec.value(alpha);
    (1..=spec.dim())
        .filter(|&b| b != alpha)
        .map(|b| spec.vector(b)[i] * spec.vector(b)[j] / (la - spec.value(b)))
        .sum()
}

/// `∂_ij ∂_ab λ_α = P_ja v_i v_b + P_bi v_j v_a` with `P = (λ_α I − X)^+`.
pub fn eig_hess(spec: &Spectrum, alpha: usize, ij: Position, ab: Position) -> Result<f64> {
    spec.ensure_all_simple()?;
    spec.check_rank(alpha)?;
    let ((i, j), (a, b)) = (ij, ab);
    let n = spec.dim();
    if [i, j, a, b].iter().any(|&k| k >= n) {
        return Err(Error::invalid(format!("position outside {n}x{n}")));
    }
    let v = spec.vector(alpha);
    Ok(pseudo_inverse_entry(spec, alpha, j, a) * v[i] * v[b] + pseudo_inverse_entry(spec, alpha, b, i) * v[j] * v[a])
}

/// Signature of a Hessian-entry evaluator, for swapping in alternatives.
pub type HessianFn = fn(&Spectrum, usize, Position, Position) -> Result<f64>;

/// The pseudoinverse `P` and eigenvector `v_α` assembled once, for many
/// Hessian evaluations at the same point.
#[derive(Clone, Debug)]
pub struct EigenHessian {
    n: usize,
    v: Vec<f64>,
    p: Vec<f64>,
}

impl EigenHessian {
    pub fn new(spec: &Spectrum, alpha: usize) -> Result<Self> {
        spec.ensure_all_simple()?;
        spec.check_rank(alpha)?;
        let n = spec.dim();
        let mut p = vec![0.0; n * n];
        let la = spec.value(alpha);
        for b in (1..=n).filter(|&b| b != alpha) {
            let w = spec.vector(b);
            let c = 1.0 / (la - spec.value(b));
            for i in 0..n {
                let ci = c * w[i];
                for j in 0..n {
                    p[i * n + j] += ci * w[j];
                }
            }
        }
        Ok(Self { n, v: spec.vector(alpha).to_vec(), p })
    }

    pub fn entry(&self, (i, j): Position, (a, b): Position) -> f64 {
        let n = self.n;
        self.p[j * n + a] * self.v[i] * self.v[b] + self.p[b * n + i] * self.v[j] * self.v[a]
    }

    /// `d²/dt² λ_α(X + tD)` at `t = 0`, equal to `2 vᵀ D P D v`.
    pub fn directional(&self, d: &SymmetricMatrix) -> f64 {
        let n = self.n;
        let dv: Vec<f64> = (0..n).map(|i| d.row(i).iter().zip(&self.v).map(|(a, b)| a * b).sum()).collect();
        let mut acc = 0.0;
        for i in 0..n {
            let pdv: f64 = (0..n).map(|j| self.p[i * n + j] * dv[j]).sum();
            acc += dv[i] * pdv;
        }
        2.0 * acc
    }
}

/// `Σ_{(i,j),(a,b)} D_ij D_ab ∂_ij ∂_ab λ_α` over all ordered positions,
/// through an arbitrary Hessian evaluator.
pub fn directional_second_derivative(spec: &Spectrum, alpha: usize, d: &SymmetricMatrix, hess: HessianFn) -> Result<f64> {
    let n = spec.dim();
    let support: Vec<Position> = (0..n * n).map(|k| (k / n, k % n)).filter(|&(i, j)| d.get(i, j) != 0.0).collect();
    let mut acc = 0.0;
    for &ij in &support {
        for &ab in &support {
            acc += d.get(ij.0, ij.1) * d.get(ab.0, ab.1) * hess(spec, alpha, ij, ab)?;
        }
    }
    Ok(acc)
}

/// `S_α`, `M` and `Δ_α` of one matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    /// `Σ_{β≠α} 1/|λ_α − λ_β|`
    pub s_alpha: f64,
    /// `max_β ‖v_β‖_∞`
    pub m_infty: f64,
    /// Nearest-neighbour gap of `λ_α`.
    pub delta_alpha: f64,
}

/// `max_β ‖v_β‖_∞`.
pub fn max_coordinate(spec: &Spectrum) -> f64 {
    (1..=spec.dim()).flat_map(|b| spec.vector(b).iter()).fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Spacing statistics at rank `α`; repeated eigenvalues are an error since
/// `S_α` would be infinite.
pub fn spacing_stats(spec: &Spectrum, alpha: usize) -> Result<SpacingStats> {
    spec.ensure_all_simple()?;
    spec.check_rank(alpha)?;
    let la = spec.value(alpha);
    let s_alpha = (1..=spec.dim()).filter(|&b| b != alpha).map(|b| 1.0 / (la - spec.value(b)).abs()).sum();
    Ok(SpacingStats { s_alpha, m_infty: max_coordinate(spec), delta_alpha: spec.gap(alpha) })
}

/// `max_{w ∈ grid} max_i |((X/√n − (w + iη))^{-1})_ii|` with `w_grid`
/// equally spaced points on `[−c, c]`.
pub fn resolvent_diag_max(x: &SymmetricMatrix, c: f64, eta: f64, w_grid: usize) -> Result<f64> {
    let spec = eigh(x)?;
    resolvent_diag_max_spectrum(&spec, c, eta, w_grid)
}

pub fn resolvent_diag_max_spectrum(spec: &Spectrum, c: f64, eta: f64, w_grid: usize) -> Result<f64> {
    if !(eta > 0.0) || w_grid < 2 || !(c >= 0.0) {
        return Err(Error::invalid(format!("need eta > 0, c >= 0, w_grid >= 2 (got {eta}, {c}, {w_grid})")));
    }
    let n = spec.dim();
    let scale = (n as f64).sqrt();
    let lam: Vec<f64> = spec.values().iter().map(|l| l / scale).collect();
    let weights: Vec<Vec<f64>> = (0..n).map(|i| (1..=n).map(|b| spec.vector(b)[i].powi(2)).collect()).collect();
    let eta2 = eta * eta;
    let mut best = 0.0f64;
    for g in 0..w_grid {
        let w = -c + 2.0 * c * g as f64 / (w_grid - 1) as f64;
        let denom: Vec<f64> = lam.iter().map(|l| (l - w).powi(2) + eta2).collect();
        for wi in &weights {
            let (mut re, mut im) = (0.0, 0.0);
            for ((q, l), d) in wi.iter().zip(&lam).zip(&denom) {
                re += q * (l - w) / d;
                im += q * eta / d;
            }
            best = best.max(re.hypot(im));
        }
    }
    Ok(best)
}

/// Semicircle density `√(4 − x²)/(2π)` on `[−2, 2]`.
pub fn semicircle_density(x: f64) -> f64 {
    (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
}

/// Semicircle distribution function.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// `γ_β` solving `n ∫_{γ_β}^2 ϱ_sc = β`, by bisection.
pub fn classical_position(n: usize, beta: usize) -> Result<f64> {
    check_rank(beta, n)?;
    if beta == n {
        return Ok(-2.0);
    }
    let target = beta as f64 / n as f64;
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if 1.0 - semicircle_cdf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_lo = (1.0 - semicircle_cdf(lo) - target).abs();
    let r_hi = (1.0 - semicircle_cdf(hi) - target).abs();
    Ok(if r_lo < r_hi { lo } else { hi })
}
