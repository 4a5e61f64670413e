//! Resampling paths `X(s) = (1 − s)X + sY` and grid-based statistics along
//! them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eigen::{eigh, eigvalsh, Spectrum};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::spectral::{max_coordinate, spacing_stats, SpacingStats};

/// Strictly increasing points `0 = s_1 < … < s_q = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    points: Vec<f64>,
}

impl PathGrid {
    /// `q` equally spaced points, `q ≥ 2`.
    pub fn uniform(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("path grid needs q >= 2, got {q}")));
        }
        let mut points: Vec<f64> = (0..q).map(|k| k as f64 / (q - 1) as f64).collect();
        points[q - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let ok = points.len() >= 2
            && points[0] == 0.0
            && points[points.len() - 1] == 1.0
            && points.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::invalid("path grid must increase strictly from 0 to 1"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for PathGrid {
    fn default() -> Self {
        Self::uniform(101).expect("q >= 2")
    }
}

/// `X(s)`; the endpoints return copies of `x` and `y` exactly.
pub fn path_point(x: &SymmetricMatrix, y: &SymmetricMatrix, s: f64) -> Result<SymmetricMatrix> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("path parameter s = {s} outside [0, 1]")));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    if s == 0.0 {
        return Ok(x.clone());
    }
    if s == 1.0 {
        return Ok(y.clone());
    }
    x.lincomb(1.0 - s, y, s)
}

/// One grid point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub lambda_alpha: f64,
    pub delta_alpha: f64,
    pub s_alpha: f64,
    pub m_infty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSweep {
    pub alpha: usize,
    pub rows: Vec<SweepRow>,
}

impl PathSweep {
    pub fn sup_m(&self) -> f64 {
        self.rows.iter().map(|r| r.m_infty).fold(0.0, f64::max)
    }

    pub fn sup_s_alpha(&self) -> f64 {
        self.rows.iter().map(|r| r.s_alpha).fold(0.0, f64::max)
    }

    pub fn inf_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta_alpha).fold(f64::INFINITY, f64::min)
    }

    /// `sup_s S_α(X(s))·M(X(s))⁴` over the grid.
    pub fn sup_s_m4(&self) -> f64 {
        self.rows.iter().map(|r| r.s_alpha * r.m_infty.powi(4)).fold(0.0, f64::max)
    }

    /// CSV with columns `s,lambda_alpha,delta_alpha,s_alpha,m_infty`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,lambda_alpha,delta_alpha,s_alpha,m_infty\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.s, r.lambda_alpha, r.delta_alpha, r.s_alpha, r.m_infty);
        }
        out
    }
}

fn at_point<T>(s: f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| match e {
        e @ Error::NearDegenerate { .. } => Error::DegenerateAlongPath { s, source: Box::new(e) },
        e => e,
    })
}

/// `λ_α`, `Δ_α`, `S_α` and `M` at every grid point. Eigenvalues are
/// labelled by rank, so a crossing shows up as a near-degenerate error at
/// the offending `s`.
pub fn path_spectrum_sweep(x: &SymmetricMatrix, y: &SymmetricMatrix, grid: &PathGrid, alpha: usize) -> Result<PathSweep> {
    let mut rows = Vec::with_capacity(grid.len());
    for &s in grid.points() {
        let xs = path_point(x, y, s)?;
        let spec = eigh(&xs)?;
        let SpacingStats { s_alpha, m_infty, delta_alpha } = at_point(s, || spacing_stats(&spec, alpha))?;
        rows.push(SweepRow { s, lambda_alpha: spec.value(alpha), delta_alpha, s_alpha, m_infty });
    }
    Ok(PathSweep { alpha, rows })
}

/// `sup_s M(X(s))` over the grid.
pub fn path_sup_m(x: &SymmetricMatrix, y: &SymmetricMatrix, grid: &PathGrid) -> Result<f64> {
    let mut best = 0.0f64;
    for &s in grid.points() {
        best = best.max(max_coordinate(&eigh(&path_point(x, y, s)?)?));
    }
    Ok(best)
}

/// `inf_s Δ_α(X(s))` over the grid, from eigenvalues only.
pub fn path_min_gap(x: &SymmetricMatrix, y: &SymmetricMatrix, grid: &PathGrid, alpha: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &s in grid.points() {
        let vals = eigvalsh(&path_point(x, y, s)?)?;
        let a = alpha - 1;
        let above = if a > 0 { vals[a - 1] - vals[a] } else { f64::INFINITY };
        let below = if a + 1 < vals.len() { vals[a] - vals[a + 1] } else { f64::INFINITY };
        best = best.min(above.min(below));
    }
    Ok(best)
}

/// First- and second-order Taylor residuals of `λ_α` along a path against
/// their `M`/`S_α` envelopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub alpha: usize,
    /// `|λ_α(Y) − λ_α(X)|`
    pub lhs0: f64,
    /// `ν‖Y − X‖_ℓ∞ · sup_s M(X(s))²`
    pub bound0: f64,
    /// `|λ_α(Y) − λ_α(X) − F'_α(0)|`
    pub lhs1: f64,
    /// `ν²‖Y − X‖²_ℓ∞ · sup_s S_α(X(s)) M(X(s))⁴`
    pub bound1: f64,
}

impl TaylorReport {
    pub fn holds(&self) -> bool {
        self.lhs0 <= self.bound0 && self.lhs1 <= self.bound1
    }
}

/// `F'_α(0) = ⟨v_α v_αᵀ, Y − X⟩` at `X`.
pub fn path_derivative_at_start(spec_x: &Spectrum, diff: &SymmetricMatrix, alpha: usize) -> f64 {
    let v = spec_x.vector(alpha);
    let n = diff.dim();
    (0..n).map(|i| v[i] * diff.row(i).iter().zip(v).map(|(d, w)| d * w).sum::<f64>()).sum()
}

pub fn taylor_residual(
    x: &SymmetricMatrix,
    y: &SymmetricMatrix,
    alpha: usize,
    nu_b: usize,
    grid: &PathGrid,
) -> Result<TaylorReport> {
    let sweep = path_spectrum_sweep(x, y, grid, alpha)?;
    let diff = y.sub(x)?;
    let sx = eigh(x)?;
    let l0 = sweep.rows[0].lambda_alpha;
    let l1 = sweep.rows[sweep.rows.len() - 1].lambda_alpha;
    let d0 = path_derivative_at_start(&sx, &diff, alpha);
    let linf = diff.max_abs();
    let nu = nu_b as f64;
    Ok(TaylorReport {
        alpha,
        lhs0: (l1 - l0).abs(),
        bound0: nu * linf * sweep.sup_m().powi(2),
        lhs1: (l1 - l0 - d0).abs(),
        bound1: nu * nu * linf * linf * sweep.sup_s_m4(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::block_resample;
    use crate::ensemble::sample_goe;
    use crate::partition::entries_partition;
    use crate::rng::SeedStream;

    #[test]
    fn endpoints_and_midpoint() {
        let x = SymmetricMatrix::from_diagonal(&[2.0, 0.0]);
        let y = SymmetricMatrix::from_diagonal(&[0.0, 2.0]);
        assert_eq!(path_point(&x, &y, 0.0).unwrap(), x);
        assert_eq!(path_point(&x, &y, 1.0).unwrap(), y);
        assert_eq!(path_point(&x, &y, 0.5).unwrap(), SymmetricMatrix::identity(2));
        assert!(path_point(&x, &y, 1.5).is_err());
    }

    #[test]
    fn constant_path_sweep_and_csv() {
        let x = sample_goe(4, &mut SeedStream::new(1, 0).rng());
        let sweep = path_spectrum_sweep(&x, &x, &PathGrid::uniform(5).unwrap(), 2).unwrap();
        assert!(sweep.rows.windows(2).all(|w| w[0].lambda_alpha == w[1].lambda_alpha && w[0].s_alpha == w[1].s_alpha));
        let csv = sweep.to_csv();
        assert!(csv.starts_with("s,lambda_alpha,delta_alpha,s_alpha,m_infty\n"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn crossing_is_reported_with_location() {
        let x = SymmetricMatrix::from_diagonal(&[2.0, 1.0]);
        let y = SymmetricMatrix::from_diagonal(&[1.0, 2.0]);
        match path_spectrum_sweep(&x, &y, &PathGrid::uniform(3).unwrap(), 1) {
            Err(Error::DegenerateAlongPath { s, .. }) => assert_eq!(s, 0.5),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn two_by_two_taylor_residual() {
        let x = SymmetricMatrix::from_diagonal(&[2.0, 1.0]);
        let mut y = x.clone();
        y.set(0, 1, 0.1);
        let r = taylor_residual(&x, &y, 1, 2, &PathGrid::default()).unwrap();
        let expected = (3.0 + 1.04f64.sqrt()) / 2.0 - 2.0;
        assert!((r.lhs1 - expected).abs() < 1e-14 && (r.lhs0 - expected).abs() < 1e-14);
        assert!(r.holds());
        let same = taylor_residual(&x, &x, 1, 2, &PathGrid::uniform(3).unwrap()).unwrap();
        assert_eq!((same.lhs0, same.lhs1), (0.0, 0.0));
    }

    #[test]
    fn one_block_paths_stay_simple_and_respect_envelopes() {
        let n = 32;
        let p = entries_partition(n).unwrap();
        let grid = PathGrid::uniform(101).unwrap();
        for t in 0..100 {
            let mut rng = SeedStream::new(2, t).rng();
            let x = sample_goe(n, &mut rng);
            let y = sample_goe(n, &mut rng);
            let a = crate::partition::sample_union(&p, 1, &mut rng).unwrap();
            let xa = block_resample(&x, &y, &a).unwrap();
            let r = taylor_residual(&x, &xa, 1, p.nu(), &grid).unwrap();
            assert!(r.holds(), "trial {t}: {r:?}");
        }
    }
}
