//! Symmetric eigendecomposition with descending order and a fixed sign
//! convention.

use nalgebra::{SymmetricEigen, SymmetricTridiagonal};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Eigenvalues `λ_1 ≥ … ≥ λ_n` and orthonormal eigenvectors of one matrix.
///
/// Eigenvectors are stored column-major: `vector(α)` is a contiguous slice.
/// Each eigenvector has its largest-magnitude component positive, ties going
/// to the lowest index. Ranks `α` are 1-based throughout the public API.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    n: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

/// Orthonormality and reconstruction errors of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumResiduals {
    /// `‖VᵀV − I‖_max`
    pub orthonormality: f64,
    /// `‖V diag(λ) Vᵀ − X‖_F`
    pub reconstruction: f64,
}

fn max_iterations(n: usize) -> usize {
    (60 * n).max(100)
}

/// Full decomposition; fails with [`Error::NoConvergence`] instead of
/// returning unconverged output.
pub fn eigh(x: &SymmetricMatrix) -> Result<Spectrum> {
    let n = x.dim();
    let eig = SymmetricEigen::try_new(x.to_nalgebra(), f64::EPSILON, max_iterations(n))
        .ok_or(Error::NoConvergence { n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if !lambda.is_finite() {
            return Err(Error::NoConvergence { n });
        }
        values.push(lambda);
        let col = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.extend(col.iter().map(|v| sign * v));
    }
    Ok(Spectrum { n, values, vectors })
}

/// Eigenvalues only, descending.
///
/// Householder tridiagonalization followed by implicit-shift QL sweeps,
/// roughly three times cheaper than [`eigh`] for large `n`.
pub fn eigvalsh(x: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = x.dim();
    if n == 1 {
        return Ok(vec![x.get(0, 0)]);
    }
    let tri = SymmetricTridiagonal::new(x.to_nalgebra());
    let mut d: Vec<f64> = tri.diagonal().iter().copied().collect();
    let mut e: Vec<f64> = tri.off_diagonal().iter().copied().collect();
    e.push(0.0);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// `λ_α` (1-based rank) without eigenvectors.
pub fn eigenvalue(x: &SymmetricMatrix, alpha: usize) -> Result<f64> {
    check_rank(alpha, x.dim())?;
    Ok(eigvalsh(x)?[alpha - 1])
}

/// `max_α |λ_α|`.
pub fn operator_norm(x: &SymmetricMatrix) -> Result<f64> {
    let vals = eigvalsh(x)?;
    Ok(vals[0].abs().max(vals[vals.len() - 1].abs()))
}

pub(crate) fn check_rank(alpha: usize, n: usize) -> Result<()> {
    if alpha == 0 || alpha > n {
        return Err(Error::invalid(format!("rank {alpha} outside 1..={n}")));
    }
    Ok(())
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[0..n-1]` (`e[n-1]` is scratch). Eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence { n });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NoConvergence { n })
    }
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `λ_α`, 1-based.
    #[inline]
    pub fn value(&self, alpha: usize) -> f64 {
        self.values[alpha - 1]
    }

    /// `v_α`, 1-based.
    #[inline]
    pub fn vector(&self, alpha: usize) -> &[f64] {
        &self.vectors[(alpha - 1) * self.n..alpha * self.n]
    }

    pub fn check_rank(&self, alpha: usize) -> Result<()> {
        check_rank(alpha, self.n)
    }

    /// `max_α |λ_α|`.
    pub fn operator_norm(&self) -> f64 {
        self.values[0].abs().max(self.values[self.n - 1].abs())
    }

    /// Measures how far this decomposition is from exact for `x`.
    pub fn residuals(&self, x: &SymmetricMatrix) -> SpectrumResiduals {
        let n = self.n;
        let mut orth = 0.0f64;
        for a in 1..=n {
            for b in a..=n {
                let dot: f64 = self.vector(a).iter().zip(self.vector(b)).map(|(p, q)| p * q).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                orth = orth.max((dot - target).abs());
            }
        }
        let mut recon = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (1..=n).map(|a| self.value(a) * self.vector(a)[i] * self.vector(a)[j]).sum();
                recon += (r - x.get(i, j)).powi(2);
            }
        }
        SpectrumResiduals { orthonormality: orth, reconstruction: recon.sqrt() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample_goe;
    use crate::rng::SeedStream;

    #[test]
    fn two_by_two_swap() {
        let x = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = eigh(&x).unwrap();
        assert!((s.value(1) - 1.0).abs() < 1e-15 && (s.value(2) + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.vector(1)[0] - h).abs() < 1e-15 && (s.vector(1)[1] - h).abs() < 1e-15);
        // tie in magnitude: lowest index carries the positive sign
        assert!(s.vector(2)[0] > 0.0);
    }

    #[test]
    fn diagonal_input() {
        let s = eigh(&SymmetricMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(s.values(), &[3.0, 1.0]);
        assert_eq!(s.vector(1), &[0.0, 1.0]);
        assert_eq!(s.vector(2), &[1.0, 0.0]);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for (seed, n) in [(1, 5), (2, 32), (3, 1), (4, 2)] {
            let x = sample_goe(n, &mut SeedStream::new(seed, 0).rng());
            let s = eigh(&x).unwrap();
            let r = s.residuals(&x);
            assert!(r.orthonormality <= 1e-10, "{r:?}");
            assert!(r.reconstruction <= 1e-10 * x.frobenius_norm().max(1.0), "{r:?}");
            assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvalues_only_agree_with_full() {
        for n in [1, 2, 3, 17, 64] {
            let x = sample_goe(n, &mut SeedStream::new(9, n as u64).rng());
            let full = eigh(&x).unwrap();
            let vals = eigvalsh(&x).unwrap();
            for (a, b) in full.values().iter().zip(&vals) {
                assert!((a - b).abs() <= 1e-11 * (1.0 + full.operator_norm()), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&SymmetricMatrix::from_diagonal(&[3.0, -5.0])).unwrap(), 5.0);
        assert_eq!(operator_norm(&SymmetricMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn goe_operator_norm_near_edge() {
        let n = 256;
        let hits = (0..200)
            .filter(|&t| {
                let x = sample_goe(n, &mut SeedStream::new(11, t).rng());
                let r = operator_norm(&x).unwrap() / (n as f64).sqrt();
                (1.8..=2.3).contains(&r)
            })
            .count();
        assert!(hits >= 198, "{hits}");
    }
}
