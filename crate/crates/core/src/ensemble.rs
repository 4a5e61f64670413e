//! Variance profiles, entry laws and the random-matrix samplers built on them.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Entrywise variances `σ_ij²` of a symmetric random matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct VarianceProfile {
    n: usize,
    sigma2: Vec<f64>,
    #[serde(skip)]
    sigma: Vec<f64>,
    bounds: Option<(f64, f64)>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    n: usize,
    sigma2: Vec<Vec<f64>>,
    #[serde(default)]
    bounds: Option<(f64, f64)>,
    #[serde(default)]
    normalized: bool,
}

impl TryFrom<ProfileRepr> for VarianceProfile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        if r.sigma2.len() != r.n || r.sigma2.iter().any(|row| row.len() != r.n) {
            return Err(Error::InvalidProfile(format!("sigma2 must be {0}x{0}", r.n)));
        }
        VarianceProfile::new(r.n, r.sigma2.concat(), r.bounds, r.normalized)
    }
}

impl From<VarianceProfile> for ProfileRepr {
    fn from(p: VarianceProfile) -> Self {
        ProfileRepr {
            n: p.n,
            sigma2: p.sigma2.chunks(p.n).map(<[f64]>::to_vec).collect(),
            bounds: p.bounds,
            normalized: p.normalized,
        }
    }
}

impl VarianceProfile {
    /// Validated profile from a row-major `n × n` array.
    ///
    /// `bounds = Some((c1, c2))` requires `c1 ≤ σ_ij² ≤ c2` everywhere;
    /// `normalized` requires every row to sum to `n` within `1e-9·n`.
    pub fn new(n: usize, sigma2: Vec<f64>, bounds: Option<(f64, f64)>, normalized: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProfile("dimension must be positive".into()));
        }
        if sigma2.len() != n * n {
            return Err(Error::InvalidProfile(format!("expected {} variances, got {}", n * n, sigma2.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let s = sigma2[i * n + j];
                if !s.is_finite() || s < 0.0 {
                    return Err(Error::InvalidProfile(format!("sigma2[{i}][{j}] = {s} is not a variance")));
                }
                if s.to_bits() != sigma2[j * n + i].to_bits() {
                    return Err(Error::InvalidProfile(format!("sigma2 not symmetric at ({i}, {j})")));
                }
                if let Some((c1, c2)) = bounds {
                    if s < c1 || s > c2 {
                        return Err(Error::InvalidProfile(format!(
                            "sigma2[{i}][{j}] = {s} outside [{c1}, {c2}]"
                        )));
                    }
                }
            }
        }
        if normalized {
            for i in 0..n {
                let row: f64 = sigma2[i * n..(i + 1) * n].iter().sum();
                if (row - n as f64).abs() > 1e-9 * n as f64 {
                    return Err(Error::InvalidProfile(format!("row {i} sums to {row}, expected {n}")));
                }
            }
        }
        let sigma = sigma2.iter().map(|s| s.sqrt()).collect();
        Ok(Self { n, sigma2, sigma, bounds, normalized })
    }

    /// GOE variances: 2 on the diagonal, 1 off it.
    pub fn goe(n: usize) -> Result<Self> {
        let s = (0..n * n).map(|k| if k / n == k % n { 2.0 } else { 1.0 }).collect();
        Self::new(n, s, Some((1.0, 2.0)), false)
    }

    /// All-ones Wigner profile.
    pub fn wigner(n: usize) -> Result<Self> {
        Self::new(n, vec![1.0; n * n], Some((1.0, 1.0)), true)
    }

    /// `lo` where `i + j` is even, `hi` where it is odd. Rows sum to `n`
    /// when `n` is even and `lo + hi = 2`.
    pub fn checkerboard(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let s = (0..n * n).map(|k| if (k / n + k % n) % 2 == 0 { lo } else { hi }).collect();
        let normalized = n % 2 == 0 && (lo + hi - 2.0).abs() < 1e-12;
        Self::new(n, s, Some((lo.min(hi), lo.max(hi))), normalized)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn sigma2(&self, i: usize, j: usize) -> f64 {
        self.sigma2[i * self.n + j]
    }

    #[inline]
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n + j]
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch { expected: self.n, got: n });
        }
        Ok(())
    }
}

/// Mean-zero, unit-variance scalar law with a density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryLaw {
    Gaussian,
    /// Uniform on `[−√3, √3]`.
    UniformScaled,
    /// `½N(a, 1−a²) + ½N(−a, 1−a²)` with `0 ≤ a < 1`.
    SmoothedBimodal { a: f64 },
}

impl Default for EntryLaw {
    fn default() -> Self {
        EntryLaw::Gaussian
    }
}

impl EntryLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EntryLaw::SmoothedBimodal { a } if !(0.0..1.0).contains(&a) => {
                Err(Error::invalid(format!("bimodal shift a = {a} must lie in [0, 1)")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryLaw::Gaussian => StandardNormal.sample(rng),
            EntryLaw::UniformScaled => 3f64.sqrt() * rng.random_range(-1.0..1.0),
            EntryLaw::SmoothedBimodal { a } => {
                let z: f64 = StandardNormal.sample(rng);
                let shift = if rng.random::<bool>() { a } else { -a };
                shift + (1.0 - a * a).sqrt() * z
            }
        }
    }
}

/// A variance profile paired with an entry law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub profile: VarianceProfile,
    #[serde(default)]
    pub law: EntryLaw,
}

impl Ensemble {
    pub fn new(profile: VarianceProfile, law: EntryLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { profile, law })
    }

    pub fn goe(n: usize) -> Self {
        Self { profile: VarianceProfile::goe(n).expect("n >= 1"), law: EntryLaw::Gaussian }
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    /// Independent entries on and above the diagonal, `X_ij = σ_ij·ξ_ij`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SymmetricMatrix {
        let p = &self.profile;
        SymmetricMatrix::from_upper_fn(p.dim(), |i, j| p.sigma(i, j) * self.law.sample(rng))
    }

    /// One fresh entry at position `(i, j)`.
    #[inline]
    pub fn sample_entry<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> f64 {
        self.profile.sigma(i, j) * self.law.sample(rng)
    }
}

/// GOE draw: `N(0, 2)` diagonal, `N(0, 1)` off-diagonal.
pub fn sample_goe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymmetricMatrix {
    let sqrt2 = std::f64::consts::SQRT_2;
    SymmetricMatrix::from_upper_fn(n, |i, j| {
        let z: f64 = StandardNormal.sample(rng);
        if i == j {
            sqrt2 * z
        } else {
            z
        }
    })
}

pub fn sample_generalized_wigner<R: Rng + ?Sized>(
    profile: &VarianceProfile,
    law: &EntryLaw,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    law.validate()?;
    Ok(SymmetricMatrix::from_upper_fn(profile.dim(), |i, j| profile.sigma(i, j) * law.sample(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::stats::MCEstimate;

    #[test]
    fn goe_scalar_variance() {
        let mut rng = SeedStream::new(1, 0).rng();
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_goe(1, &mut rng).get(0, 0)).collect();
        let v = MCEstimate::variance_of(&xs);
        assert!((1.99..=2.01).contains(&v.mean), "{v:?}");
    }

    #[test]
    fn goe_offdiagonal_mean() {
        let mut rng = SeedStream::new(2, 0).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| sample_goe(50, &mut rng).get(0, 1)).collect();
        let m = MCEstimate::from_samples(&xs).mean;
        assert!(m.abs() <= 0.01, "{m}");
    }

    #[test]
    fn laws_have_unit_variance() {
        for law in [EntryLaw::Gaussian, EntryLaw::UniformScaled, EntryLaw::SmoothedBimodal { a: 0.9 }] {
            let mut rng = SeedStream::new(3, 0).rng();
            let xs: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
            let m = MCEstimate::from_samples(&xs);
            let v = MCEstimate::variance_of(&xs);
            assert!(m.mean.abs() <= 4.0 * m.std_error, "{law:?} mean {m:?}");
            assert!((v.mean - 1.0).abs() <= 4.0 * v.std_error, "{law:?} var {v:?}");
        }
    }

    #[test]
    fn checkerboard_entry_variances_match_profile() {
        let p = VarianceProfile::checkerboard(4, 0.5, 1.5).unwrap();
        assert!(p.is_normalized());
        let ens = Ensemble::new(p.clone(), EntryLaw::UniformScaled).unwrap();
        let mut rng = SeedStream::new(4, 0).rng();
        let draws: Vec<SymmetricMatrix> = (0..200_000).map(|_| ens.sample(&mut rng)).collect();
        for (i, j) in [(0, 0), (0, 1), (1, 3), (2, 2)] {
            let xs: Vec<f64> = draws.iter().map(|x| x.get(i, j)).collect();
            let v = MCEstimate::variance_of(&xs);
            assert!((v.mean - p.sigma2(i, j)).abs() <= 3.0 * v.std_error, "({i},{j}) {v:?}");
        }
    }

    #[test]
    fn profile_validation() {
        assert!(VarianceProfile::new(2, vec![1.0; 4], None, true).is_ok());
        assert!(VarianceProfile::new(2, vec![1.0, 2.0, 1.0, 1.0], None, false).is_err());
        assert!(VarianceProfile::new(2, vec![1.0, 0.5, 0.5, 1.0], None, true).is_err());
        assert!(VarianceProfile::new(2, vec![1.0; 4], Some((1.5, 2.0)), false).is_err());
        assert!(VarianceProfile::checkerboard(3, 0.5, 1.5).is_ok_and(|p| !p.is_normalized()));
    }

    #[test]
    fn wigner_differs_from_goe_only_on_diagonal_variance() {
        let w = VarianceProfile::wigner(3).unwrap();
        let g = VarianceProfile::goe(3).unwrap();
        assert_eq!(w.sigma2(0, 1), g.sigma2(0, 1));
        assert_eq!(w.sigma2(1, 1), 1.0);
        assert_eq!(g.sigma2(1, 1), 2.0);
    }

    #[test]
    fn profile_json_round_trip() {
        let p = VarianceProfile::checkerboard(2, 0.5, 1.5).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: VarianceProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }
}
