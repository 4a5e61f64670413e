//! Stationary matrix OU dynamics, its Poisson-driven block variant, and
//! block resampling.
//!
//! OU moves use the exact Gaussian transition
//! `X' = e^{−τ dt} X + √(1 − e^{−2τ dt}) Ξ` with `Ξ_ij ~ N(0, σ_ij²)`, so no
//! time-stepping error exists. Noise is drawn in row-major order over the
//! acted-upon upper-triangle positions.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::ensemble::{Ensemble, VarianceProfile};
use crate::error::{Error, Result};
use crate::matrix::{Position, SymmetricMatrix};
use crate::partition::{sample_union, AdmissiblePartition, Block, UnionSet};
use crate::rng::StreamRng;

/// A symmetric set of matrix positions an operation may act on.
pub trait EntrySet {
    /// Positions with `i ≤ j`, row-major.
    fn upper_positions(&self) -> Vec<Position>;
}

impl EntrySet for Block {
    fn upper_positions(&self) -> Vec<Position> {
        self.upper().to_vec()
    }
}

impl EntrySet for UnionSet {
    fn upper_positions(&self) -> Vec<Position> {
        self.positions().into_iter().filter(|(i, j)| i <= j).collect()
    }
}

/// Every position of an `n × n` matrix.
pub struct AllEntries(pub usize);

impl EntrySet for AllEntries {
    fn upper_positions(&self) -> Vec<Position> {
        (0..self.0).flat_map(|i| (i..self.0).map(move |j| (i, j))).collect()
    }
}

/// Decay and innovation scale of an OU step of length `dt`.
#[inline]
fn ou_coefficients(tau: f64, dt: f64) -> (f64, f64) {
    let decay = (-tau * dt).exp();
    let kick = (-(-2.0 * tau * dt).exp_m1()).sqrt();
    (decay, kick)
}

fn check_ou_args(x: &SymmetricMatrix, dt: f64, tau: f64, profile: &VarianceProfile) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step dt = {dt} must be finite and >= 0")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("OU rate tau = {tau} must be positive")));
    }
    profile.check_dim(x.dim())
}

/// Exact OU transition of every entry over time `dt`.
pub fn ou_advance<R: Rng + ?Sized>(
    x: &SymmetricMatrix,
    dt: f64,
    tau: f64,
    profile: &VarianceProfile,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    ou_advance_on(x, &AllEntries(x.dim()), dt, tau, profile, rng)
}

/// Exact OU transition on the entries of `indices`; all other entries are
/// copied unchanged.
pub fn ou_advance_on<S: EntrySet + ?Sized, R: Rng + ?Sized>(
    x: &SymmetricMatrix,
    indices: &S,
    dt: f64,
    tau: f64,
    profile: &VarianceProfile,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    check_ou_args(x, dt, tau, profile)?;
    let mut out = x.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    let n = x.dim();
    let (decay, kick) = ou_coefficients(tau, dt);
    for (i, j) in indices.upper_positions() {
        if i >= n || j >= n {
            return Err(Error::invalid(format!("position ({}, {}) outside {n}x{n}", i + 1, j + 1)));
        }
        let z: f64 = StandardNormal.sample(rng);
        out.set(i, j, decay * x.get(i, j) + kick * profile.sigma(i, j) * z);
    }
    Ok(out)
}

/// Advances entry `(i, j)` by `steps[i][j]` OU steps of unit length in
/// `τ`-time (one exact transition of gap `steps_ij`).
pub fn ou_advance_counts<R: Rng + ?Sized>(
    x: &SymmetricMatrix,
    steps: &RingCounts,
    tau: f64,
    profile: &VarianceProfile,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    check_ou_args(x, 0.0, tau, profile)?;
    let n = x.dim();
    if steps.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: steps.dim() });
    }
    let mut out = x.clone();
    for i in 0..n {
        for j in i..n {
            let k = steps.per_entry(i, j);
            if k == 0 {
                continue;
            }
            let (decay, kick) = ou_coefficients(tau, k as f64);
            let z: f64 = StandardNormal.sample(rng);
            out.set(i, j, decay * x.get(i, j) + kick * profile.sigma(i, j) * z);
        }
    }
    Ok(out)
}

/// Per-block Poisson counts `K` and the induced per-entry counts `K̄`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingCounts {
    n: usize,
    per_block: Vec<u32>,
    per_entry: Vec<u32>,
}

impl RingCounts {
    pub fn new(p: &AdmissiblePartition, per_block: Vec<u32>) -> Result<Self> {
        if per_block.len() != p.m() {
            return Err(Error::DimensionMismatch { expected: p.m(), got: per_block.len() });
        }
        let n = p.dim();
        let per_entry = (0..n * n).map(|k| per_block[p.block_of(k / n, k % n)]).collect();
        Ok(Self { n, per_block, per_entry })
    }

    pub fn zeros(p: &AdmissiblePartition) -> Self {
        Self::new(p, vec![0; p.m()]).expect("sizes match")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn per_block(&self) -> &[u32] {
        &self.per_block
    }

    /// `K̄_ij`.
    #[inline]
    pub fn per_entry(&self, i: usize, j: usize) -> u32 {
        self.per_entry[i * self.n + j]
    }

    /// Counts with block `b` incremented by one (`K + e_B`).
    pub fn bumped(&self, p: &AdmissiblePartition, b: usize) -> Self {
        let mut k = self.per_block.clone();
        k[b] += 1;
        Self::new(p, k).expect("sizes match")
    }

    /// Entrywise `self − earlier`; fails if any count would go negative.
    pub fn since(&self, p: &AdmissiblePartition, earlier: &RingCounts) -> Result<Self> {
        let diff = self
            .per_block
            .iter()
            .zip(&earlier.per_block)
            .map(|(a, b)| a.checked_sub(*b).ok_or_else(|| Error::invalid("ring counts decreased")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, diff)
    }
}

/// `K_B ~ Poisson(ηt)` independently per block.
pub fn pdbou_ring_counts<R: Rng + ?Sized>(p: &AdmissiblePartition, eta: f64, t: f64, rng: &mut R) -> Result<RingCounts> {
    if !(eta > 0.0) || !(t >= 0.0) || !(eta * t).is_finite() {
        return Err(Error::invalid(format!("need eta > 0 and t >= 0, got eta = {eta}, t = {t}")));
    }
    let mean = eta * t;
    if mean == 0.0 {
        return Ok(RingCounts::zeros(p));
    }
    let law = Poisson::new(mean).map_err(|e| Error::invalid(format!("Poisson({mean}): {e}")))?;
    let counts = (0..p.m()).map(|_| law.sample(rng) as u32).collect();
    RingCounts::new(p, counts)
}

/// One Brownian path per block of a PDBOU process started from `G`.
///
/// Block `B`'s entries at ring count `c` are produced on demand by chaining
/// fresh unit OU steps, so `G(K)` and `G(K + e_B)` requested from the same
/// path share every earlier increment. Not shareable across threads.
pub struct PdbouPath<'a> {
    partition: &'a AdmissiblePartition,
    profile: &'a VarianceProfile,
    decay: f64,
    kick: f64,
    states: Vec<Vec<Vec<f64>>>,
    rng: StreamRng,
}

impl<'a> PdbouPath<'a> {
    pub fn new(
        g: &SymmetricMatrix,
        partition: &'a AdmissiblePartition,
        profile: &'a VarianceProfile,
        tau: f64,
        rng: StreamRng,
    ) -> Result<Self> {
        check_ou_args(g, 1.0, tau, profile)?;
        if partition.dim() != g.dim() {
            return Err(Error::DimensionMismatch { expected: g.dim(), got: partition.dim() });
        }
        let (decay, kick) = ou_coefficients(tau, 1.0);
        let states = partition
            .blocks()
            .iter()
            .map(|b| vec![b.upper().iter().map(|&(i, j)| g.get(i, j)).collect()])
            .collect();
        Ok(Self { partition, profile, decay, kick, states, rng })
    }

    fn ensure(&mut self, b: usize, count: usize) {
        while self.states[b].len() <= count {
            let prev = self.states[b].last().expect("initial state");
            let next = self.partition.block(b)
                .upper()
                .iter()
                .zip(prev)
                .map(|(&(i, j), &x)| {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    self.decay * x + self.kick * self.profile.sigma(i, j) * z
                })
                .collect();
            self.states[b].push(next);
        }
    }

    /// `G(K)` on this path.
    pub fn matrix_at(&mut self, counts: &RingCounts) -> Result<SymmetricMatrix> {
        if counts.per_block().len() != self.partition.m() {
            return Err(Error::DimensionMismatch { expected: self.partition.m(), got: counts.per_block().len() });
        }
        let mut out = SymmetricMatrix::zeros(self.partition.dim());
        for (b, &c) in counts.per_block().iter().enumerate() {
            self.ensure(b, c as usize);
            for (&(i, j), &x) in self.partition.block(b).upper().iter().zip(&self.states[b][c as usize]) {
                out.set(i, j, x);
            }
        }
        Ok(out)
    }

    /// `G(K + e_B)` on this path.
    pub fn advance_block(&mut self, counts: &RingCounts, b: usize) -> Result<SymmetricMatrix> {
        if b >= self.partition.m() {
            return Err(Error::invalid(format!("block index {b} out of range")));
        }
        self.matrix_at(&counts.bumped(self.partition, b))
    }

    /// Entry `(i, j)` after `count` rings of its block.
    pub fn entry_at(&mut self, i: usize, j: usize, count: u32) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let b = self.partition.block_of(i, j);
        self.ensure(b, count as usize);
        let slot = self.partition.block(b).upper().iter().position(|&p| p == (i, j)).expect("owner block");
        self.states[b][count as usize][slot]
    }
}

/// `G(K)` together with the path that produced it, from which
/// `G(K + e_B)` continuations are drawn.
pub fn pdbou_sample_pair<'a>(
    g: &SymmetricMatrix,
    counts: &RingCounts,
    partition: &'a AdmissiblePartition,
    tau: f64,
    profile: &'a VarianceProfile,
    rng: StreamRng,
) -> Result<(SymmetricMatrix, PdbouPath<'a>)> {
    let mut path = PdbouPath::new(g, partition, profile, tau, rng)?;
    let gk = path.matrix_at(counts)?;
    Ok((gk, path))
}

/// `X^A`: entries of `y` on `a`, entries of `x` elsewhere.
pub fn block_resample(x: &SymmetricMatrix, y: &SymmetricMatrix, a: &UnionSet) -> Result<SymmetricMatrix> {
    let n = x.dim();
    for d in [y.dim(), a.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, got: d });
        }
    }
    Ok(SymmetricMatrix::from_upper_fn(n, |i, j| if a.contains(i, j) { y.get(i, j) } else { x.get(i, j) }))
}

/// `(X, X^A)` with `A` uniform on `A_k` and `Y` an independent copy of `X`.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub first: SymmetricMatrix,
    pub second: SymmetricMatrix,
    pub resampled: UnionSet,
}

pub fn resample_draw<R: Rng + ?Sized>(
    ensemble: &Ensemble,
    p: &AdmissiblePartition,
    k: usize,
    rng: &mut R,
) -> Result<CoupledPair> {
    if p.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), got: p.dim() });
    }
    let x = ensemble.sample(rng);
    let y = ensemble.sample(rng);
    let a = sample_union(p, k, rng)?;
    let second = block_resample(&x, &y, &a)?;
    Ok(CoupledPair { first: x, second, resampled: a })
}
