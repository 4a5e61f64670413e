//! Monte Carlo estimates and order-independent accumulation.
//!
//! Every reduction here is either compensated (Neumaier) or two-pass, and
//! callers always merge chunk accumulators in chunk order, so results do not
//! depend on how trials were scheduled across threads.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl MCEstimate {
    /// Sample mean and standard error `s/√N` (two-pass).
    pub fn from_samples(xs: &[f64]) -> MCEstimate {
        let n = xs.len();
        if n == 0 {
            return MCEstimate { mean: f64::NAN, std_error: f64::NAN, trials: 0 };
        }
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        let se = if n > 1 {
            let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        MCEstimate { mean, std_error: se, trials: n as u64 }
    }

    /// Sample variance with the large-sample standard error
    /// `sqrt((m4 − s⁴)/N)` from the fourth central moment.
    pub fn variance_of(xs: &[f64]) -> MCEstimate {
        let n = xs.len();
        if n < 2 {
            return MCEstimate { mean: f64::NAN, std_error: f64::NAN, trials: n as u64 };
        }
        let nf = n as f64;
        let mean = compensated_sum(xs.iter().copied()) / nf;
        let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2)));
        let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / nf;
        let var = m2 / (nf - 1.0);
        let se = ((m4 - var * var).max(0.0) / nf).sqrt();
        MCEstimate { mean: var, std_error: se, trials: n as u64 }
    }

    pub fn scaled(&self, factor: f64) -> MCEstimate {
        MCEstimate {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            trials: self.trials,
        }
    }

    /// `|a − b| / sqrt(se_a² + se_b²)` for independent estimates.
    pub fn z_against(&self, other: &MCEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        z_score((self.mean - other.mean).abs(), se)
    }
}

pub(crate) fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    }
}

/// Streaming mean and variance (Welford updates, Chan merges).
///
/// Merging is deterministic for a fixed merge order, which the chunked
/// runners guarantee.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> MCEstimate {
        if self.count == 0 {
            return MCEstimate { mean: f64::NAN, std_error: f64::NAN, trials: 0 };
        }
        let n = self.count as f64;
        let se = if self.count > 1 { (self.m2.max(0.0) / (n - 1.0) / n).sqrt() } else { 0.0 };
        MCEstimate { mean: self.mean, std_error: se, trials: self.count }
    }
}

/// Linear-interpolated quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sample quantile with a distribution-free standard error from the
/// order-statistic interval `p ± √(p(1−p)/N)`.
pub fn quantile_estimate(samples: &[f64], p: f64) -> MCEstimate {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let half = (p * (1.0 - p) / n).sqrt();
    let q = quantile_sorted(&sorted, p);
    let lo = quantile_sorted(&sorted, p - half);
    let hi = quantile_sorted(&sorted, p + half);
    MCEstimate { mean: q, std_error: (hi - lo) / 2.0, trials: sorted.len() as u64 }
}

/// Frequency of `true` with binomial standard error.
pub fn frequency(flags: impl IntoIterator<Item = bool>) -> MCEstimate {
    let mut hits = 0u64;
    let mut n = 0u64;
    for f in flags {
        n += 1;
        hits += f as u64;
    }
    let p = hits as f64 / n as f64;
    MCEstimate { mean: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), trials: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut acc = Neumaier::default();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn estimate_from_samples() {
        let e = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.std_error - sd / 2.0).abs() < 1e-15);
        let v = MCEstimate::variance_of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((v.mean - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn streaming_matches_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 / 7.0).collect();
        let mut acc = MeanAccumulator::default();
        let mut other = MeanAccumulator::default();
        for (k, &x) in xs.iter().enumerate() {
            if k < 40 {
                acc.push(x)
            } else {
                other.push(x)
            }
        }
        acc.merge(&other);
        let a = acc.estimate();
        let b = MCEstimate::from_samples(&xs);
        assert!((a.mean - b.mean).abs() < 1e-14);
        assert!((a.std_error - b.std_error).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 5.0, 4.0];
        assert_eq!(quantile_estimate(&xs, 0.5).mean, 3.0);
        let f = frequency([true, false, true, true]);
        assert_eq!(f.mean, 0.75);
    }
}
