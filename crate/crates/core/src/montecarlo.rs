//! Trial plumbing shared by identity checks and experiments: per-trial
//! streams, the degenerate-draw retry policy, and order-stable reduction.

use crate::error::{Error, Result};
use crate::parallel::chunked;
use crate::rng::{SeedStream, StreamRng};
use crate::stats::{MCEstimate, MeanAccumulator};

/// Attempts per trial before a degenerate draw becomes a hard error.
const MAX_ATTEMPTS: u64 = 16;

/// Largest tolerated fraction of trials that needed a redraw.
pub const DEGENERATE_BUDGET: f64 = 1e-3;

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::NearDegenerate { .. } | Error::DegenerateAlongPath { .. })
}

/// Runs `f` on the trial's stream; a near-degenerate spectrum is redrawn
/// from sub-stream `attempt`. Returns the value and the number of redraws.
pub fn retry_degenerate<T>(stream: SeedStream, mut f: impl FnMut(&mut StreamRng) -> Result<T>) -> Result<(T, u64)> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = if attempt == 0 { stream.rng() } else { stream.substream(attempt).rng() };
        match f(&mut rng) {
            Ok(v) => return Ok((v, attempt)),
            Err(e) if is_degenerate(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Fails when more than 0.1% of trials needed a redraw.
pub fn check_budget(retries: u64, trials: u64) -> Result<()> {
    if retries as f64 > DEGENERATE_BUDGET * trials as f64 {
        return Err(Error::DegenerateBudget { count: retries, trials });
    }
    Ok(())
}

/// Reduction state that can absorb one trial and merge with another.
pub trait Accumulate: Send {
    fn merge(&mut self, other: Self);
}

impl Accumulate for Vec<MeanAccumulator> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
        } else {
            for (a, b) in self.iter_mut().zip(&other) {
                a.merge(b);
            }
        }
    }
}

impl Accumulate for Vec<f64> {
    fn merge(&mut self, other: Self) {
        self.extend(other);
    }
}

/// Runs `trials` trials of row `row`, reducing each chunk with `absorb` into
/// a fresh `init()` and merging chunks in order. The result is independent
/// of the worker count.
pub fn run_trials<A, T, I, F, G>(master_seed: u64, row: u64, trials: u64, init: I, trial: F, absorb: G) -> Result<(A, u64)>
where
    A: Accumulate,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut StreamRng) -> Result<T> + Sync + Send,
    G: Fn(&mut A, T) + Sync + Send,
{
    let chunks = chunked(trials, |range| {
        let mut acc = init();
        let mut retries = 0;
        for t in range {
            let (value, r) = retry_degenerate(SeedStream::for_trial(master_seed, row, t), &trial)?;
            retries += r;
            absorb(&mut acc, value);
        }
        Ok((acc, retries))
    })?;
    let mut total = init();
    let mut retries = 0;
    for (acc, r) in chunks {
        total.merge(acc);
        retries += r;
    }
    check_budget(retries, trials)?;
    Ok((total, retries))
}

/// Means of per-trial vectors, reduced on the fly.
pub fn collect_means<F>(master_seed: u64, row: u64, trials: u64, trial: F) -> Result<(Vec<MCEstimate>, u64)>
where
    F: Fn(&mut StreamRng) -> Result<Vec<f64>> + Sync + Send,
{
    let (acc, retries) = run_trials(master_seed, row, trials, Vec::new, trial, |acc: &mut Vec<MeanAccumulator>, v: Vec<f64>| {
        if acc.is_empty() {
            acc.resize(v.len(), MeanAccumulator::default());
        }
        for (a, x) in acc.iter_mut().zip(v) {
            a.push(x);
        }
    })?;
    Ok((acc.iter().map(MeanAccumulator::estimate).collect(), retries))
}

/// Per-trial samples of one scalar, kept in trial order.
pub fn collect_samples<F>(master_seed: u64, row: u64, trials: u64, trial: F) -> Result<(Vec<f64>, u64)>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync + Send,
{
    run_trials(master_seed, row, trials, Vec::new, trial, |acc: &mut Vec<f64>, v| acc.push(v))
}

/// Per-trial vectors of equal length, kept in trial order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleTable {
    pub width: usize,
    pub data: Vec<f64>,
}

impl SampleTable {
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width.max(1))
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

impl Accumulate for SampleTable {
    fn merge(&mut self, other: Self) {
        if self.width == 0 {
            self.width = other.width;
        }
        self.data.extend(other.data);
    }
}

/// Per-trial vectors (e.g. one value per control point), in trial order.
pub fn collect_rows<F>(master_seed: u64, row: u64, trials: u64, trial: F) -> Result<(SampleTable, u64)>
where
    F: Fn(&mut StreamRng) -> Result<Vec<f64>> + Sync + Send,
{
    run_trials(master_seed, row, trials, SampleTable::default, trial, |acc: &mut SampleTable, v: Vec<f64>| {
        acc.width = v.len();
        acc.data.extend(v);
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::Parallelism;
    use rand::Rng;

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let f = |rng: &mut StreamRng| Ok(rng.random::<f64>());
        let a = Parallelism::with_threads(1).install(|| collect_samples(3, 1, 1000, f).unwrap()).unwrap();
        let b = Parallelism::with_threads(4).install(|| collect_samples(3, 1, 1000, f).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_draws_are_redrawn_and_budgeted() {
        let flaky = |rng: &mut StreamRng| {
            if rng.random::<f64>() < 0.5 {
                Err(Error::NearDegenerate { alpha: 1, gap: 0.0, tol: 1e-10 })
            } else {
                Ok(1.0)
            }
        };
        let (_, retries) = retry_degenerate(SeedStream::new(1, 1), flaky).unwrap_or((0.0, 0));
        assert!(retries < MAX_ATTEMPTS);
        assert!(matches!(collect_samples(1, 0, 100, flaky), Err(Error::DegenerateBudget { .. })));
        assert!(check_budget(1, 1000).is_ok() && check_budget(2, 1000).is_err());
    }
}
