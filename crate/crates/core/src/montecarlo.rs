//! Seeded trial execution and analytic-vs-empirical comparison.
//!
//! Trial `i` of an experiment seeded with `s` always draws from ChaCha8 keyed
//! by `s` on stream `i`, so results do not depend on how trials are scheduled.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS_EXACT};

pub type TrialRng = ChaCha8Rng;

/// z-scores at or below this pass.
pub const Z_THRESHOLD: f64 = 3.0;

pub fn trial_rng(master_seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer; derives independent master seeds for sub-experiments.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    let mut z = master_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs indexed trials and returns their results in index order.
pub trait TrialExecutor {
    fn run<T, F>(&self, trials: u64, trial: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialExecutor for Sequential {
    fn run<T, F>(&self, trials: u64, trial: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..trials).map(trial).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    /// Bernoulli estimate: `stderr = √(mean(1 − mean)/trials)`.
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::InvalidParameter("at least one trial is required"));
        }
        if successes > trials {
            return Err(Error::InvalidParameter("more successes than trials"));
        }
        let mean = successes as f64 / trials as f64;
        Ok(Self {
            mean,
            stderr: libm::sqrt(mean * (1.0 - mean) / trials as f64),
            trials,
        })
    }
}

pub fn estimate_bernoulli<F>(trials: u64, master_seed: u64, trial: F) -> Result<Estimate>
where
    F: Fn(u64, &mut TrialRng) -> bool + Sync + Send,
{
    estimate_bernoulli_with(&Sequential, trials, master_seed, trial)
}

pub fn estimate_bernoulli_with<E, F>(
    executor: &E,
    trials: u64,
    master_seed: u64,
    trial: F,
) -> Result<Estimate>
where
    E: TrialExecutor + ?Sized,
    F: Fn(u64, &mut TrialRng) -> bool + Sync + Send,
{
    if trials < 1 {
        return Err(Error::InvalidParameter("at least one trial is required"));
    }
    let hits = executor.run(trials, |i| trial(i, &mut trial_rng(master_seed, i)));
    Estimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, trials)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub analytic: f64,
    pub estimate: Estimate,
    /// `|analytic − mean| / stderr`; infinite for a zero-stderr mismatch.
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Sorted by label.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn z_score(analytic: f64, estimate: &Estimate) -> f64 {
    let diff = (analytic - estimate.mean).abs();
    if estimate.stderr > 0.0 {
        diff / estimate.stderr
    } else if diff <= EPS_EXACT {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Pairs analytic values with estimates by label. Both sides must carry the
/// same set of distinct labels.
pub fn compare<S: AsRef<str>>(
    analytic: &[(S, f64)],
    estimates: &[(S, Estimate)],
) -> Result<ComparisonReport> {
    let mut a: Vec<(&str, f64)> = analytic.iter().map(|(l, v)| (l.as_ref(), *v)).collect();
    let mut e: Vec<(&str, Estimate)> = estimates.iter().map(|(l, v)| (l.as_ref(), *v)).collect();
    a.sort_by(|x, y| x.0.cmp(y.0));
    e.sort_by(|x, y| x.0.cmp(y.0));
    let distinct = a.windows(2).all(|w| w[0].0 != w[1].0);
    if a.len() != e.len() || !distinct || a.iter().zip(&e).any(|(x, y)| x.0 != y.0) {
        return Err(Error::LabelMismatch);
    }
    let rows = a
        .into_iter()
        .zip(e)
        .map(|((label, analytic), (_, estimate))| {
            let z = z_score(analytic, &estimate);
            ComparisonRow {
                label: String::from(label),
                analytic,
                estimate,
                z,
                // tolerate rounding in the division at the boundary
                pass: z <= Z_THRESHOLD * (1.0 + 1e-9),
            }
        })
        .collect();
    Ok(ComparisonReport { rows })
}
