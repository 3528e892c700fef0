//! Iterated sessions over a stock of identical source states.
//!
//! Round 1 consumes fresh sources two at a time. Every failure leaves one
//! residual block; round `n > 1` pairs up the residuals of round `n − 1`.
//! An odd leftover at any round is discarded and counted.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{primary_round, recycle_round, RoundResult, Strategy};
use crate::analytics::{p_success, yield_terms};
use crate::montecarlo::{trial_rng, Sequential, TrialExecutor};
use crate::outcomes::BornSampler;
use crate::qnd::ParityMode;
use crate::qstate::PairSource;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub source: PairSource,
    /// 2 for photon pairs, more for GHZ-class states.
    pub parties: usize,
    pub initial_pairs: u64,
    pub max_rounds: u32,
    pub strategy: Strategy,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: u32,
    pub trials: u64,
    pub successes: u64,
    /// Zero when no trial ran.
    pub empirical_rate: f64,
    pub stderr: f64,
    pub analytic_rate: f64,
    /// Systems left unpaired at the start of this round.
    pub discarded: u64,
    pub min_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub parties: usize,
    pub alpha: f64,
    pub beta: f64,
    pub initial_pairs: u64,
    pub max_rounds: u32,
    pub strategy: Strategy,
    pub seed: u64,
    pub rounds: Vec<RoundStats>,
    /// Initial sources that entered a round-1 trial.
    pub pairs_consumed: u64,
    pub maximal_pairs: u64,
    pub discarded: u64,
    pub empirical_yield: f64,
    pub analytic_yield: f64,
    pub min_fidelity: Option<f64>,
}

struct TrialSummary {
    fidelity: Option<f64>,
    residual: Option<PairSource>,
}

impl From<RoundResult> for TrialSummary {
    fn from(r: RoundResult) -> Self {
        Self {
            fidelity: r.fidelity(),
            residual: r.residual().copied(),
        }
    }
}

/// Stream index of trial `t` in round `round`.
fn stream(round: u32, trial: u64) -> u64 {
    (round as u64) << 40 | trial
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionReport> {
    run_session_with(&Sequential, cfg)
}

pub fn run_session_with<E: TrialExecutor + ?Sized>(
    executor: &E,
    cfg: &SessionConfig,
) -> Result<SessionReport> {
    if cfg.initial_pairs < 2 {
        return Err(Error::InvalidParameter(
            "a session needs at least two source states",
        ));
    }
    if cfg.max_rounds < 1 {
        return Err(Error::InvalidParameter(
            "a session needs at least one round",
        ));
    }
    if cfg.initial_pairs >= 1 << 40 {
        return Err(Error::InvalidParameter("too many source states"));
    }

    let mut rounds = Vec::with_capacity(cfg.max_rounds as usize);
    let mut residuals: Vec<PairSource> = Vec::new();
    let mut discarded = 0;
    for round in 1..=cfg.max_rounds {
        let pool = if round == 1 {
            cfg.initial_pairs
        } else {
            residuals.len() as u64
        };
        let trials = pool / 2;
        let leftover = pool % 2;
        discarded += leftover;

        let pool_ref = &residuals;
        let results: Vec<Result<TrialSummary>> = executor.run(trials, |t| {
            let mut rng = trial_rng(cfg.seed, stream(round, t));
            let mut sampler = BornSampler(&mut rng);
            let r = if round == 1 {
                primary_round(&cfg.source, cfg.parties, ParityMode::TwoClass, &mut sampler)
            } else {
                let i = 2 * t as usize;
                recycle_round(
                    &pool_ref[i],
                    &pool_ref[i + 1],
                    cfg.parties,
                    cfg.strategy,
                    &mut sampler,
                )
            };
            r.map(TrialSummary::from)
        });

        let mut successes = 0;
        let mut min_fidelity = None;
        let mut next = Vec::new();
        for r in results {
            let s = r?;
            if s.fidelity.is_some() {
                successes += 1;
                min_fidelity = min_opt(min_fidelity, s.fidelity);
            }
            if let Some(res) = s.residual {
                next.push(res);
            }
        }
        residuals = next;

        let (empirical_rate, stderr) = if trials > 0 {
            let m = successes as f64 / trials as f64;
            (m, libm::sqrt(m * (1.0 - m) / trials as f64))
        } else {
            (0.0, 0.0)
        };
        rounds.push(RoundStats {
            round,
            trials,
            successes,
            empirical_rate,
            stderr,
            analytic_rate: p_success(round, &cfg.source)?,
            discarded: leftover,
            min_fidelity,
        });
    }

    let maximal_pairs: u64 = rounds.iter().map(|r| r.successes).sum();
    let min_fidelity = rounds
        .iter()
        .fold(None, |acc, r| min_opt(acc, r.min_fidelity));
    Ok(SessionReport {
        parties: cfg.parties,
        alpha: cfg.source.alpha().norm(),
        beta: cfg.source.beta().norm(),
        initial_pairs: cfg.initial_pairs,
        max_rounds: cfg.max_rounds,
        strategy: cfg.strategy,
        seed: cfg.seed,
        pairs_consumed: 2 * rounds[0].trials,
        maximal_pairs,
        discarded,
        empirical_yield: maximal_pairs as f64 / cfg.initial_pairs as f64,
        analytic_yield: yield_terms(cfg.max_rounds, &cfg.source)?.total,
        min_fidelity,
        rounds,
    })
}
