//! End-to-end verification: exact enumeration against the closed forms, and
//! seeded Monte Carlo against the same closed forms at 3σ.
//!
//! The success-probability formula is injected so that a corrupted formula
//! can be shown to fail the suite.

use std::fmt::Write as _;

use kerr_ecp_core::analytics::{p_success, printed_yield_terms, yield_surface, yield_terms};
use kerr_ecp_core::montecarlo::{
    compare, derive_seed, estimate_bernoulli_with, Estimate, TrialExecutor,
};
use kerr_ecp_core::outcomes::Branch;
use kerr_ecp_core::protocol::{
    concentrate_once, enumerate_primary, enumerate_recycle, failure_residual, run_session_with,
    success_probability, RoundResult, SessionConfig, SessionReport, Strategy,
};
use kerr_ecp_core::qnd::ParityMode;
use kerr_ecp_core::qstate::{PairSource, TaggedState};
use serde::Serialize;

use crate::format::sig10;
use crate::{Parallel, Result};

/// Closed-form round-`n` success probability.
pub type AnalyticFn = fn(u32, &PairSource) -> kerr_ecp_core::Result<f64>;

const EXACT_TOL: f64 = 1e-12;
const YIELD_TOL: f64 = 0.005;
const PRIMARY_TRIALS: u64 = 100_000;
/// Minimum number of trials in the last round of a recursion session.
const ROUND_TRIALS: u64 = 10_000;
const MAX_ROUND: u32 = 4;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detail {
    /// A computed quantity within `tolerance` of its target.
    Deviation { error: f64, tolerance: f64 },
    /// A Monte Carlo estimate against an analytic value.
    Statistical {
        analytic: f64,
        mean: f64,
        stderr: f64,
        trials: u64,
        z: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(flatten)]
    pub detail: Detail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub all_pass: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    /// One line per check followed by a summary line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            let _ = match &c.detail {
                Detail::Deviation { error, tolerance } => writeln!(
                    s,
                    "{status}  {:<40} error={} tolerance={}",
                    c.name,
                    sig10(*error),
                    sig10(*tolerance)
                ),
                Detail::Statistical {
                    analytic,
                    mean,
                    stderr,
                    trials,
                    z,
                } => writeln!(
                    s,
                    "{status}  {:<40} analytic={} mean={} stderr={} trials={trials} z={}",
                    c.name,
                    sig10(*analytic),
                    sig10(*mean),
                    sig10(*stderr),
                    sig10(*z)
                ),
            };
        }
        let _ = match self.failures() {
            0 => writeln!(
                s,
                "all {} checks passed (seed {})",
                self.checks.len(),
                self.seed
            ),
            f => writeln!(
                s,
                "{f} of {} checks failed (seed {})",
                self.checks.len(),
                self.seed
            ),
        };
        s
    }
}

fn deviation(name: String, error: f64, tolerance: f64) -> Check {
    Check {
        name,
        // NaN errors fail
        pass: error <= tolerance,
        detail: Detail::Deviation { error, tolerance },
    }
}

fn statistical(name: String, analytic: f64, estimate: Estimate) -> Result<Check> {
    let report = compare(&[(name.as_str(), analytic)], &[(name.as_str(), estimate)])?;
    let row = &report.rows[0];
    Ok(Check {
        name,
        pass: row.pass,
        detail: Detail::Statistical {
            analytic,
            mean: estimate.mean,
            stderr: estimate.stderr,
            trials: estimate.trials,
            z: row.z,
        },
    })
}

fn src(alpha: f64) -> Result<PairSource> {
    Ok(PairSource::from_real_alpha(alpha)?)
}

fn label(alpha: f64) -> String {
    format!("alpha={}", sig10(alpha))
}

/// Enumerated rounds `1..=n_max`, each on the failure residual of the last.
pub fn enumerate_chain(
    source: &PairSource,
    parties: usize,
    strategy: Strategy,
    n_max: u32,
) -> Result<Vec<Vec<Branch<RoundResult>>>> {
    let mut rounds = vec![enumerate_primary(source, parties, ParityMode::TwoClass)?];
    while rounds.len() < n_max as usize {
        match failure_residual(rounds.last().unwrap()) {
            Some(res) => rounds.push(enumerate_recycle(&res, parties, strategy)?),
            None => break,
        }
    }
    Ok(rounds)
}

/// Largest `1 − F` against GHZ⁺ over the successful leaves.
fn worst_infidelity(leaves: &[Branch<RoundResult>], parties: usize) -> Result<f64> {
    let ghz = TaggedState::ghz(parties, true)?;
    let mut worst: f64 = 0.0;
    for leaf in leaves.iter().filter(|l| l.value.success()) {
        let f = leaf.value.output().unwrap().fidelity(&ghz)?;
        worst = worst.max(1.0 - f);
    }
    Ok(worst)
}

fn session_infidelity(report: &SessionReport) -> f64 {
    report.min_fidelity.map_or(0.0, |f| 1.0 - f)
}

/// Initial pairs giving at least [`ROUND_TRIALS`] expected trials in round
/// [`MAX_ROUND`], with a 25% margin.
pub fn recursion_pairs(source: &PairSource) -> Result<u64> {
    let mut surviving = 1.0;
    for n in 1..MAX_ROUND {
        surviving *= 1.0 - p_success(n, source)?;
    }
    let pairs = 1.25 * ROUND_TRIALS as f64 * 2f64.powi(MAX_ROUND as i32) / surviving;
    Ok((pairs.ceil() as u64 + 1) & !1)
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub analytic: AnalyticFn,
}

impl VerifyOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            analytic: p_success,
        }
    }
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    run_verify_with(&Parallel, opts)
}

pub fn run_verify_with<E: TrialExecutor + Sync>(
    executor: &E,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let analytic = opts.analytic;
    let seed = |k: u64| derive_seed(opts.seed, k);
    let mut checks = Vec::new();

    // primary success probability
    for (k, alpha) in [0.3, 0.5, 0.6, FRAC_1_SQRT_2].into_iter().enumerate() {
        let s = src(alpha)?;
        let est = estimate_bernoulli_with(executor, PRIMARY_TRIALS, seed(k as u64), |_, rng| {
            concentrate_once(&s, rng).is_ok_and(|r| r.success())
        })?;
        checks.push(statistical(
            format!("primary/{}", label(alpha)),
            analytic(1, &s)?,
            est,
        )?);
    }

    // iterated rounds: exact enumeration and conditional session rates
    let recursion_alphas = [0.5, 0.6, FRAC_1_SQRT_2];
    for (k, alpha) in recursion_alphas.into_iter().enumerate() {
        let s = src(alpha)?;
        for strategy in [Strategy::FullState, Strategy::MeasureAndReduce] {
            let chain = enumerate_chain(&s, 2, strategy, MAX_ROUND)?;
            let mut error: f64 = 0.0;
            for n in 1..=MAX_ROUND {
                let p = chain
                    .get(n as usize - 1)
                    .map_or(0.0, |l| success_probability(l));
                error = error.max((p - analytic(n, &s)?).abs());
            }
            let name = match strategy {
                Strategy::FullState => "full-state",
                Strategy::MeasureAndReduce => "measure-reduce",
            };
            checks.push(deviation(
                format!("enumeration/{name}/{}", label(alpha)),
                error,
                EXACT_TOL,
            ));
        }

        let report = run_session_with(
            executor,
            &SessionConfig {
                source: s,
                parties: 2,
                initial_pairs: recursion_pairs(&s)?,
                max_rounds: MAX_ROUND,
                strategy: Strategy::FullState,
                seed: seed(100 + k as u64),
            },
        )?;
        for r in &report.rounds[1..] {
            let est = Estimate::from_counts(r.successes, r.trials)?;
            checks.push(statistical(
                format!("session/{}/round={}", label(alpha), r.round),
                analytic(r.round, &s)?,
                est,
            )?);
        }
        let last = report.rounds.last().unwrap().trials;
        checks.push(Check {
            name: format!("session/{}/round-trials", label(alpha)),
            pass: last >= ROUND_TRIALS,
            detail: Detail::Deviation {
                error: ROUND_TRIALS.saturating_sub(last) as f64,
                tolerance: 0.0,
            },
        });
        checks.push(deviation(
            format!("purity/session/parties=2/{}", label(alpha)),
            session_infidelity(&report),
            EXACT_TOL,
        ));
    }

    // GHZ sources
    let s = src(0.6)?;
    for parties in 2..=4 {
        let chain = enumerate_chain(&s, parties, Strategy::FullState, 2)?;
        let mut error: f64 = 0.0;
        let mut infidelity: f64 = 0.0;
        for (n, leaves) in (1..).zip(&chain) {
            error = error.max((success_probability(leaves) - analytic(n, &s)?).abs());
            infidelity = infidelity.max(worst_infidelity(leaves, parties)?);
        }
        checks.push(deviation(
            format!("ghz/enumeration/parties={parties}"),
            error,
            EXACT_TOL,
        ));
        checks.push(deviation(
            format!("purity/enumeration/parties={parties}"),
            infidelity,
            EXACT_TOL,
        ));
        if parties == 2 {
            continue;
        }
        let report = run_session_with(
            executor,
            &SessionConfig {
                source: s,
                parties,
                initial_pairs: 2 * PRIMARY_TRIALS,
                max_rounds: 2,
                strategy: Strategy::FullState,
                seed: seed(200 + parties as u64),
            },
        )?;
        let r = &report.rounds[0];
        checks.push(statistical(
            format!("ghz/session/parties={parties}"),
            analytic(1, &s)?,
            Estimate::from_counts(r.successes, r.trials)?,
        )?);
        checks.push(deviation(
            format!("purity/session/parties={parties}"),
            session_infidelity(&report),
            EXACT_TOL,
        ));
    }

    // yields
    let mut error: f64 = 0.0;
    for i in 0..100 {
        let s = src(i as f64 / 99.0 * FRAC_1_SQRT_2)?;
        let rec = yield_terms(2, &s)?;
        let printed = printed_yield_terms(2, &s)?;
        for (a, b) in rec.terms.iter().zip(&printed.terms) {
            error = error.max((a - b).abs());
        }
    }
    checks.push(deviation("yield/printed-y1-y2".into(), error, EXACT_TOL));

    let sym = PairSource::symmetric();
    let report = run_session_with(
        executor,
        &SessionConfig {
            source: sym,
            parties: 2,
            initial_pairs: PRIMARY_TRIALS,
            max_rounds: 10,
            strategy: Strategy::FullState,
            seed: seed(300),
        },
    )?;
    checks.push(deviation(
        "yield/session/symmetric/rounds=10".into(),
        (report.empirical_yield - 1.0 / 3.0).abs(),
        YIELD_TOL,
    ));

    let table = yield_surface(100, 10)?;
    let mut violation: f64 = 0.0;
    for w in table.rows.windows(2).filter(|w| w[0].alpha == w[1].alpha) {
        violation = violation.max(w[0].yield_recursion - w[1].yield_recursion);
    }
    for r in &table.rows {
        violation = violation.max(r.yield_recursion - 0.5);
    }
    checks.push(deviation("surface/monotone-bounded".into(), violation, 0.0));

    // recycling strategies
    for alpha in [0.2, 0.4, 0.5, 0.6, FRAC_1_SQRT_2] {
        let s = src(alpha)?;
        let res = failure_residual(&enumerate_primary(&s, 2, ParityMode::TwoClass)?)
            .expect("a partially entangled source can fail");
        let full = enumerate_recycle(&res, 2, Strategy::FullState)?;
        let reduce = enumerate_recycle(&res, 2, Strategy::MeasureAndReduce)?;
        let error = (success_probability(&full) - success_probability(&reduce))
            .abs()
            .max(worst_infidelity(&full, 2)?)
            .max(worst_infidelity(&reduce, 2)?);
        checks.push(deviation(
            format!("strategy/{}", label(alpha)),
            error,
            EXACT_TOL,
        ));
    }

    Ok(VerifyReport {
        seed: opts.seed,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
