//! Closed-form success probabilities and yields of iterated concentration.
//!
//! With `q = min(|α|², |β|²) / max(|α|², |β|²)` the round-`n` success
//! probability is
//!
//! ```text
//! P_n = 2|αβ|^(2^n) / (|α|^(2^n) + |β|^(2^n))²  =  2 q^m / (1 + q^m)²,   m = 2^(n-1)
//! ```
//!
//! and the right-hand form is what gets evaluated, since it cannot overflow
//! and only underflows once the true value drops below `f64::MIN_POSITIVE`.
//!
//! Round `n` runs on half the residuals left by round `n − 1`, so the yield
//! contribution is `Y_n = P_n · ∏_{j<n}(1 − P_j) / 2^n`. That reproduces the
//! published `Y_1` and `Y_2`; the published `Y_3` and general `Y_n` differ
//! from it and are kept separately in [`printed_yield_terms`] for comparison.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::qstate::PairSource;
use crate::{Error, Result};

fn populations(src: &PairSource) -> (f64, f64) {
    (src.alpha().norm_sqr(), src.beta().norm_sqr())
}

/// Success probability of the `n`-th concentration round (`n ≥ 1`).
pub fn p_success(n: u32, src: &PairSource) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "iteration number must be at least 1",
        ));
    }
    let (a, b) = populations(src);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == 0.0 {
        return Ok(0.0);
    }
    let q = lo / hi;
    let qm = libm::pow(q, libm::exp2((n - 1) as f64));
    Ok(2.0 * qm / ((1.0 + qm) * (1.0 + qm)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldBreakdown {
    /// `terms[k]` is the contribution of round `k + 1`.
    pub terms: Vec<f64>,
    pub total: f64,
}

impl YieldBreakdown {
    fn from_terms(terms: Vec<f64>) -> Self {
        let total = terms.iter().sum();
        Self { terms, total }
    }

    /// Running sums: entry `k` is the yield after `k + 1` rounds.
    pub fn cumulative(&self) -> Vec<f64> {
        self.terms
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }
}

/// Maximal pairs per initial pair contributed by each of rounds `1..=n_max`.
pub fn yield_terms(n_max: u32, src: &PairSource) -> Result<YieldBreakdown> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1"));
    }
    let mut terms = Vec::with_capacity(n_max as usize);
    let mut surviving = 1.0;
    let mut share = 1.0;
    for n in 1..=n_max {
        let p = p_success(n, src)?;
        share *= 0.5;
        terms.push(share * surviving * p);
        surviving *= 1.0 - p;
    }
    Ok(YieldBreakdown::from_terms(terms))
}

/// `Y_2 = ½(1 − 2|αβ|²)|αβ|⁴ / (|α|⁴ + |β|⁴)²`, as published.
pub fn printed_yield_y2(src: &PairSource) -> f64 {
    let (a, b) = populations(src);
    let ab = a * b;
    0.5 * (1.0 - 2.0 * ab) * ab * ab / ((a * a + b * b) * (a * a + b * b))
}

/// `|αβ|^(2^k) / (|α|^(2^k) + |β|^(2^k))²` evaluated directly.
fn published_ratio(k: u32, src: &PairSource) -> f64 {
    let (a, b) = populations(src);
    let e = libm::exp2((k - 1) as f64);
    let (ak, bk) = (libm::pow(a, e), libm::pow(b, e));
    let d = ak + bk;
    ak * bk / (d * d)
}

/// The published yield terms taken literally: the explicit `Y_1`, `Y_2`, `Y_3`
/// and the general product formula for `n ≥ 4`.
pub fn printed_yield_terms(n_max: u32, src: &PairSource) -> Result<YieldBreakdown> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1"));
    }
    let (a, b) = populations(src);
    let ab = a * b;
    let head = 1.0 - 2.0 * ab;
    let terms = (1..=n_max)
        .map(|n| match n {
            1 => ab,
            2 => printed_yield_y2(src),
            3 => 0.25 * head * (1.0 - published_ratio(2, src)) * published_ratio(3, src),
            _ => {
                let product: f64 = (3..n)
                    .map(|j| 1.0 - 2.0 * published_ratio(j - 1, src))
                    .product();
                head * product * published_ratio(n, src) / libm::exp2((n - 1) as f64)
            }
        })
        .collect();
    Ok(YieldBreakdown::from_terms(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub alpha: f64,
    pub n: u32,
    pub p_success: f64,
    /// Cumulative yield after `n` rounds.
    pub yield_recursion: f64,
    /// Cumulative yield after `n` rounds from the published terms.
    pub yield_paper_printed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsTable {
    /// Ordered by alpha ascending, then n ascending.
    pub rows: Vec<SurfaceRow>,
}

/// Yield surface over a uniform grid of `alpha_steps` real α values spanning
/// `[0, 1/√2]` and rounds `1..=n_max`.
pub fn yield_surface(alpha_steps: u32, n_max: u32) -> Result<AnalyticsTable> {
    if alpha_steps < 2 {
        return Err(Error::InvalidParameter(
            "alpha grid needs at least 2 points",
        ));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1"));
    }
    let top = core::f64::consts::FRAC_1_SQRT_2;
    let mut rows = Vec::with_capacity((alpha_steps * n_max) as usize);
    for i in 0..alpha_steps {
        let alpha = if i == alpha_steps - 1 {
            top
        } else {
            top * i as f64 / (alpha_steps - 1) as f64
        };
        let src = PairSource::from_real_alpha(alpha)?;
        let rec = yield_terms(n_max, &src)?.cumulative();
        let printed = printed_yield_terms(n_max, &src)?.cumulative();
        for n in 1..=n_max {
            rows.push(SurfaceRow {
                alpha,
                n,
                p_success: p_success(n, &src)?,
                yield_recursion: rec[(n - 1) as usize],
                yield_paper_printed: printed[(n - 1) as usize],
            });
        }
    }
    Ok(AnalyticsTable { rows })
}
