//! Concentration rounds.
//!
//! Two copies of an `N`-party source `α|H…H⟩ + β|V…V⟩` are shared so that
//! party `k` holds slot `k` of the first copy and slot `N + k` of the second.
//! Every party flips its second photon with R90, then party 1 (the second
//! party, "Bob" for `N = 2`) runs both of its photons through the parity QND.
//! Even parity leaves `(|H…H H…H⟩ + |V…V V…V⟩)/√2` over all `2N` photons; the
//! second-copy photons are rotated by R45 and detected, the parity of V clicks
//! fixes the relative sign, and party 0 corrects it. With θ = π the failed
//! branch stays coherent as `α²|H…H V…V⟩ + β²|V…V H…H⟩`, which later rounds
//! recycle.
//!
//! Residuals are carried between rounds as effective coefficients
//! ([`PairSource`]) of that two-term block; a recycling round materializes the
//! blocks again. Each operation comes in a sampling form taking an RNG and a
//! form taking any [`OutcomeChooser`], which [`enumerate_primary`] and
//! [`enumerate_recycle`] use to walk every outcome exactly.

mod session;

pub use session::{run_session, run_session_with, RoundStats, SessionConfig, SessionReport};

use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::optics::{classify_sign, correct_phase, r45, r90, BellSign};
use crate::outcomes::{enumerate, BornSampler, Branch, OutcomeChooser};
use crate::qnd::{parity_check_with, ParityMode, ParityOutcome};
use crate::qstate::{
    BasisLabel, MeasurementBasis, MeasurementRecord, PairSource, Polarization, TaggedState,
    MAX_PHOTONS,
};
use crate::{Error, Result};

/// Party that owns the parity QND.
pub const QND_PARTY: usize = 1;
/// Party that applies the corrective phase, on its retained photon.
pub const CORRECTING_PARTY: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Keep both residual blocks whole and parity-check across them.
    FullState,
    /// Detect each residual's sacrificed photons first, then run a primary
    /// round on the reduced sources.
    MeasureAndReduce,
}

/// Classical message exchanged during a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Parity {
        party: usize,
        outcome: ParityOutcome,
    },
    Instruction {
        party: usize,
        keep: bool,
    },
    Detection {
        party: usize,
        record: MeasurementRecord,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome {
    Success {
        /// Canonical GHZ⁺ (φ⁺ for two parties) after correction.
        output: TaggedState,
        /// Sign announced by the detections, before correction.
        sign: BellSign,
        fidelity: f64,
    },
    Failure {
        residual: PairSource,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub outcome: RoundOutcome,
    pub transcript: Vec<Message>,
}

impl RoundResult {
    pub fn success(&self) -> bool {
        matches!(self.outcome, RoundOutcome::Success { .. })
    }

    pub fn output(&self) -> Option<&TaggedState> {
        match &self.outcome {
            RoundOutcome::Success { output, .. } => Some(output),
            RoundOutcome::Failure { .. } => None,
        }
    }

    pub fn residual(&self) -> Option<&PairSource> {
        match &self.outcome {
            RoundOutcome::Success { .. } => None,
            RoundOutcome::Failure { residual } => Some(residual),
        }
    }

    pub fn fidelity(&self) -> Option<f64> {
        match self.outcome {
            RoundOutcome::Success { fidelity, .. } => Some(fidelity),
            RoundOutcome::Failure { .. } => None,
        }
    }

    pub fn detections(&self) -> impl Iterator<Item = &MeasurementRecord> {
        self.transcript.iter().filter_map(|m| match m {
            Message::Detection { record, .. } => Some(record),
            _ => None,
        })
    }
}

fn check_parties(parties: usize, slots_needed: usize) -> Result<()> {
    if parties < 2 {
        return Err(Error::InvalidParameter("at least two parties are required"));
    }
    if slots_needed > MAX_PHOTONS {
        return Err(Error::TooManyPhotons {
            requested: slots_needed,
            max: MAX_PHOTONS,
        });
    }
    Ok(())
}

/// `H^N V^N` and `V^N H^N`: the two kets of a residual block.
fn residual_kets(parties: usize) -> Result<(BasisLabel, BasisLabel)> {
    let h = [Polarization::H].repeat(parties);
    let v = [Polarization::V].repeat(parties);
    Ok((
        BasisLabel::new(&[&h[..], &v[..]].concat())?,
        BasisLabel::new(&[&v[..], &h[..]].concat())?,
    ))
}

/// `a|H^N V^N⟩ + b|V^N H^N⟩`.
pub fn residual_state(res: &PairSource, parties: usize) -> Result<TaggedState> {
    check_parties(parties, 2 * parties)?;
    let (x, y) = residual_kets(parties)?;
    TaggedState::two_term(x, res.alpha(), y, res.beta())
}

fn read_residual(
    state: &TaggedState,
    first: &BasisLabel,
    second: &BasisLabel,
) -> Result<PairSource> {
    debug_assert!(state
        .branches()
        .all(|(l, t, _)| t == 0 && (l == *first || l == *second)));
    PairSource::normalized(state.amplitude(first, 0), state.amplitude(second, 0))
}

/// Rotates the `sacrificed` slots by R45, detects them, corrects the
/// announced sign on party 0 and drops the detected photons.
fn detect_and_correct<C: OutcomeChooser + ?Sized>(
    state: TaggedState,
    sacrificed: Range<usize>,
    parties: usize,
    chooser: &mut C,
    transcript: &mut Vec<Message>,
) -> Result<(TaggedState, BellSign)> {
    let slots: Vec<usize> = sacrificed.collect();
    let mut s = state;
    let mut records = Vec::with_capacity(slots.len());
    // rotating just before each detection keeps the branch count linear
    for &slot in &slots {
        let rotated = s.apply_single(slot, &r45())?;
        let (record, collapsed) = rotated.measure_with(slot, MeasurementBasis::HV, chooser)?;
        transcript.push(Message::Detection {
            party: slot % parties,
            record,
        });
        records.push(record);
        s = collapsed;
    }
    let sign = classify_sign(&records);
    let mut s = correct_phase(&s, CORRECTING_PARTY, sign)?;
    // highest slot first so lower indices stay valid
    for record in records.iter().rev() {
        s = s.detach(record)?;
    }
    Ok((s, sign))
}

fn finish_success<C: OutcomeChooser + ?Sized>(
    state: TaggedState,
    sacrificed: Range<usize>,
    parties: usize,
    chooser: &mut C,
    transcript: &mut Vec<Message>,
) -> Result<RoundOutcome> {
    let (output, sign) = detect_and_correct(state, sacrificed, parties, chooser, transcript)?;
    let fidelity = output.fidelity(&TaggedState::ghz(parties, true)?)?;
    Ok(RoundOutcome::Success {
        output,
        sign,
        fidelity,
    })
}

fn announce(transcript: &mut Vec<Message>, outcome: ParityOutcome) -> bool {
    let keep = outcome.is_even_parity();
    transcript.push(Message::Parity {
        party: QND_PARTY,
        outcome,
    });
    transcript.push(Message::Instruction {
        party: QND_PARTY,
        keep,
    });
    keep
}

/// Primary round on `joint`, two `N`-photon GHZ-class states side by side.
fn primary_on<C: OutcomeChooser + ?Sized>(
    joint: &TaggedState,
    parties: usize,
    mode: ParityMode,
    chooser: &mut C,
    transcript: &mut Vec<Message>,
) -> Result<RoundOutcome> {
    let second: Vec<usize> = (parties..2 * parties).collect();
    let rotated = joint.apply_each(&second, &r90())?;
    let (outcome, collapsed) =
        parity_check_with(&rotated, QND_PARTY, parties + QND_PARTY, mode, chooser)?;
    if announce(transcript, outcome) {
        finish_success(
            collapsed,
            parties..2 * parties,
            parties,
            chooser,
            transcript,
        )
    } else {
        let (x, y) = residual_kets(parties)?;
        Ok(RoundOutcome::Failure {
            residual: read_residual(&collapsed, &x, &y)?,
        })
    }
}

/// One primary round from two fresh copies of `src` shared by `parties`.
///
/// With [`ParityMode::TwoClass`] a failure leaves the coherent residual
/// `(α², β²)`. With [`ParityMode::ThreeClass`] the 2θ / 0 readouts collapse
/// it onto a single product ket, reported as a residual `(1, 0)` or `(0, 1)`
/// up to phase.
pub fn primary_round<C: OutcomeChooser + ?Sized>(
    src: &PairSource,
    parties: usize,
    mode: ParityMode,
    chooser: &mut C,
) -> Result<RoundResult> {
    check_parties(parties, 2 * parties)?;
    let copy = TaggedState::ghz_class(src, parties)?;
    let joint = copy.tensor(&copy)?;
    let mut transcript = Vec::new();
    let outcome = primary_on(&joint, parties, mode, chooser, &mut transcript)?;
    Ok(RoundResult {
        outcome,
        transcript,
    })
}

/// Detects the second-copy photons of a residual block and corrects party
/// 0, leaving `a|H…H⟩ + b|V…V⟩` on the first `N` slots.
fn reduce_residual<C: OutcomeChooser + ?Sized>(
    res: &PairSource,
    parties: usize,
    chooser: &mut C,
    transcript: &mut Vec<Message>,
) -> Result<TaggedState> {
    let block = residual_state(res, parties)?;
    let (reduced, _) =
        detect_and_correct(block, parties..2 * parties, parties, chooser, transcript)?;
    Ok(reduced)
}

/// One recycling round on two residual blocks.
pub fn recycle_round<C: OutcomeChooser + ?Sized>(
    first: &PairSource,
    second: &PairSource,
    parties: usize,
    strategy: Strategy,
    chooser: &mut C,
) -> Result<RoundResult> {
    let mut transcript = Vec::new();
    let outcome = match strategy {
        Strategy::FullState => {
            check_parties(parties, 4 * parties)?;
            let block = 2 * parties;
            let all: Vec<usize> = (0..block).collect();
            let left = residual_state(first, parties)?;
            let right = residual_state(second, parties)?.apply_each(&all, &r90())?;
            let joint = left.tensor(&right)?;
            let (outcome, collapsed) = parity_check_with(
                &joint,
                parties + QND_PARTY,
                block + parties + QND_PARTY,
                ParityMode::TwoClass,
                chooser,
            )?;
            if announce(&mut transcript, outcome) {
                finish_success(
                    collapsed,
                    parties..2 * block,
                    parties,
                    chooser,
                    &mut transcript,
                )?
            } else {
                let (x, y) = residual_kets(parties)?;
                let xy = BasisLabel::new(
                    &x.polarizations()
                        .chain(y.polarizations())
                        .collect::<Vec<_>>(),
                )?;
                let yx = BasisLabel::new(
                    &y.polarizations()
                        .chain(x.polarizations())
                        .collect::<Vec<_>>(),
                )?;
                RoundOutcome::Failure {
                    residual: read_residual(&collapsed, &xy, &yx)?,
                }
            }
        }
        Strategy::MeasureAndReduce => {
            check_parties(parties, 2 * parties)?;
            let a = reduce_residual(first, parties, chooser, &mut transcript)?;
            let b = reduce_residual(second, parties, chooser, &mut transcript)?;
            let joint = a.tensor(&b)?;
            primary_on(
                &joint,
                parties,
                ParityMode::TwoClass,
                chooser,
                &mut transcript,
            )?
        }
    };
    Ok(RoundResult {
        outcome,
        transcript,
    })
}

/// Primary two-pair round with a θ = π readout.
pub fn concentrate_once<R: Rng + ?Sized>(src: &PairSource, rng: &mut R) -> Result<RoundResult> {
    concentrate_ghz(src, 2, rng)
}

/// Primary round for `parties`-photon GHZ-class sources with a θ = π readout.
pub fn concentrate_ghz<R: Rng + ?Sized>(
    src: &PairSource,
    parties: usize,
    rng: &mut R,
) -> Result<RoundResult> {
    primary_round(src, parties, ParityMode::TwoClass, &mut BornSampler(rng))
}

/// Recycles two identical two-pair residuals.
pub fn recycle_once<R: Rng + ?Sized>(
    res: &PairSource,
    strategy: Strategy,
    rng: &mut R,
) -> Result<RoundResult> {
    ghz_recycle_once(res, 2, strategy, rng)
}

pub fn ghz_recycle_once<R: Rng + ?Sized>(
    res: &PairSource,
    parties: usize,
    strategy: Strategy,
    rng: &mut R,
) -> Result<RoundResult> {
    recycle_round(res, res, parties, strategy, &mut BornSampler(rng))
}

fn collect_branches(leaves: Vec<Branch<Result<RoundResult>>>) -> Result<Vec<Branch<RoundResult>>> {
    leaves
        .into_iter()
        .map(|b| {
            b.value.map(|value| Branch {
                probability: b.probability,
                choices: b.choices,
                value,
            })
        })
        .collect()
}

/// Every outcome path of a primary round with its exact probability.
pub fn enumerate_primary(
    src: &PairSource,
    parties: usize,
    mode: ParityMode,
) -> Result<Vec<Branch<RoundResult>>> {
    collect_branches(enumerate(|c| primary_round(src, parties, mode, c)))
}

/// Every outcome path of a recycling round on two copies of `res`.
pub fn enumerate_recycle(
    res: &PairSource,
    parties: usize,
    strategy: Strategy,
) -> Result<Vec<Branch<RoundResult>>> {
    collect_branches(enumerate(|c| recycle_round(res, res, parties, strategy, c)))
}

/// Total probability of the successful leaves.
pub fn success_probability(branches: &[Branch<RoundResult>]) -> f64 {
    branches
        .iter()
        .filter(|b| b.value.success())
        .map(|b| b.probability)
        .sum()
}

/// Residual left by the failed leaves, if any fail. All failing leaves of a
/// θ = π round share one residual.
pub fn failure_residual(branches: &[Branch<RoundResult>]) -> Option<PairSource> {
    branches.iter().find_map(|b| b.value.residual().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EPS_EXACT;
    use num_complex::Complex64;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    fn src(alpha: f64) -> PairSource {
        PairSource::from_real_alpha(alpha).unwrap()
    }

    #[test]
    fn symmetric_source_succeeds_half_the_time() {
        let leaves = enumerate_primary(&PairSource::symmetric(), 2, ParityMode::TwoClass).unwrap();
        assert!((success_probability(&leaves) - 0.5).abs() < EPS_EXACT);
        for leaf in leaves.iter().filter(|l| l.value.success()) {
            assert!((leaf.value.fidelity().unwrap() - 1.0).abs() < EPS_EXACT);
        }
    }

    #[test]
    fn product_source_never_succeeds() {
        let leaves = enumerate_primary(&src(1.0), 2, ParityMode::TwoClass).unwrap();
        assert_eq!(success_probability(&leaves), 0.0);
        let mut rng = SmallRng::seed_from_u64(0);
        for _ in 0..50 {
            assert!(!concentrate_once(&src(1.0), &mut rng).unwrap().success());
        }
    }

    #[test]
    fn uneven_source_probability_and_residual() {
        let leaves = enumerate_primary(&src(0.6), 2, ParityMode::TwoClass).unwrap();
        assert!((success_probability(&leaves) - 0.4608).abs() < EPS_EXACT);
        let r = failure_residual(&leaves).unwrap();
        let norm = libm::sqrt(0.36 * 0.36 + 0.64 * 0.64);
        assert!((r.alpha() - Complex64::new(0.36 / norm, 0.0)).norm() < EPS_EXACT);
        assert!((r.beta() - Complex64::new(0.64 / norm, 0.0)).norm() < EPS_EXACT);
    }

    #[test]
    fn three_class_failure_is_product() {
        let leaves = enumerate_primary(&src(0.6), 2, ParityMode::ThreeClass).unwrap();
        assert!((success_probability(&leaves) - 0.4608).abs() < EPS_EXACT);
        for leaf in leaves.iter().filter(|l| !l.value.success()) {
            let r = leaf.value.residual().unwrap();
            assert!(r.alpha().norm() < EPS_EXACT || r.beta().norm() < EPS_EXACT);
        }
    }

    #[test]
    fn recycle_examples() {
        let sym = PairSource::symmetric().squared().unwrap();
        for strategy in [Strategy::FullState, Strategy::MeasureAndReduce] {
            let leaves = enumerate_recycle(&sym, 2, strategy).unwrap();
            assert!((success_probability(&leaves) - 0.5).abs() < EPS_EXACT);
        }
        let res = src(0.6).squared().unwrap();
        let p_full = success_probability(&enumerate_recycle(&res, 2, Strategy::FullState).unwrap());
        let p_reduce =
            success_probability(&enumerate_recycle(&res, 2, Strategy::MeasureAndReduce).unwrap());
        assert!((p_full - 0.365_170_072_8).abs() < 1e-9);
        assert!((p_full - p_reduce).abs() < EPS_EXACT);
    }

    #[test]
    fn full_state_success_measures_six_photons() {
        let res = src(0.6).squared().unwrap();
        for leaf in enumerate_recycle(&res, 2, Strategy::FullState).unwrap() {
            let t = &leaf.value.transcript;
            let parities = t
                .iter()
                .filter(|m| matches!(m, Message::Parity { .. }))
                .count();
            assert_eq!(parities, 1);
            if leaf.value.success() {
                assert_eq!(leaf.value.detections().count(), 6);
                assert!((leaf.value.fidelity().unwrap() - 1.0).abs() < EPS_EXACT);
            } else {
                assert_eq!(leaf.value.detections().count(), 0);
            }
        }
    }

    #[test]
    fn ghz_probability_is_party_independent() {
        for parties in 2..=4 {
            let leaves = enumerate_primary(&src(0.6), parties, ParityMode::TwoClass).unwrap();
            assert!((success_probability(&leaves) - 0.4608).abs() < EPS_EXACT);
            for leaf in leaves.iter().filter(|l| l.value.success()) {
                assert_eq!(leaf.value.output().unwrap().photon_count(), parties);
                assert!((leaf.value.fidelity().unwrap() - 1.0).abs() < EPS_EXACT);
            }
        }
    }

    #[test]
    fn odd_v_count_announces_minus() {
        let leaves = enumerate_primary(&PairSource::symmetric(), 4, ParityMode::TwoClass).unwrap();
        let mut seen_minus = false;
        for leaf in leaves.iter().filter(|l| l.value.success()) {
            let vs = leaf
                .value
                .detections()
                .filter(|r| r.outcome == crate::qstate::Outcome::Minus)
                .count();
            let sign = match leaf.value.outcome {
                RoundOutcome::Success { sign, .. } => sign,
                _ => unreachable!(),
            };
            assert_eq!(sign == BellSign::Minus, vs % 2 == 1);
            seen_minus |= sign == BellSign::Minus;
        }
        assert!(seen_minus);
    }

    #[test]
    fn rejects_single_party() {
        let mut rng = SmallRng::seed_from_u64(0);
        assert!(concentrate_ghz(&src(0.6), 1, &mut rng).is_err());
        assert!(ghz_recycle_once(&src(0.6), 1, Strategy::FullState, &mut rng).is_err());
        assert!(ghz_recycle_once(&src(0.6), 17, Strategy::FullState, &mut rng).is_err());
    }
}
