//! Two-photon polarization parity QND built from two cross-Kerr media and a
//! homodyne readout of the probe.
//!
//! The first photon couples to the probe in its H mode and the second in its V
//! mode, so `|HH⟩` and `|VV⟩` both shift the probe by θ, `|HV⟩` by 2θ and
//! `|VH⟩` not at all. Even parity therefore always produces a nonzero shift,
//! which separates "two photons, same polarization" from an empty mode (a
//! vacuum leaves the probe unshifted). With θ = π the 2θ and 0 classes
//! coincide and the odd-parity subspace stays coherent.
//!
//! Readout is ideal: the phase classes are perfectly distinguishable and each
//! use consumes a fresh probe, so tags are cleared afterwards.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::outcomes::{BornSampler, OutcomeChooser};
use crate::qstate::{Polarization, TaggedState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParityMode {
    /// Generic θ: shifts θ, 2θ and 0 are told apart.
    ThreeClass,
    /// θ = π: only the parity of the tag is visible.
    TwoClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParityOutcome {
    /// Phase θ: even polarization parity.
    Shift1,
    /// Phase 2θ: `|HV⟩`.
    Shift2,
    /// No phase: `|VH⟩`.
    Shift0,
    /// Phase π (odd tag): even polarization parity.
    ShiftPi,
    /// Phase 0 mod 2π (even tag): odd polarization parity.
    NoShift,
}

impl ParityOutcome {
    pub fn mode(self) -> ParityMode {
        match self {
            ParityOutcome::Shift1 | ParityOutcome::Shift2 | ParityOutcome::Shift0 => {
                ParityMode::ThreeClass
            }
            ParityOutcome::ShiftPi | ParityOutcome::NoShift => ParityMode::TwoClass,
        }
    }

    /// True for the outcome that selects span{|HH⟩, |VV⟩}.
    pub fn is_even_parity(self) -> bool {
        matches!(self, ParityOutcome::Shift1 | ParityOutcome::ShiftPi)
    }

    fn matches_tag(self, tag: u32) -> bool {
        match self {
            ParityOutcome::Shift1 => tag == 1,
            ParityOutcome::Shift2 => tag == 2,
            ParityOutcome::Shift0 => tag == 0,
            ParityOutcome::ShiftPi => tag % 2 == 1,
            ParityOutcome::NoShift => tag % 2 == 0,
        }
    }
}

impl ParityMode {
    pub fn outcomes(self) -> &'static [ParityOutcome] {
        match self {
            ParityMode::ThreeClass => &[
                ParityOutcome::Shift1,
                ParityOutcome::Shift2,
                ParityOutcome::Shift0,
            ],
            ParityMode::TwoClass => &[ParityOutcome::ShiftPi, ParityOutcome::NoShift],
        }
    }
}

/// Increments the tag of every branch whose `photon` has polarization `pol`.
pub fn kerr_tag(s: &TaggedState, photon: usize, pol: Polarization) -> Result<TaggedState> {
    if photon >= s.photon_count() {
        return Err(Error::PhotonOutOfRange {
            index: photon,
            photon_count: s.photon_count(),
        });
    }
    Ok(s.retag(|label, tag| {
        if label.get(photon) == Some(pol) {
            tag + 1
        } else {
            tag
        }
    }))
}

/// Every readout class with nonzero probability, its probability, and the
/// renormalized untagged post-readout state.
pub fn enumerate_parity(
    s: &TaggedState,
    i: usize,
    j: usize,
    mode: ParityMode,
) -> Result<Vec<(ParityOutcome, f64, TaggedState)>> {
    if i == j {
        return Err(Error::SamePhoton(i));
    }
    if !s.tags_are_zero() {
        return Err(Error::NonZeroTags);
    }
    let tagged = kerr_tag(&kerr_tag(s, i, Polarization::H)?, j, Polarization::V)?;
    Ok(mode
        .outcomes()
        .iter()
        .filter_map(|&class| {
            tagged
                .postselect(|_, tag| class.matches_tag(tag))
                .map(|(p, state)| (class, p, state.retag(|_, _| 0)))
        })
        .collect())
}

pub fn parity_check<R: Rng + ?Sized>(
    s: &TaggedState,
    i: usize,
    j: usize,
    mode: ParityMode,
    rng: &mut R,
) -> Result<(ParityOutcome, TaggedState)> {
    parity_check_with(s, i, j, mode, &mut BornSampler(rng))
}

pub fn parity_check_with<C: OutcomeChooser + ?Sized>(
    s: &TaggedState,
    i: usize,
    j: usize,
    mode: ParityMode,
    chooser: &mut C,
) -> Result<(ParityOutcome, TaggedState)> {
    let mut classes = enumerate_parity(s, i, j, mode)?;
    let probs: Vec<f64> = classes.iter().map(|(_, p, _)| *p).collect();
    let pick = chooser.choose(&probs);
    let (class, _, state) = classes.swap_remove(pick);
    Ok((class, state))
}
