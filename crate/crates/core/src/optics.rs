//! Wave plates, the phase corrector and the detector sign rule.
//!
//! Spatial routing through PBSs into detectors D1–D4 is folded into an R45
//! rotation followed by an HV measurement; the coincidence pattern then reduces
//! to the parity of V (minus) outcomes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qstate::{MeasurementRecord, Outcome, TaggedState, Unitary2};
use crate::Result;

const S: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellSign {
    /// φ⁺ / GHZ⁺
    Plus,
    /// φ⁻ / GHZ⁻
    Minus,
}

/// Half-wave plate at 90°: H ↔ V.
pub fn r90() -> Unitary2 {
    Unitary2::from_real_unchecked([[0.0, 1.0], [1.0, 0.0]])
}

/// 45° rotation: H → (H+V)/√2, V → (H−V)/√2.
pub fn r45() -> Unitary2 {
    Unitary2::from_real_unchecked([[S, S], [S, -S]])
}

/// diag(1, −1).
pub fn phase_flip() -> Unitary2 {
    Unitary2::from_real_unchecked([[1.0, 0.0], [0.0, -1.0]])
}

/// Arbitrary-phase corrector diag(1, e^{iφ}).
pub fn phase_shift(phi: f64) -> Unitary2 {
    let mut m = Unitary2::identity().matrix();
    m[1][1] = Complex64::new(libm::cos(phi), libm::sin(phi));
    Unitary2::new(m).expect("diagonal phase is unitary")
}

/// Plus when the number of minus outcomes is even.
pub fn classify_sign(outcomes: &[MeasurementRecord]) -> BellSign {
    let minus = outcomes
        .iter()
        .filter(|r| r.outcome == Outcome::Minus)
        .count();
    if minus % 2 == 0 {
        BellSign::Plus
    } else {
        BellSign::Minus
    }
}

pub fn correct_phase(s: &TaggedState, photon: usize, sign: BellSign) -> Result<TaggedState> {
    match sign {
        BellSign::Plus => s.apply_single(photon, &Unitary2::identity()),
        BellSign::Minus => s.apply_single(photon, &phase_flip()),
    }
}
