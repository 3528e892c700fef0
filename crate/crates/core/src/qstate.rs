//! Pure states of polarization photons whose branches carry an integer probe
//! tag.
//!
//! A tag `k` on a branch records that the coherent probe beam correlated with
//! that branch has accumulated a phase `kθ`. Tags are added by Kerr
//! interactions and consumed by homodyne readout (see [`crate::qnd`]); all
//! other operations leave them untouched.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::outcomes::{BornSampler, OutcomeChooser};
use crate::{Error, Result, EPS_EXACT, EPS_NORM, PRUNE_THRESHOLD};

/// Largest photon count a [`BasisLabel`] can address.
pub const MAX_PHOTONS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Computational-basis ket over a fixed number of photon slots.
///
/// Slot `i` is V when bit `i` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    len: u8,
    bits: u64,
}

impl BasisLabel {
    pub fn new(polarizations: &[Polarization]) -> Result<Self> {
        if polarizations.len() > MAX_PHOTONS {
            return Err(Error::TooManyPhotons {
                requested: polarizations.len(),
                max: MAX_PHOTONS,
            });
        }
        let bits = polarizations
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Polarization::V)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Ok(Self {
            len: polarizations.len() as u8,
            bits,
        })
    }

    /// All slots share one polarization.
    pub fn uniform(len: usize, pol: Polarization) -> Result<Self> {
        if len > MAX_PHOTONS {
            return Err(Error::TooManyPhotons {
                requested: len,
                max: MAX_PHOTONS,
            });
        }
        let bits = match pol {
            Polarization::H => 0,
            Polarization::V => mask(len),
        };
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, slot: usize) -> Option<Polarization> {
        (slot < self.len()).then(|| self.pol(slot))
    }

    fn pol(&self, slot: usize) -> Polarization {
        if self.bits >> slot & 1 == 1 {
            Polarization::V
        } else {
            Polarization::H
        }
    }

    fn with(self, slot: usize, pol: Polarization) -> Self {
        let bits = match pol {
            Polarization::H => self.bits & !(1 << slot),
            Polarization::V => self.bits | (1 << slot),
        };
        Self { bits, ..self }
    }

    fn concat(self, other: Self) -> Self {
        let bits = if self.len() == 64 {
            self.bits
        } else {
            self.bits | other.bits << self.len
        };
        Self {
            len: self.len + other.len,
            bits,
        }
    }

    fn without(self, slot: usize) -> Self {
        let low = self.bits & mask(slot);
        let high = if slot + 1 >= 64 {
            0
        } else {
            (self.bits >> (slot + 1)) << slot
        };
        Self {
            len: self.len - 1,
            bits: low | high,
        }
    }

    pub fn polarizations(&self) -> impl Iterator<Item = Polarization> + '_ {
        (0..self.len()).map(move |i| self.pol(i))
    }

    pub fn count(&self, pol: Polarization) -> usize {
        let v = self.bits.count_ones() as usize;
        match pol {
            Polarization::V => v,
            Polarization::H => self.len() - v,
        }
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.polarizations() {
            f.write_str(match p {
                Polarization::H => "H",
                Polarization::V => "V",
            })?;
        }
        Ok(())
    }
}

/// 2×2 complex unitary acting on one polarization qubit, stored as
/// `m[out][in]` over the ordered basis (H, V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2([[Complex64; 2]; 2]);

impl Unitary2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self(m);
        let deviation = u.unitarity_deviation();
        if deviation > EPS_EXACT || deviation.is_nan() {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub(crate) const fn from_real_unchecked(m: [[f64; 2]; 2]) -> Self {
        Self([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub const fn identity() -> Self {
        Self::from_real_unchecked([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.0
    }

    /// Largest entry of `U†U − I` in magnitude.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((dot - target).norm_sqr());
            }
        }
        libm::sqrt(worst)
    }

    pub fn then(&self, next: &Unitary2) -> Unitary2 {
        let (a, b) = (&next.0, &self.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2(out)
    }
}

/// Coefficients of a partially entangled source `α|H…H⟩ + β|V…V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSource {
    alpha: Complex64,
    beta: Complex64,
}

impl PairSource {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sqr - 1.0).abs() > EPS_NORM || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { alpha, beta })
    }

    /// Real source with `β = √(1 − α²)`.
    pub fn from_real_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]"));
        }
        let beta = libm::sqrt((1.0 - alpha * alpha).max(0.0));
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
    }

    pub fn symmetric() -> Self {
        Self {
            alpha: Complex64::new(FRAC_1_SQRT_2, 0.0),
            beta: Complex64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// Rescales an arbitrary nonzero coefficient pair to unit norm.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if norm_sqr.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) || !norm_sqr.is_finite()
        {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let s = 1.0 / libm::sqrt(norm_sqr);
        Ok(Self {
            alpha: alpha * s,
            beta: beta * s,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `(α², β²)` renormalized: the effective source left behind by a failed
    /// parity check.
    pub fn squared(&self) -> Result<Self> {
        Self::normalized(self.alpha * self.alpha, self.beta * self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    HV,
    X,
}

/// For HV `Plus` is H and `Minus` is V; for X they are `|±x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl MeasurementBasis {
    /// Components of the outcome eigenvector on (H, V).
    pub fn eigenvector(self, outcome: Outcome) -> [Complex64; 2] {
        let s = FRAC_1_SQRT_2;
        match (self, outcome) {
            (MeasurementBasis::HV, Outcome::Plus) => [ONE, ZERO],
            (MeasurementBasis::HV, Outcome::Minus) => [ZERO, ONE],
            (MeasurementBasis::X, Outcome::Plus) => [Complex64::new(s, 0.0); 2],
            (MeasurementBasis::X, Outcome::Minus) => {
                [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub photon: usize,
    pub basis: MeasurementBasis,
    pub outcome: Outcome,
    pub probability: f64,
}

type BranchKey = (BasisLabel, u32);

/// Normalized pure state over `photon_count` photons with tagged branches.
///
/// Values are immutable; every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedState {
    photon_count: usize,
    branches: BTreeMap<BranchKey, Complex64>,
}

impl TaggedState {
    /// The zero-photon state, identity for [`TaggedState::tensor`].
    pub fn vacuum() -> Self {
        let mut branches = BTreeMap::new();
        branches.insert((BasisLabel { len: 0, bits: 0 }, 0), ONE);
        Self {
            photon_count: 0,
            branches,
        }
    }

    pub fn basis(polarizations: &[Polarization]) -> Result<Self> {
        Self::from_terms(polarizations.len(), [(polarizations, ONE)])
    }

    /// Builds a state from `(polarizations, amplitude)` terms, all tags zero.
    /// Repeated kets accumulate. The result must already be normalized.
    pub fn from_terms<'a, I>(photon_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [Polarization], Complex64)>,
    {
        let mut branches = BTreeMap::new();
        for (pols, amp) in terms {
            if pols.len() != photon_count {
                return Err(Error::PhotonCountMismatch {
                    left: photon_count,
                    right: pols.len(),
                });
            }
            *branches.entry((BasisLabel::new(pols)?, 0)).or_insert(ZERO) += amp;
        }
        let state = Self {
            photon_count,
            branches,
        }
        .pruned();
        state.check_normalized()?;
        Ok(state)
    }

    /// `α|HH⟩ + β|VV⟩`.
    pub fn from_pair(src: &PairSource) -> Self {
        Self::ghz_class(src, 2).expect("two photons always fit")
    }

    /// `α|H…H⟩ + β|V…V⟩` over `photons` slots.
    pub fn ghz_class(src: &PairSource, photons: usize) -> Result<Self> {
        Self::two_term(
            BasisLabel::uniform(photons, Polarization::H)?,
            src.alpha,
            BasisLabel::uniform(photons, Polarization::V)?,
            src.beta,
        )
    }

    /// `(|H…H⟩ ± |V…V⟩)/√2`; `photons = 2` gives φ±.
    pub fn ghz(photons: usize, plus: bool) -> Result<Self> {
        let s = FRAC_1_SQRT_2;
        let src = PairSource::new(
            Complex64::new(s, 0.0),
            Complex64::new(if plus { s } else { -s }, 0.0),
        )?;
        Self::ghz_class(&src, photons)
    }

    pub(crate) fn two_term(
        first: BasisLabel,
        a: Complex64,
        second: BasisLabel,
        b: Complex64,
    ) -> Result<Self> {
        debug_assert_eq!(first.len(), second.len());
        let mut branches = BTreeMap::new();
        *branches.entry((first, 0)).or_insert(ZERO) += a;
        *branches.entry((second, 0)).or_insert(ZERO) += b;
        let state = Self {
            photon_count: first.len(),
            branches,
        }
        .pruned();
        state.check_normalized()?;
        Ok(state)
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn branches(&self) -> impl Iterator<Item = (BasisLabel, u32, Complex64)> + '_ {
        self.branches.iter().map(|(&(l, t), &a)| (l, t, a))
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn amplitude(&self, label: &BasisLabel, tag: u32) -> Complex64 {
        self.branches.get(&(*label, tag)).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn tags_are_zero(&self) -> bool {
        self.branches.keys().all(|&(_, t)| t == 0)
    }

    pub fn max_tag(&self) -> u32 {
        self.branches.keys().map(|&(_, t)| t).max().unwrap_or(0)
    }

    fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > EPS_NORM || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    fn check_photon(&self, photon: usize) -> Result<()> {
        if photon >= self.photon_count {
            return Err(Error::PhotonOutOfRange {
                index: photon,
                photon_count: self.photon_count,
            });
        }
        Ok(())
    }

    fn pruned(mut self) -> Self {
        self.branches.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        self
    }

    /// Joint state with `self` on slots `0..n` and `other` after it. Tags add.
    pub fn tensor(&self, other: &TaggedState) -> Result<TaggedState> {
        let photon_count = self.photon_count + other.photon_count;
        if photon_count > MAX_PHOTONS {
            return Err(Error::TooManyPhotons {
                requested: photon_count,
                max: MAX_PHOTONS,
            });
        }
        let mut branches = BTreeMap::new();
        for (&(l1, t1), &a1) in &self.branches {
            for (&(l2, t2), &a2) in &other.branches {
                *branches.entry((l1.concat(l2), t1 + t2)).or_insert(ZERO) += a1 * a2;
            }
        }
        Ok(Self {
            photon_count,
            branches,
        }
        .pruned())
    }

    pub fn apply_single(&self, photon: usize, u: &Unitary2) -> Result<TaggedState> {
        self.check_photon(photon)?;
        let deviation = u.unitarity_deviation();
        if deviation > EPS_EXACT {
            return Err(Error::NotUnitary { deviation });
        }
        let m = u.matrix();
        let mut branches = BTreeMap::new();
        for (&(label, tag), &amp) in &self.branches {
            let input = label.pol(photon).index();
            for out in [Polarization::H, Polarization::V] {
                let c = m[out.index()][input];
                if c != ZERO {
                    *branches
                        .entry((label.with(photon, out), tag))
                        .or_insert(ZERO) += c * amp;
                }
            }
        }
        Ok(Self {
            photon_count: self.photon_count,
            branches,
        }
        .pruned())
    }

    /// Same as [`apply_single`](Self::apply_single) on each listed photon in turn.
    pub fn apply_each(&self, photons: &[usize], u: &Unitary2) -> Result<TaggedState> {
        photons
            .iter()
            .try_fold(self.clone(), |s, &p| s.apply_single(p, u))
    }

    /// Every outcome of a projective measurement on one photon, with its Born
    /// probability and the renormalized post-measurement state. The measured
    /// photon stays in the state, collapsed onto the outcome eigenvector.
    /// Zero-probability outcomes are omitted.
    pub fn enumerate_measurement(
        &self,
        photon: usize,
        basis: MeasurementBasis,
    ) -> Result<Vec<(MeasurementRecord, TaggedState)>> {
        self.check_photon(photon)?;
        let mut out = Vec::with_capacity(2);
        for outcome in [Outcome::Plus, Outcome::Minus] {
            let e = basis.eigenvector(outcome);
            // ⟨e| on the photon, grouped by the rest of the ket and tag
            let mut reduced: BTreeMap<BranchKey, Complex64> = BTreeMap::new();
            for (&(label, tag), &amp) in &self.branches {
                let p = label.pol(photon);
                let w = e[p.index()].conj();
                if w != ZERO {
                    *reduced
                        .entry((label.with(photon, Polarization::H), tag))
                        .or_insert(ZERO) += w * amp;
                }
            }
            let probability: f64 = reduced.values().map(|a| a.norm_sqr()).sum();
            if libm::sqrt(probability) < PRUNE_THRESHOLD {
                continue;
            }
            let scale = 1.0 / libm::sqrt(probability);
            let mut branches = BTreeMap::new();
            for (&(label, tag), &amp) in &reduced {
                for pol in [Polarization::H, Polarization::V] {
                    let c = e[pol.index()];
                    if c != ZERO {
                        *branches
                            .entry((label.with(photon, pol), tag))
                            .or_insert(ZERO) += c * amp * scale;
                    }
                }
            }
            let state = Self {
                photon_count: self.photon_count,
                branches,
            }
            .pruned();
            out.push((
                MeasurementRecord {
                    photon,
                    basis,
                    outcome,
                    probability,
                },
                state,
            ));
        }
        Ok(out)
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        photon: usize,
        basis: MeasurementBasis,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, TaggedState)> {
        self.measure_with(photon, basis, &mut BornSampler(rng))
    }

    pub fn measure_with<C: OutcomeChooser + ?Sized>(
        &self,
        photon: usize,
        basis: MeasurementBasis,
        chooser: &mut C,
    ) -> Result<(MeasurementRecord, TaggedState)> {
        let mut outcomes = self.enumerate_measurement(photon, basis)?;
        let probs: Vec<f64> = outcomes.iter().map(|(r, _)| r.probability).collect();
        let pick = chooser.choose(&probs);
        Ok(outcomes.swap_remove(pick))
    }

    /// Removes a photon that has been collapsed by `record`, contracting it
    /// with the outcome eigenvector. Later slots shift down by one.
    pub fn detach(&self, record: &MeasurementRecord) -> Result<TaggedState> {
        let photon = record.photon;
        self.check_photon(photon)?;
        let e = record.basis.eigenvector(record.outcome);
        let mut branches = BTreeMap::new();
        for (&(label, tag), &amp) in &self.branches {
            let w = e[label.pol(photon).index()].conj();
            if w != ZERO {
                *branches.entry((label.without(photon), tag)).or_insert(ZERO) += w * amp;
            }
        }
        let state = Self {
            photon_count: self.photon_count - 1,
            branches,
        }
        .pruned();
        if (state.norm_sqr() - self.norm_sqr()).abs() > EPS_NORM {
            return Err(Error::NotSeparable { index: photon });
        }
        Ok(state)
    }

    /// `|⟨self|other⟩|²`; both states must be untagged and the same size.
    pub fn fidelity(&self, other: &TaggedState) -> Result<f64> {
        if self.photon_count != other.photon_count {
            return Err(Error::PhotonCountMismatch {
                left: self.photon_count,
                right: other.photon_count,
            });
        }
        if !self.tags_are_zero() || !other.tags_are_zero() {
            return Err(Error::NonZeroTags);
        }
        let overlap: Complex64 = self
            .branches
            .iter()
            .map(|(k, a)| a.conj() * other.branches.get(k).copied().unwrap_or(ZERO))
            .sum();
        Ok(overlap.norm_sqr().min(1.0))
    }

    /// New state with each branch's tag replaced by `f(label, tag)`.
    pub fn retag<F: Fn(&BasisLabel, u32) -> u32>(&self, f: F) -> TaggedState {
        let mut branches = BTreeMap::new();
        for (&(label, tag), &amp) in &self.branches {
            *branches.entry((label, f(&label, tag))).or_insert(ZERO) += amp;
        }
        Self {
            photon_count: self.photon_count,
            branches,
        }
        .pruned()
    }

    /// Keeps only branches satisfying `keep`, returning the kept probability
    /// and the renormalized state, or `None` when nothing survives.
    pub fn postselect<F: Fn(&BasisLabel, u32) -> bool>(
        &self,
        keep: F,
    ) -> Option<(f64, TaggedState)> {
        let kept: BTreeMap<_, _> = self
            .branches
            .iter()
            .filter(|(&(l, t), _)| keep(&l, t))
            .map(|(&k, &a)| (k, a))
            .collect();
        let probability: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        if kept.is_empty() || libm::sqrt(probability) < PRUNE_THRESHOLD {
            return None;
        }
        let scale = 1.0 / libm::sqrt(probability);
        let branches = kept.into_iter().map(|(k, a)| (k, a * scale)).collect();
        Some((
            probability,
            Self {
                photon_count: self.photon_count,
                branches,
            }
            .pruned(),
        ))
    }
}

/// Maps role names used in protocol descriptions (`a1`, `b3'`, …) to photon
/// slots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoleRegistry {
    roles: Vec<(String, usize)>,
}

impl RoleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, slot: usize) -> Self {
        self.roles.retain(|(n, _)| n != name);
        self.roles.push((String::from(name), slot));
        self
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.roles.iter().find(|(n, _)| n == name).map(|&(_, s)| s)
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, usize)> {
        self.roles.iter().map(|(n, s)| (n.as_str(), *s))
    }

    /// Two source pairs shared by Alice (`a`) and Bob (`b`). The second pair's
    /// photons are named `a3`/`b3` after their 90° rotation.
    pub fn two_pair() -> Self {
        Self::new()
            .with("a1", 0)
            .with("b1", 1)
            .with("a3", 2)
            .with("b3", 3)
    }

    /// Two residual four-photon systems side by side; the second uses primed
    /// names.
    pub fn two_residuals() -> Self {
        let mut r = Self::two_pair();
        for (name, slot) in [("a1'", 4), ("b1'", 5), ("a3'", 6), ("b3'", 7)] {
            r = r.with(name, slot);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::Polarization::{H, V};
    use super::*;
    use alloc::vec;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn amp(s: &TaggedState, pols: &[Polarization]) -> Complex64 {
        s.amplitude(&BasisLabel::new(pols).unwrap(), 0)
    }

    #[test]
    fn label_roundtrip_and_display() {
        let l = BasisLabel::new(&[H, V, V, H]).unwrap();
        assert_eq!(l.len(), 4);
        assert_eq!(l.get(1), Some(V));
        assert_eq!(l.get(4), None);
        assert_eq!(alloc::format!("{l}"), "HVVH");
        assert_eq!(
            l.without(1).polarizations().collect::<Vec<_>>(),
            vec![H, V, H]
        );
        assert_eq!(l.count(V), 2);
    }

    #[test]
    fn from_pair_examples() {
        let s = TaggedState::from_pair(&PairSource::symmetric());
        assert!((amp(&s, &[H, H]).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((amp(&s, &[V, V]).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let s = TaggedState::from_pair(&PairSource::from_real_alpha(1.0).unwrap());
        assert_eq!(s.branch_count(), 1);
        assert_eq!(amp(&s, &[H, H]), ONE);

        let src = PairSource::new(c(0.6), c(0.8)).unwrap();
        let s = TaggedState::from_pair(&src);
        assert_eq!(amp(&s, &[H, H]), c(0.6));
        assert_eq!(amp(&s, &[V, V]), c(0.8));
        assert!((s.norm_sqr() - 1.0).abs() < EPS_EXACT);
    }

    #[test]
    fn rejects_unnormalized_source() {
        assert!(matches!(
            PairSource::new(c(0.6), c(0.6)),
            Err(Error::NotNormalized { .. })
        ));
        assert!(PairSource::from_real_alpha(1.5).is_err());
    }

    #[test]
    fn tensor_examples() {
        let h = TaggedState::basis(&[H]).unwrap();
        let v = TaggedState::basis(&[V]).unwrap();
        assert_eq!(h.tensor(&v).unwrap(), TaggedState::basis(&[H, V]).unwrap());

        let src = PairSource::new(c(0.6), c(0.8)).unwrap();
        let pair = TaggedState::from_pair(&src);
        let four = pair.tensor(&pair).unwrap();
        // slots a1 b1 a2 b2
        assert!((amp(&four, &[H, H, H, H]) - c(0.36)).norm() < 1e-15);
        assert!((amp(&four, &[H, H, V, V]) - c(0.48)).norm() < 1e-15);
        assert!((amp(&four, &[V, V, H, H]) - c(0.48)).norm() < 1e-15);
        assert!((amp(&four, &[V, V, V, V]) - c(0.64)).norm() < 1e-15);
        assert_eq!(four.branch_count(), 4);

        assert_eq!(pair.tensor(&TaggedState::vacuum()).unwrap(), pair);
        assert_eq!(TaggedState::vacuum().tensor(&pair).unwrap(), pair);
    }

    #[test]
    fn tensor_adds_tags() {
        let h = TaggedState::basis(&[H]).unwrap().retag(|_, _| 2);
        let v = TaggedState::basis(&[V]).unwrap().retag(|_, _| 3);
        let hv = h.tensor(&v).unwrap();
        assert_eq!(hv.branches().next().unwrap().1, 5);
    }

    #[test]
    fn apply_single_rejects_bad_input() {
        let s = TaggedState::basis(&[H]).unwrap();
        assert!(matches!(
            s.apply_single(1, &Unitary2::identity()),
            Err(Error::PhotonOutOfRange { .. })
        ));
        let m = [[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!(matches!(Unitary2::new(m), Err(Error::NotUnitary { .. })));
        assert_eq!(s.apply_single(0, &Unitary2::identity()).unwrap(), s);
    }

    #[test]
    fn measurement_of_eigenstate() {
        let s = TaggedState::basis(&[H]).unwrap();
        let out = s.enumerate_measurement(0, MeasurementBasis::HV).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0.outcome, Outcome::Plus);
        assert_eq!(out[0].0.probability, 1.0);
        assert_eq!(out[0].1, s);
    }

    #[test]
    fn bell_measurement_in_hv() {
        let s = TaggedState::ghz(2, true).unwrap();
        let out = s.enumerate_measurement(0, MeasurementBasis::HV).unwrap();
        assert_eq!(out.len(), 2);
        for (rec, _) in &out {
            assert!((rec.probability - 0.5).abs() < EPS_EXACT);
        }
        assert_eq!(out[0].1, TaggedState::basis(&[H, H]).unwrap());
        assert_eq!(out[1].1, TaggedState::basis(&[V, V]).unwrap());
    }

    #[test]
    fn x_basis_measurement_of_uneven_pair() {
        let s = TaggedState::from_pair(&PairSource::new(c(0.6), c(0.8)).unwrap());
        let out = s.enumerate_measurement(0, MeasurementBasis::X).unwrap();
        assert_eq!(out.len(), 2);
        let r = FRAC_1_SQRT_2;
        let (plus, minus) = (&out[0], &out[1]);
        assert!((plus.0.probability - 0.5).abs() < EPS_EXACT);
        assert!((minus.0.probability - 0.5).abs() < EPS_EXACT);
        // |+x⟩ ⊗ (0.6|H⟩ + 0.8|V⟩)
        assert!((amp(&plus.1, &[H, H]) - c(0.6 * r)).norm() < 1e-15);
        assert!((amp(&plus.1, &[V, H]) - c(0.6 * r)).norm() < 1e-15);
        assert!((amp(&plus.1, &[H, V]) - c(0.8 * r)).norm() < 1e-15);
        assert!((amp(&plus.1, &[V, V]) - c(0.8 * r)).norm() < 1e-15);
        // |−x⟩ ⊗ (0.6|H⟩ − 0.8|V⟩)
        assert!((amp(&minus.1, &[V, H]) - c(-0.6 * r)).norm() < 1e-15);
        assert!((amp(&minus.1, &[V, V]) - c(0.8 * r)).norm() < 1e-15);

        let rest = plus.1.detach(&plus.0).unwrap();
        assert_eq!(rest.photon_count(), 1);
        assert!((amp(&rest, &[H]) - c(0.6)).norm() < 1e-15);
        assert!((amp(&rest, &[V]) - c(0.8)).norm() < 1e-15);
    }

    #[test]
    fn detach_refuses_entangled_photon() {
        let s = TaggedState::ghz(2, true).unwrap();
        let rec = MeasurementRecord {
            photon: 0,
            basis: MeasurementBasis::HV,
            outcome: Outcome::Plus,
            probability: 0.5,
        };
        assert!(matches!(
            s.detach(&rec),
            Err(Error::NotSeparable { index: 0 })
        ));
    }

    #[test]
    fn sampled_measurement_examples() {
        let v = TaggedState::basis(&[V]).unwrap();
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..100 {
            let (rec, _) = v.measure(0, MeasurementBasis::HV, &mut rng).unwrap();
            assert_eq!(rec.outcome, Outcome::Minus);
        }

        let bell = TaggedState::ghz(2, true).unwrap();
        let draw = |seed| {
            let mut rng = SmallRng::seed_from_u64(seed);
            (0..50)
                .map(|_| {
                    bell.measure(0, MeasurementBasis::HV, &mut rng)
                        .unwrap()
                        .0
                        .outcome
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn fidelity_examples() {
        let plus = TaggedState::ghz(2, true).unwrap();
        let minus = TaggedState::ghz(2, false).unwrap();
        assert!((plus.fidelity(&plus).unwrap() - 1.0).abs() < EPS_EXACT);
        assert!(minus.fidelity(&plus).unwrap() < EPS_EXACT);
        let hh = TaggedState::basis(&[H, H]).unwrap();
        let vv = TaggedState::basis(&[V, V]).unwrap();
        assert_eq!(hh.fidelity(&vv).unwrap(), 0.0);

        assert!(matches!(
            hh.fidelity(&TaggedState::basis(&[H]).unwrap()),
            Err(Error::PhotonCountMismatch { .. })
        ));
        assert_eq!(hh.retag(|_, _| 1).fidelity(&hh), Err(Error::NonZeroTags));
    }

    #[test]
    fn roles() {
        let r = RoleRegistry::two_residuals();
        assert_eq!(r.slot("b3"), Some(3));
        assert_eq!(r.slot("b3'"), Some(7));
        assert_eq!(r.slot("c1"), None);
    }
}
