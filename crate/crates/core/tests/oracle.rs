//! Cross-checks of the tagged-branch simulator against the dense oracle in
//! `common`.

mod common;

use common::{c, Dense, R45, R90};
use kerr_ecp_core::optics::{classify_sign, BellSign};
use kerr_ecp_core::protocol::{
    enumerate_primary, enumerate_recycle, success_probability, Strategy,
};
use kerr_ecp_core::qnd::ParityMode;
use kerr_ecp_core::qstate::{
    MeasurementBasis, MeasurementRecord, Outcome, PairSource, TaggedState,
};
use kerr_ecp_core::Complex64;

const TOL: f64 = 1e-12;

fn sources() -> Vec<PairSource> {
    let mut v: Vec<PairSource> = [0.1, 0.3, 0.5, 0.6, std::f64::consts::FRAC_1_SQRT_2, 0.9]
        .iter()
        .map(|&a| PairSource::from_real_alpha(a).unwrap())
        .collect();
    let phase = Complex64::from_polar(0.8, 1.1);
    v.push(PairSource::new(Complex64::new(0.6, 0.0), phase).unwrap());
    v
}

/// Two copies of an `n`-photon source after the R90 flips on the second copy.
fn dense_primary(src: &PairSource, n: usize) -> Dense {
    let copy = Dense::ghz_class(n, src.alpha(), src.beta());
    (n..2 * n).fold(copy.kron(&copy), |d, q| d.apply(q, R90))
}

fn expected_ghz(n: usize, sign: BellSign) -> Dense {
    let b = if sign == BellSign::Plus {
        common::S
    } else {
        -common::S
    };
    Dense::ghz_class(n, c(common::S), c(b))
}

fn records(bits: &[(usize, usize)]) -> Vec<MeasurementRecord> {
    bits.iter()
        .map(|&(q, b)| MeasurementRecord {
            photon: q,
            basis: MeasurementBasis::HV,
            outcome: if b == 0 {
                Outcome::Plus
            } else {
                Outcome::Minus
            },
            probability: 0.5,
        })
        .collect()
}

#[test]
fn tensor_matches_kronecker_product() {
    for src in sources() {
        let pair = TaggedState::from_pair(&src);
        let four = Dense::from_tagged(&pair.tensor(&pair).unwrap());
        let d = Dense::ghz_class(2, src.alpha(), src.beta());
        let oracle = d.kron(&d);
        for (a, b) in four.amp.iter().zip(&oracle.amp) {
            assert!((a - b).norm() < TOL);
        }
    }
}

#[test]
fn x_measurement_matches_rotated_projection() {
    let src = PairSource::new(c(0.6), c(0.8)).unwrap();
    let state = TaggedState::from_pair(&src);
    let outcomes = state.enumerate_measurement(0, MeasurementBasis::X).unwrap();
    // |±x⟩ on photon 0 is R45 followed by H/V detection
    let rotated = Dense::from_tagged(&state).apply(0, R45);
    for (rec, _) in &outcomes {
        let bit = if rec.outcome == Outcome::Plus { 0 } else { 1 };
        let (p, _) = rotated.condition(&[1], &[(0, bit)]);
        assert!((rec.probability - p).abs() < TOL);
        assert!((p - 0.5).abs() < TOL);
    }
}

#[test]
fn primary_round_matches_dense_oracle() {
    for n in 2..=4 {
        for src in sources() {
            let d = dense_primary(&src, n);
            // even parity on slots 1 and n + 1
            let (p_even, kept) = d.project(|i| Dense::bit(i, 1) == Dense::bit(i, n + 1));
            let leaves = enumerate_primary(&src, n, ParityMode::TwoClass).unwrap();
            assert!((success_probability(&leaves) - p_even).abs() < TOL);

            // every detection pattern of the second copy after R45
            let rotated = (n..2 * n).fold(kept, |d, q| d.apply(q, R45));
            let keep: Vec<usize> = (0..n).collect();
            for pattern in 0..1usize << n {
                let bits: Vec<(usize, usize)> =
                    (0..n).map(|k| (n + k, (pattern >> k) & 1)).collect();
                let (p, cond) = rotated.condition(&keep, &bits);
                if p < 1e-20 {
                    continue;
                }
                let sign = classify_sign(&records(&bits));
                assert!((cond.fidelity(&expected_ghz(n, sign)) - 1.0).abs() < TOL);

                // same leaf in the enumeration with probability p_even · p
                let leaf = leaves
                    .iter()
                    .find(|l| {
                        l.value.success()
                            && l.value
                                .detections()
                                .map(|r| (r.photon, (r.outcome == Outcome::Minus) as usize))
                                .eq(bits.iter().copied())
                    })
                    .unwrap();
                assert!((leaf.probability - p_even * p).abs() < TOL);
            }
        }
    }
}

#[test]
fn eight_photon_recycling_matches_dense_oracle() {
    for src in sources() {
        let res = src.squared().unwrap();
        // residual block a|HVHV…⟩ + b|VHVH…⟩ in slot order a1 b1 a3 b3
        let block = |a: Complex64, b: Complex64| {
            let mut amp = vec![c(0.0); 16];
            amp[0b1100] += a;
            amp[0b0011] += b;
            Dense { n: 4, amp }
        };
        let left = block(res.alpha(), res.beta());
        let right = (0..4).fold(block(res.alpha(), res.beta()), |d, q| d.apply(q, R90));
        let joint = left.kron(&right);
        let (p_even, kept) = joint.project(|i| Dense::bit(i, 3) == Dense::bit(i, 7));

        let leaves = enumerate_recycle(&res, 2, Strategy::FullState).unwrap();
        assert!((success_probability(&leaves) - p_even).abs() < TOL);

        let rotated = (2..8).fold(kept, |d, q| d.apply(q, R45));
        for pattern in 0..64usize {
            let bits: Vec<(usize, usize)> = (0..6).map(|k| (2 + k, (pattern >> k) & 1)).collect();
            let (p, cond) = rotated.condition(&[0, 1], &bits);
            if p < 1e-20 {
                continue;
            }
            let sign = classify_sign(&records(&bits));
            assert!((cond.fidelity(&expected_ghz(2, sign)) - 1.0).abs() < TOL);
        }
    }
}

#[test]
fn six_outcome_example_leaves_phi_plus() {
    // outcomes on a3 b3 a1' b1' a3' b3' = minus minus plus minus minus plus
    let sym = PairSource::symmetric().squared().unwrap();
    let leaves = enumerate_recycle(&sym, 2, Strategy::FullState).unwrap();
    let want = [1, 1, 0, 1, 1, 0];
    let leaf = leaves
        .iter()
        .find(|l| {
            l.value.success()
                && l.value
                    .detections()
                    .map(|r| (r.outcome == Outcome::Minus) as usize)
                    .eq(want.iter().copied())
        })
        .unwrap();
    let recs: Vec<_> = leaf.value.detections().copied().collect();
    assert_eq!(classify_sign(&recs), BellSign::Plus);
    let phi = TaggedState::ghz(2, true).unwrap();
    assert!((leaf.value.output().unwrap().fidelity(&phi).unwrap() - 1.0).abs() < TOL);
}
