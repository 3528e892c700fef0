//! Dense state-vector oracle: `2^n` amplitudes, bit `i` of the index set when
//! photon `i` is V. Shares nothing with the tagged-branch representation.

#![allow(dead_code)]

use kerr_ecp_core::qstate::TaggedState;
use kerr_ecp_core::Complex64;

pub const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub amp: Vec<Complex64>,
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl Dense {
    /// `a|0…0⟩ + b|1…1⟩` over `n` photons.
    pub fn ghz_class(n: usize, a: Complex64, b: Complex64) -> Self {
        let mut amp = vec![c(0.0); 1 << n];
        amp[0] += a;
        amp[(1 << n) - 1] += b;
        Self { n, amp }
    }

    pub fn kron(&self, other: &Dense) -> Dense {
        let n = self.n + other.n;
        let mut amp = vec![c(0.0); 1 << n];
        for (i, a) in self.amp.iter().enumerate() {
            for (j, b) in other.amp.iter().enumerate() {
                amp[i | j << self.n] = a * b;
            }
        }
        Dense { n, amp }
    }

    /// `m[out][in]` on photon `q`.
    pub fn apply<T: Into<Complex64> + Copy>(&self, q: usize, m: [[T; 2]; 2]) -> Dense {
        let mut amp = vec![c(0.0); self.amp.len()];
        for (i, a) in self.amp.iter().enumerate() {
            let bit = (i >> q) & 1;
            for (out, row) in m.iter().enumerate() {
                let j = (i & !(1 << q)) | out << q;
                amp[j] += a * row[bit].into();
            }
        }
        Dense { n: self.n, amp }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Zeroes indices failing `keep`; returns the kept probability and the
    /// renormalized vector.
    pub fn project(&self, keep: impl Fn(usize) -> bool) -> (f64, Dense) {
        let mut amp = self.amp.clone();
        for (i, a) in amp.iter_mut().enumerate() {
            if !keep(i) {
                *a = c(0.0);
            }
        }
        let p: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            amp.iter_mut().for_each(|a| *a *= s);
        }
        (p, Dense { n: self.n, amp })
    }

    pub fn bit(i: usize, q: usize) -> usize {
        (i >> q) & 1
    }

    /// Conditional state of the photons in `keep` given that every other
    /// photon is found in the computational state given by `pattern` bits.
    pub fn condition(&self, keep: &[usize], pattern: &[(usize, usize)]) -> (f64, Dense) {
        let m = keep.len();
        let mut amp = vec![c(0.0); 1 << m];
        for (i, a) in self.amp.iter().enumerate() {
            if pattern.iter().all(|&(q, b)| Self::bit(i, q) == b) {
                let mut k = 0;
                for (slot, &q) in keep.iter().enumerate() {
                    k |= Self::bit(i, q) << slot;
                }
                amp[k] += a;
            }
        }
        let p: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        let s = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
        (
            p,
            Dense {
                n: m,
                amp: amp.into_iter().map(|a| a * s).collect(),
            },
        )
    }

    pub fn fidelity(&self, other: &Dense) -> f64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn from_tagged(s: &TaggedState) -> Dense {
        assert!(s.tags_are_zero());
        let n = s.photon_count();
        let mut amp = vec![c(0.0); 1 << n];
        for (label, _, a) in s.branches() {
            let mut k = 0;
            for (q, p) in label.polarizations().enumerate() {
                if p == kerr_ecp_core::qstate::Polarization::V {
                    k |= 1 << q;
                }
            }
            amp[k] += a;
        }
        Dense { n, amp }
    }
}

pub const R90: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
pub const R45: [[f64; 2]; 2] = [[S, S], [S, -S]];
