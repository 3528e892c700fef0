//! Outcome selection shared by sampled runs and exhaustive enumeration.
//!
//! Every probabilistic step in the simulator (photon detection, homodyne
//! readout) asks an [`OutcomeChooser`] to pick one of the nonzero-probability
//! outcomes. [`BornSampler`] draws from an RNG; [`enumerate`] replays a
//! procedure once per leaf of its outcome tree and reports each leaf with its
//! exact probability.

use alloc::vec::Vec;

use rand::Rng;

pub trait OutcomeChooser {
    /// Picks an index into `probabilities`. The slice is never empty and its
    /// entries sum to one up to rounding.
    fn choose(&mut self, probabilities: &[f64]) -> usize;
}

impl<C: OutcomeChooser + ?Sized> OutcomeChooser for &mut C {
    fn choose(&mut self, probabilities: &[f64]) -> usize {
        (**self).choose(probabilities)
    }
}

/// Samples outcomes with their Born probabilities from a uniform draw.
pub struct BornSampler<'a, R: ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> OutcomeChooser for BornSampler<'_, R> {
    fn choose(&mut self, probabilities: &[f64]) -> usize {
        let total: f64 = probabilities.iter().sum();
        let u: f64 = self.0.gen::<f64>() * total;
        let mut acc = 0.0;
        for (i, p) in probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probabilities.len() - 1
    }
}

/// One leaf of an enumerated outcome tree.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub probability: f64,
    pub choices: Vec<usize>,
    pub value: T,
}

struct Replay {
    path: Vec<usize>,
    arity: Vec<usize>,
    depth: usize,
    probability: f64,
}

impl OutcomeChooser for Replay {
    fn choose(&mut self, probabilities: &[f64]) -> usize {
        let d = self.depth;
        if d == self.path.len() {
            self.path.push(0);
            self.arity.push(probabilities.len());
        } else {
            // A replayed prefix must see the same branching structure.
            debug_assert_eq!(self.arity[d], probabilities.len());
        }
        self.depth += 1;
        let pick = self.path[d];
        self.probability *= probabilities[pick];
        pick
    }
}

/// Runs `procedure` once for every distinct sequence of choices it can make
/// and returns the leaves in lexicographic choice order.
///
/// The procedure must be deterministic given its choices.
pub fn enumerate<T, F>(mut procedure: F) -> Vec<Branch<T>>
where
    F: FnMut(&mut dyn OutcomeChooser) -> T,
{
    let mut leaves = Vec::new();
    let mut replay = Replay {
        path: Vec::new(),
        arity: Vec::new(),
        depth: 0,
        probability: 1.0,
    };
    loop {
        replay.depth = 0;
        replay.probability = 1.0;
        let value = procedure(&mut replay);
        replay.path.truncate(replay.depth);
        replay.arity.truncate(replay.depth);
        leaves.push(Branch {
            probability: replay.probability,
            choices: replay.path.clone(),
            value,
        });

        // advance the odometer
        loop {
            match replay.path.last_mut() {
                None => return leaves,
                Some(last) => {
                    let arity = *replay.arity.last().unwrap();
                    if *last + 1 < arity {
                        *last += 1;
                        break;
                    }
                    replay.path.pop();
                    replay.arity.pop();
                }
            }
        }
    }
}
