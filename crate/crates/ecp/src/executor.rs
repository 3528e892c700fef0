use kerr_ecp_core::montecarlo::TrialExecutor;
use rayon::prelude::*;

/// Runs trials on the rayon global pool. Results come back in index order,
/// so reports match [`Sequential`](kerr_ecp_core::montecarlo::Sequential)
/// exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl TrialExecutor for Parallel {
    fn run<T, F>(&self, trials: u64, trial: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        let n = usize::try_from(trials).expect("trial count exceeds the address space");
        (0..n).into_par_iter().map(|i| trial(i as u64)).collect()
    }
}
