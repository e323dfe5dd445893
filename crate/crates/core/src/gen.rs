//! Random instance sampling for tests, property campaigns and the `gen`
//! subcommand. Windows skew narrow so that contention (and with it the
//! partition path of the solver) shows up often.

use crate::fdos::first_level_feasible;
use crate::model::{AssignmentProblem, ModelError, SlotWindow};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("no first-level-feasible instance found in {0} attempts")]
    RejectionBudget(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transport(#[from] crate::transport::TransportError),
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub num_onus: usize,
    pub num_slots: u32,
    /// Probability that an ONU gets a forced singleton window.
    pub forced_prob: f64,
    /// Rejection-sample until the strict transportation solve at cap
    /// `ceil(N / M)` is feasible.
    pub feasible_only: bool,
    pub rejection_budget: u32,
}

impl GenOptions {
    pub fn new(num_onus: usize, num_slots: u32) -> Self {
        GenOptions {
            num_onus,
            num_slots,
            forced_prob: 0.2,
            feasible_only: false,
            rejection_budget: 10_000,
        }
    }
}

pub fn random_windows(rng: &mut impl Rng, opts: &GenOptions) -> Vec<SlotWindow> {
    (0..opts.num_onus)
        .map(|_| {
            let m = opts.num_slots;
            if rng.random_bool(opts.forced_prob) {
                SlotWindow::Forced(rng.random_range(0..m))
            } else {
                let lb = rng.random_range(0..m);
                let span = m - 1 - lb;
                // Two draws, keep the smaller: narrow windows dominate.
                let width = rng.random_range(0..=span).min(rng.random_range(0..m));
                SlotWindow::Range { lb, ub: lb + width }
            }
        })
        .collect()
}

pub fn random_problem(
    rng: &mut impl Rng,
    opts: &GenOptions,
) -> Result<AssignmentProblem, GenError> {
    for _ in 0..opts.rejection_budget.max(1) {
        let windows = random_windows(rng, opts);
        let p = AssignmentProblem::from_windows(windows, 0, opts.num_slots, None, None)?;
        if !opts.feasible_only || first_level_feasible(&p)? {
            return Ok(p);
        }
    }
    Err(GenError::RejectionBudget(opts.rejection_budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn windows_are_reproducible_under_seed() {
        let opts = GenOptions::new(6, 5);
        let a = random_windows(&mut ChaCha8Rng::seed_from_u64(7), &opts);
        let b = random_windows(&mut ChaCha8Rng::seed_from_u64(7), &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn feasible_only_instances_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut opts = GenOptions::new(8, 6);
        opts.feasible_only = true;
        for _ in 0..50 {
            let p = random_problem(&mut rng, &opts).unwrap();
            assert!(first_level_feasible(&p).unwrap());
        }
    }
}
