//! Exhaustive solver for desk-scale assignment instances: the ground truth
//! every approximation property is checked against.

use crate::model::{objective_parts, Assignment, AssignmentProblem, ModelError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {size} placements exceeds the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u64 },
    #[error("no feasible assignment exists")]
    Infeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Upper bound on the product of per-ONU arc counts; larger instances are
    /// refused instead of running unbounded.
    pub budget: u64,
    /// Branch-and-bound on the partial concentration cost. Admissible because
    /// the weight factor dominates, but turn it off when the exact explored
    /// count matters.
    pub prune: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { budget: 10_000_000, prune: true }
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub f: i64,
    pub f1: i64,
    pub f2: i64,
    /// Number of complete placements evaluated. Without pruning this equals
    /// the product of the per-ONU arc counts.
    pub explored: u64,
}

struct Search<'a> {
    p: &'a AssignmentProblem,
    cfg: OracleConfig,
    counts: Vec<i64>,
    slots: Vec<u32>,
    f1: i64,
    f2: i64,
    explored: u64,
    /// Largest remaining lateness reward from each suffix of ONUs.
    max_f2_suffix: Vec<i64>,
    best: Option<(i64, i64, Vec<u32>)>,
}

impl Search<'_> {
    fn descend(&mut self, onu: usize) {
        if onu == self.p.num_onus() {
            self.explored += 1;
            let f = objective_parts(self.f1, self.f2, self.p.big_w()).expect("checked at build");
            let better = match &self.best {
                None => true,
                Some((bf, bf1, bslots)) => (f, self.f1, &self.slots) < (*bf, *bf1, bslots),
            };
            if better {
                self.best = Some((f, self.f1, self.slots.clone()));
            }
            return;
        }
        if self.cfg.prune {
            if let Some((best_f, _, _)) = self.best {
                // Every remaining ONU raises f1 by at least 1; no remaining
                // choice can add more reward than the suffix maximum.
                let rest = (self.p.num_onus() - onu) as i64;
                let bound = objective_parts(
                    self.f1 + rest,
                    self.f2 + self.max_f2_suffix[onu],
                    self.p.big_w(),
                )
                .expect("checked at build");
                if bound > best_f {
                    return;
                }
            }
        }
        for &j in self.p.arcs_of(onu) {
            let dense = self.p.dense_index(j);
            let n = self.counts[dense];
            self.counts[dense] = n + 1;
            self.f1 += 2 * n + 1;
            self.f2 += self.p.weight(onu, j);
            self.slots.push(j);

            self.descend(onu + 1);

            self.slots.pop();
            self.f2 -= self.p.weight(onu, j);
            self.f1 -= 2 * n + 1;
            self.counts[dense] = n;
        }
    }
}

/// Enumerates the Cartesian product of per-ONU arc choices and returns the
/// objective minimiser; ties break toward smaller f1, then the
/// lexicographically smallest slot vector.
pub fn exact_solve(
    p: &AssignmentProblem,
    cfg: OracleConfig,
) -> Result<OracleResult, OracleError> {
    let mut size: u128 = 1;
    for i in 0..p.num_onus() {
        size = size.saturating_mul(p.arcs_of(i).len() as u128);
    }
    if size == 0 {
        return Err(OracleError::Infeasible);
    }
    if size > u128::from(cfg.budget) {
        return Err(OracleError::BudgetExceeded { size, budget: cfg.budget });
    }

    let n = p.num_onus();
    let mut max_f2_suffix = vec![0i64; n + 1];
    for onu in (0..n).rev() {
        let best_arc = p
            .arcs_of(onu)
            .iter()
            .map(|&j| p.weight(onu, j))
            .max()
            .expect("nonempty checked above");
        max_f2_suffix[onu] = max_f2_suffix[onu + 1] + best_arc;
    }

    let mut search = Search {
        p,
        cfg,
        counts: vec![0; p.num_slots() as usize],
        slots: Vec::with_capacity(n),
        f1: 0,
        f2: 0,
        explored: 0,
        max_f2_suffix,
        best: None,
    };
    search.descend(0);
    let (f, f1, slots) = search.best.expect("nonempty product explored");
    let assignment = Assignment::new(slots);
    let f2 = crate::model::f2(&assignment, p)?;
    debug_assert_eq!(objective_parts(f1, f2, p.big_w())?, f);
    Ok(OracleResult { assignment, f, f1, f2, explored: search.explored })
}

/// True when the oracle optimum packs no slot beyond `cap`. Callers verify
/// beforehand that the strict transport solve at `cap` is feasible.
pub fn optimum_respects_cap(
    p: &AssignmentProblem,
    cap: u64,
    cfg: OracleConfig,
) -> Result<bool, OracleError> {
    let opt = exact_solve(p, cfg)?;
    Ok(opt.assignment.counts(p).iter().all(|&n| n <= cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(arcs: Vec<Vec<u32>>, num_slots: u32, big_w: Option<i64>) -> AssignmentProblem {
        AssignmentProblem::from_arc_lists(arcs, 0, num_slots, None, big_w).unwrap()
    }

    #[test]
    fn pinned_three_onu_instance() {
        let p = problem(vec![vec![0], vec![0], vec![0, 1, 2]], 3, Some(100));
        let r = exact_solve(&p, OracleConfig::default()).unwrap();
        assert_eq!(r.f, 498);
        assert_eq!(r.assignment.slot_of(2), 2);
        assert_eq!(r.explored, 3);
    }

    #[test]
    fn singleton_instance() {
        let p = problem(vec![vec![1]], 3, Some(50));
        let r = exact_solve(&p, OracleConfig::default()).unwrap();
        assert_eq!(r.f1, 1);
        assert_eq!(r.f2, 1);
        assert_eq!(r.f, 50 - 1);
    }

    #[test]
    fn empty_arc_list_is_infeasible() {
        let p = problem(vec![vec![0], vec![]], 2, Some(50));
        assert!(matches!(
            exact_solve(&p, OracleConfig::default()),
            Err(OracleError::Infeasible)
        ));
    }

    #[test]
    fn budget_refusal() {
        let arcs = vec![vec![0, 1, 2, 3, 4]; 10];
        let p = problem(arcs, 5, None);
        let cfg = OracleConfig { budget: 1_000, prune: false };
        assert!(matches!(
            exact_solve(&p, cfg),
            Err(OracleError::BudgetExceeded { size: 9_765_625, .. })
        ));
    }

    #[test]
    fn explored_equals_arc_product_without_pruning() {
        let p = problem(vec![vec![0, 1], vec![0, 1, 2], vec![2]], 3, None);
        let cfg = OracleConfig { budget: 1_000, prune: false };
        let r = exact_solve(&p, cfg).unwrap();
        assert_eq!(r.explored, 2 * 3 * 1);
    }

    #[test]
    fn pruning_preserves_the_optimum_and_tiebreaks() {
        for arcs in [
            vec![vec![0, 1, 2], vec![0, 1], vec![1, 2], vec![0, 2]],
            vec![vec![0, 1], vec![0, 1], vec![0, 1], vec![0, 1]],
            vec![vec![2], vec![0, 1, 2], vec![0, 1, 2]],
        ] {
            let p = problem(arcs, 3, None);
            let pruned = exact_solve(&p, OracleConfig { budget: 10_000, prune: true }).unwrap();
            let full = exact_solve(&p, OracleConfig { budget: 10_000, prune: false }).unwrap();
            assert_eq!(pruned.f, full.f);
            assert_eq!(pruned.f1, full.f1);
            assert_eq!(pruned.assignment, full.assignment);
            assert!(pruned.explored <= full.explored);
        }
    }

    #[test]
    fn self_consistency() {
        let p = problem(vec![vec![0, 1], vec![0, 1], vec![0, 1, 2]], 3, None);
        let r = exact_solve(&p, OracleConfig::default()).unwrap();
        assert_eq!(r.f, objective_parts(r.f1, r.f2, p.big_w()).unwrap());
        assert!(r.assignment.respects_arcs(&p));
    }

    #[test]
    fn cap_check_on_matching_instance() {
        // Complete arcs, N = M: the optimum is a perfect matching.
        let p = problem(vec![vec![0, 1, 2]; 3], 3, None);
        assert!(optimum_respects_cap(&p, 1, OracleConfig::default()).unwrap());
    }
}
