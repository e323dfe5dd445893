//! FDOS: fair distribution of ONUs among slots.
//!
//! The solver relaxes the quadratic objective to a capacitated transportation
//! problem with per-slot cap `b = ceil(N / M)`. When that is feasible its
//! max-weight solution is taken as-is. When it is not, a penalized solve
//! seats as many ONUs as possible; the slot set then splits into the
//! under-filled side (plus every slot whose occupants could migrate there)
//! and the saturated rest, ONUs split along their placements, and the two
//! halves recurse independently. The optimum never crosses the split, which
//! is what makes the relative error of the final assignment at most 1.

use crate::model::{Assignment, AssignmentProblem};
use crate::transport::{
    solve_penalized, solve_strict, Row, SolveStatus, TransportError, TransportInstance,
};
use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FdosError {
    #[error("ONU {onu} has an empty arc set; wake it immediately instead of scheduling")]
    EmptyArcs { onu: usize },
    #[error("relative error is undefined when the optimal objective is zero")]
    UndefinedRatio,
    #[error(transparent)]
    Transport(#[from] TransportError),
    /// A structural invariant failed (both partition sides must stay
    /// non-empty, recursion depth is bounded by min(M, N)). Surfaced as a
    /// diagnostic rather than repaired silently.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// One application of the slot-set split, kept for diagnostics and tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionRecord {
    /// Slots that stayed under their cap in the penalized solve, closed under
    /// "an occupant of another slot could move here".
    pub slack_slots: Vec<u32>,
    /// The saturated remainder of the current slot set.
    pub full_slots: Vec<u32>,
    /// ONUs placed on slack slots.
    pub slack_onus: Vec<u32>,
    /// ONUs placed on full slots plus the ONUs the penalized solve could not
    /// seat inside their windows.
    pub full_onus: Vec<u32>,
    /// ONUs seated outside their windows by the penalized solve.
    pub unplaced: Vec<u32>,
    /// In-window placements per slot of the current slot set.
    pub per_slot: Vec<(u32, Vec<u32>)>,
    /// Cap in force when the split was taken.
    pub cap: u64,
}

/// Transportation solves performed at one recursion level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub strict_solves: u32,
    pub penalized_solves: u32,
}

#[derive(Clone, Debug)]
pub struct FdosResult {
    pub assignment: Assignment,
    pub recursion_depth: usize,
    pub partitions: Vec<PartitionRecord>,
    pub stats: Vec<LevelStats>,
}

/// Runs the recursive solver on a whole problem. Every ONU must carry at
/// least one arc; forced ONUs simply carry a singleton window and flow
/// through unchanged.
pub fn solve(p: &AssignmentProblem) -> Result<FdosResult, FdosError> {
    for onu in 0..p.num_onus() {
        if p.arcs_of(onu).is_empty() {
            return Err(FdosError::EmptyArcs { onu });
        }
    }
    let onus: Vec<u32> = (0..p.num_onus() as u32).collect();
    let slots: Vec<u32> = p.slot_labels().collect();
    let mut state = SolveState {
        p,
        slot_of: vec![u32::MAX; p.num_onus()],
        partitions: Vec::new(),
        stats: Vec::new(),
        depth: 0,
    };
    state.assign(&onus, &slots, 1)?;
    debug_assert!(state.slot_of.iter().all(|&s| s != u32::MAX));
    let bound = p.num_onus().min(p.num_slots() as usize);
    if state.depth > bound {
        return Err(FdosError::Invariant(format!(
            "recursion depth {} exceeds min(M, N) = {bound}",
            state.depth
        )));
    }
    Ok(FdosResult {
        assignment: Assignment::new(state.slot_of),
        recursion_depth: state.depth,
        partitions: state.partitions,
        stats: state.stats,
    })
}

struct SolveState<'a> {
    p: &'a AssignmentProblem,
    slot_of: Vec<u32>,
    partitions: Vec<PartitionRecord>,
    stats: Vec<LevelStats>,
    depth: usize,
}

impl SolveState<'_> {
    fn level_stats(&mut self, level: usize) -> &mut LevelStats {
        if self.stats.len() < level {
            self.stats.resize(level, LevelStats::default());
        }
        &mut self.stats[level - 1]
    }

    fn assign(&mut self, onus: &[u32], slots: &[u32], level: usize) -> Result<(), FdosError> {
        if onus.is_empty() {
            return Ok(());
        }
        if slots.is_empty() {
            return Err(FdosError::Invariant(
                "non-empty ONU set reached an empty slot set".into(),
            ));
        }
        self.depth = self.depth.max(level);
        let cap = (onus.len() as u64).div_ceil(slots.len() as u64);
        let cap_u32 = u32::try_from(cap).expect("cap fits: at most the ONU count");

        let rows: Vec<Row> = onus
            .iter()
            .map(|&i| Row {
                onu_id: i,
                arcs: self.p.arcs_of(i as usize)
                    .iter()
                    .filter(|j| slots.binary_search(j).is_ok())
                    .map(|&j| (j, self.p.weight(i as usize, j)))
                    .collect(),
            })
            .collect();
        if let Some(row) = rows.iter().find(|r| r.arcs.is_empty()) {
            return Err(FdosError::Invariant(format!(
                "ONU {} lost every arc when restricted to its branch",
                row.onu_id
            )));
        }
        let caps = vec![cap_u32; slots.len()];

        let strict =
            TransportInstance::strict(rows.clone(), slots.to_vec(), caps.clone());
        self.level_stats(level).strict_solves += 1;
        let solution = solve_strict(&strict)?;
        if let SolveStatus::Feasible(placement) = solution.status {
            for (&onu, &slot) in onus.iter().zip(&placement) {
                self.slot_of[onu as usize] = slot;
            }
            return Ok(());
        }

        let penalized = TransportInstance::penalized(
            rows,
            slots.to_vec(),
            caps,
            self.p.penalty(),
        );
        self.level_stats(level).penalized_solves += 1;
        let (relaxed, unplaced) = solve_penalized(&penalized)?;
        let SolveStatus::Feasible(placement) = relaxed.status else {
            return Err(FdosError::Invariant("penalized solve cannot be infeasible".into()));
        };
        if unplaced.is_empty() {
            return Err(FdosError::Invariant(
                "strict solve failed but the penalized solve seated everyone".into(),
            ));
        }

        // In-window placements per slot of the current set.
        let mut per_slot: Vec<(u32, Vec<u32>)> = slots.iter().map(|&s| (s, Vec::new())).collect();
        for (&onu, &slot) in onus.iter().zip(&placement) {
            if unplaced.contains(&onu) {
                continue;
            }
            let k = slots.binary_search(&slot).expect("placement stays inside the branch");
            per_slot[k].1.push(onu);
        }

        let part = partition(self.p, slots, cap, &per_slot, &unplaced)?;
        let record = part.clone();
        self.partitions.push(part);
        self.assign(&record.slack_onus, &record.slack_slots, level + 1)?;
        self.assign(&record.full_onus, &record.full_slots, level + 1)
    }
}

/// Splits the current slot and ONU sets after an infeasible strict solve.
///
/// Seeds the slack side with every slot left under its cap, then repeatedly
/// pulls in any slot whose occupant has an arc into the slack side; the
/// saturated remainder and its occupants (plus the unseated ONUs) form the
/// other side. No ONU of the full side has an arc into the slack side.
pub fn partition(
    p: &AssignmentProblem,
    slots: &[u32],
    cap: u64,
    per_slot: &[(u32, Vec<u32>)],
    unplaced: &[u32],
) -> Result<PartitionRecord, FdosError> {
    if unplaced.is_empty() {
        return Err(FdosError::Invariant(
            "partition requires at least one unseated ONU".into(),
        ));
    }
    let mut in_slack = vec![false; slots.len()];
    for (k, (_, occupants)) in per_slot.iter().enumerate() {
        if (occupants.len() as u64) < cap {
            in_slack[k] = true;
        }
    }

    let arc_into_slack = |onu: u32, in_slack: &[bool]| {
        p.arcs_of(onu as usize).iter().any(|j| {
            slots
                .binary_search(j)
                .map(|k| in_slack[k])
                .unwrap_or(false)
        })
    };

    let mut changed = true;
    while changed {
        changed = false;
        for k in 0..slots.len() {
            if in_slack[k] {
                continue;
            }
            if per_slot[k].1.iter().any(|&i| arc_into_slack(i, &in_slack)) {
                in_slack[k] = true;
                changed = true;
            }
        }
    }

    let mut slack_slots = Vec::new();
    let mut full_slots = Vec::new();
    let mut slack_onus = Vec::new();
    let mut full_onus = Vec::new();
    for (k, &slot) in slots.iter().enumerate() {
        if in_slack[k] {
            slack_slots.push(slot);
            slack_onus.extend_from_slice(&per_slot[k].1);
        } else {
            full_slots.push(slot);
            full_onus.extend_from_slice(&per_slot[k].1);
        }
    }
    full_onus.extend_from_slice(unplaced);
    slack_onus.sort_unstable();
    full_onus.sort_unstable();

    if slack_slots.is_empty() {
        return Err(FdosError::Invariant("slack side of the partition is empty".into()));
    }
    if full_slots.is_empty() {
        return Err(FdosError::Invariant("full side of the partition is empty".into()));
    }
    if let Some(&bad) = full_onus.iter().find(|&&i| arc_into_slack(i, &in_slack)) {
        return Err(FdosError::Invariant(format!(
            "ONU {bad} of the full side still reaches a slack slot"
        )));
    }

    Ok(PartitionRecord {
        slack_slots,
        full_slots,
        slack_onus,
        full_onus,
        unplaced: unplaced.to_vec(),
        per_slot: per_slot.to_vec(),
        cap,
    })
}

/// Cap in force at the root of the recursion.
pub fn root_cap(p: &AssignmentProblem) -> u64 {
    (p.num_onus() as u64).div_ceil(u64::from(p.num_slots()))
}

/// Whether the strict transportation solve at the root cap is feasible, i.e.
/// whether the solver would finish without partitioning.
pub fn first_level_feasible(p: &AssignmentProblem) -> Result<bool, TransportError> {
    let rows: Vec<Row> = (0..p.num_onus())
        .map(|i| Row {
            onu_id: i as u32,
            arcs: p.arcs_of(i).iter().map(|&j| (j, p.weight(i, j))).collect(),
        })
        .collect();
    let slots: Vec<u32> = p.slot_labels().collect();
    let caps = vec![u32::try_from(root_cap(p)).expect("cap fits"); slots.len()];
    let sol = solve_strict(&TransportInstance::strict(rows, slots, caps))?;
    Ok(matches!(sol.status, SolveStatus::Feasible(_)))
}

/// Smallest achievable concentration cost when `n` ONUs spread over `m`
/// slots: `k` slots hold `b - 1` and the rest hold `b = ceil(n / m)`.
pub fn min_occupancy_cost(n: u64, m: u64) -> u64 {
    assert!(n >= 1 && m >= 1);
    let b = n.div_ceil(m);
    let k = m * b - n;
    k * (b - 1) * (b - 1) + (m - k) * b * b
}

/// Largest concentration cost any cap-respecting solve can return: fill
/// `floor(n / b)` slots to the cap `b` and put the remainder in one slot.
pub fn max_capped_occupancy_cost(n: u64, b: u64) -> u64 {
    assert!(b >= 1);
    let full = n / b;
    let rest = n - full * b;
    full * b * b + rest * rest
}

/// Relative error `(f_approx - f_opt) / f_opt` as an exact rational.
pub fn approximation_ratio(approx: i64, opt: i64) -> Result<Ratio<i64>, FdosError> {
    if opt == 0 {
        return Err(FdosError::UndefinedRatio);
    }
    Ok(Ratio::new(approx - opt, opt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{f1, f2, objective};

    fn problem(arcs: Vec<Vec<u32>>, num_slots: u32, big_w: Option<i64>) -> AssignmentProblem {
        AssignmentProblem::from_arc_lists(arcs, 0, num_slots, None, big_w).unwrap()
    }

    #[test]
    fn first_level_feasible_instance() {
        let p = problem(vec![vec![0, 1], vec![0], vec![0]], 2, None);
        let r = solve(&p).unwrap();
        assert_eq!(r.assignment.slots(), &[1, 0, 0]);
        assert_eq!(f1(&r.assignment, &p).unwrap(), 5);
        assert_eq!(r.recursion_depth, 1);
        assert!(r.partitions.is_empty());
    }

    #[test]
    fn contended_instance_partitions_and_recurses() {
        let p = problem(vec![vec![0], vec![0], vec![0, 1, 2]], 3, Some(100));
        let r = solve(&p).unwrap();
        assert_eq!(r.assignment.slots(), &[0, 0, 2]);
        assert_eq!(f1(&r.assignment, &p).unwrap(), 5);
        assert_eq!(f2(&r.assignment, &p).unwrap(), 2);
        // Matches the exhaustive optimum of this instance.
        assert_eq!(objective(&r.assignment, &p).unwrap(), 498);
        assert_eq!(r.recursion_depth, 2);
        assert_eq!(r.partitions.len(), 1);
        let part = &r.partitions[0];
        assert_eq!(part.slack_slots, vec![1, 2]);
        assert_eq!(part.full_slots, vec![0]);
        assert_eq!(part.slack_onus, vec![2]);
        assert_eq!(part.full_onus, vec![0, 1]);
        assert_eq!(part.cap, 1);
    }

    #[test]
    fn square_instance_yields_perfect_matching() {
        for n in [1usize, 3, 5] {
            let arcs = vec![(0..n as u32).collect::<Vec<_>>(); n];
            let p = problem(arcs, n as u32, None);
            let r = solve(&p).unwrap();
            assert_eq!(f1(&r.assignment, &p).unwrap(), n as i64);
            assert_eq!(r.recursion_depth, 1);
            let mut seen = r.assignment.slots().to_vec();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), n);
        }
    }

    #[test]
    fn partition_follows_the_closure_rule() {
        let p = problem(vec![vec![0], vec![0], vec![0, 1, 2]], 3, Some(100));
        // One optimal penalized outcome: ONU0 on slot 0, ONU2 on slot 1,
        // ONU1 unseated.
        let per_slot = vec![(0, vec![0]), (1, vec![2]), (2, vec![])];
        let part = partition(&p, &[0, 1, 2], 1, &per_slot, &[1]).unwrap();
        assert_eq!(part.slack_slots, vec![1, 2]);
        assert_eq!(part.full_slots, vec![0]);
        assert_eq!(part.slack_onus, vec![2]);
        assert_eq!(part.full_onus, vec![0, 1]);
    }

    #[test]
    fn partition_without_migrations_keeps_the_seed() {
        // ONU0 pinned to slot 0, ONU1 pinned to slot 0 as well, slot 1 empty.
        let p = problem(vec![vec![0], vec![0]], 2, None);
        let per_slot = vec![(0, vec![0]), (1, vec![])];
        let part = partition(&p, &[0, 1], 1, &per_slot, &[1]).unwrap();
        assert_eq!(part.slack_slots, vec![1]);
        assert_eq!(part.full_slots, vec![0]);
    }

    #[test]
    fn partition_demands_an_unseated_onu() {
        let p = problem(vec![vec![0], vec![0]], 2, None);
        let per_slot = vec![(0, vec![0]), (1, vec![1])];
        assert!(matches!(
            partition(&p, &[0, 1], 1, &per_slot, &[]),
            Err(FdosError::Invariant(_))
        ));
    }

    #[test]
    fn empty_arc_set_is_an_input_error() {
        let p = AssignmentProblem::from_arc_lists(vec![vec![0], vec![]], 0, 2, None, None)
            .unwrap();
        assert!(matches!(solve(&p), Err(FdosError::EmptyArcs { onu: 1 })));
    }

    #[test]
    fn min_occupancy_cost_examples() {
        assert_eq!(min_occupancy_cost(5, 3), 9);
        assert_eq!(min_occupancy_cost(7, 3), 17);
        assert_eq!(min_occupancy_cost(4, 4), 4);
    }

    #[test]
    fn max_capped_occupancy_cost_examples() {
        assert_eq!(max_capped_occupancy_cost(5, 2), 9);
        assert_eq!(max_capped_occupancy_cost(7, 3), 19);
        assert_eq!(max_capped_occupancy_cost(4, 1), 4);
    }

    #[test]
    fn approximation_ratio_examples() {
        assert_eq!(approximation_ratio(498, 498).unwrap(), Ratio::new(0, 1));
        assert_eq!(approximation_ratio(900, 498).unwrap(), Ratio::new(402, 498));
        assert_eq!(approximation_ratio(1, 0), Err(FdosError::UndefinedRatio));
    }

    #[test]
    fn forced_singletons_flow_through() {
        // Forced windows are singleton arcs; they participate like any other.
        let p = AssignmentProblem::from_windows(
            vec![
                crate::model::SlotWindow::Forced(2),
                crate::model::SlotWindow::Range { lb: 1, ub: 4 },
                crate::model::SlotWindow::Range { lb: 2, ub: 2 },
            ],
            1,
            4,
            None,
            None,
        )
        .unwrap();
        let r = solve(&p).unwrap();
        assert_eq!(r.assignment.slot_of(0), 2);
        assert_eq!(r.assignment.slot_of(2), 2);
        assert!(r.assignment.respects_arcs(&p));
    }
}
