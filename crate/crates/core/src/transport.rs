//! Capacitated max-weight assignment of ONUs to slots (the transportation
//! subproblem the FDOS recursion leans on).
//!
//! Two shapes are solved. The strict shape places every ONU on one of its own
//! arcs subject to per-slot capacities, or reports infeasibility. The
//! penalized shape completes the bipartite graph, pricing out-of-window
//! placements at `-H` with `H` larger than the sum of all real weights, so an
//! optimal solution places the largest possible number of ONUs inside their
//! windows and, among those, maximises the real weight sum.
//!
//! The solver runs successive shortest augmenting paths with node potentials
//! (weights negated and shifted to non-negative costs), one augmentation per
//! ONU in index order, smallest slot label on ties; output is therefore a
//! pure function of the instance bytes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("total slot capacity {total} cannot seat {onus} ONUs")]
    InsufficientCapacity { total: u64, onus: usize },
    #[error("instance is in {found} mode, expected {expected}")]
    WrongMode { expected: &'static str, found: &'static str },
    #[error("penalty must exceed the sum of in-window arc weights")]
    PenaltyTooSmall,
    #[error("integer overflow while building costs")]
    Overflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Penalized { penalty: i64 },
}

/// One ONU row: its identity plus the (slot label, weight) arcs it may use.
#[derive(Clone, Debug)]
pub struct Row {
    pub onu_id: u32,
    pub arcs: Vec<(u32, i64)>,
}

#[derive(Clone, Debug)]
pub struct TransportInstance {
    rows: Vec<Row>,
    slots: Vec<u32>,
    caps: Vec<u32>,
    mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Slot label chosen for every ONU, in row order.
    Feasible(Vec<u32>),
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportSolution {
    pub status: SolveStatus,
    /// Recomputed sum of the chosen arc weights (penalty arcs count -H).
    pub objective: i64,
    /// (slot label, number of ONUs placed there) in slot order.
    pub usage: Vec<(u32, u32)>,
}

impl TransportInstance {
    pub fn new(rows: Vec<Row>, slots: Vec<u32>, caps: Vec<u32>, mode: Mode) -> Self {
        debug_assert_eq!(slots.len(), caps.len());
        debug_assert!(slots.windows(2).all(|w| w[0] < w[1]), "slot labels sorted");
        TransportInstance { rows, slots, caps, mode }
    }

    pub fn strict(rows: Vec<Row>, slots: Vec<u32>, caps: Vec<u32>) -> Self {
        Self::new(rows, slots, caps, Mode::Strict)
    }

    pub fn penalized(rows: Vec<Row>, slots: Vec<u32>, caps: Vec<u32>, penalty: i64) -> Self {
        Self::new(rows, slots, caps, Mode::Penalized { penalty })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn slots(&self) -> &[u32] {
        &self.slots
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    fn col_of(&self, slot: u32) -> usize {
        self.slots.binary_search(&slot).expect("arc slot must be a column")
    }
}

/// Exact optimum of the strict shape, or `Infeasible` when no cap-respecting
/// placement of every ONU on its own arcs exists.
pub fn solve_strict(inst: &TransportInstance) -> Result<TransportSolution, TransportError> {
    match inst.mode {
        Mode::Strict => {}
        Mode::Penalized { .. } => {
            return Err(TransportError::WrongMode { expected: "strict", found: "penalized" })
        }
    }
    let arcs = strict_arcs(inst)?;
    Ok(run_ssp(inst, &arcs))
}

/// Exact optimum of the penalized shape plus the set of ONUs left outside
/// their windows (by id). Requires enough total capacity to seat everyone.
pub fn solve_penalized(
    inst: &TransportInstance,
) -> Result<(TransportSolution, Vec<u32>), TransportError> {
    let penalty = match inst.mode {
        Mode::Penalized { penalty } => penalty,
        Mode::Strict => {
            return Err(TransportError::WrongMode { expected: "penalized", found: "strict" })
        }
    };
    let total: u64 = inst.caps.iter().map(|&c| u64::from(c)).sum();
    if total < inst.rows.len() as u64 {
        return Err(TransportError::InsufficientCapacity { total, onus: inst.rows.len() });
    }
    let mut weight_sum: i64 = 0;
    for row in &inst.rows {
        for &(_, w) in &row.arcs {
            weight_sum = weight_sum.checked_add(w).ok_or(TransportError::Overflow)?;
        }
    }
    if penalty <= weight_sum {
        return Err(TransportError::PenaltyTooSmall);
    }

    let arcs = penalized_arcs(inst, penalty)?;
    let solution = run_ssp(inst, &arcs);
    let placed = match &solution.status {
        SolveStatus::Feasible(slots) => slots,
        SolveStatus::Infeasible => unreachable!("capacity was checked"),
    };
    let unplaced = inst
        .rows
        .iter()
        .zip(placed)
        .filter(|(row, &slot)| !row.arcs.iter().any(|&(s, _)| s == slot))
        .map(|(row, _)| row.onu_id)
        .collect();
    Ok((solution, unplaced))
}

/// (column, cost, true weight) per row; costs are the negated weights shifted
/// to non-negative.
type CostArcs = Vec<Vec<(usize, i64, i64)>>;

fn max_weight(inst: &TransportInstance) -> i64 {
    inst.rows
        .iter()
        .flat_map(|r| r.arcs.iter().map(|&(_, w)| w))
        .max()
        .unwrap_or(0)
}

fn strict_arcs(inst: &TransportInstance) -> Result<CostArcs, TransportError> {
    let w_max = max_weight(inst);
    inst.rows
        .iter()
        .map(|row| {
            let mut arcs = Vec::with_capacity(row.arcs.len());
            for &(slot, w) in &row.arcs {
                let cost = w_max.checked_sub(w).ok_or(TransportError::Overflow)?;
                arcs.push((inst.col_of(slot), cost, w));
            }
            arcs.sort_by_key(|&(c, _, _)| c);
            Ok(arcs)
        })
        .collect()
}

fn penalized_arcs(inst: &TransportInstance, penalty: i64) -> Result<CostArcs, TransportError> {
    let w_max = max_weight(inst);
    inst.rows
        .iter()
        .map(|row| {
            let mut arcs = Vec::with_capacity(inst.slots.len());
            for (col, &slot) in inst.slots.iter().enumerate() {
                let w = match row.arcs.iter().find(|&&(s, _)| s == slot) {
                    Some(&(_, w)) => w,
                    None => penalty.checked_neg().ok_or(TransportError::Overflow)?,
                };
                let cost = w_max.checked_sub(w).ok_or(TransportError::Overflow)?;
                arcs.push((col, cost, w));
            }
            Ok(arcs)
        })
        .collect()
}

const UNREACHED: i64 = i64::MAX / 4;

/// Successive shortest augmenting paths over rows in index order.
///
/// Nodes are rows then columns; potentials keep residual reduced costs
/// non-negative so plain Dijkstra applies. A column with spare capacity acts
/// as a sink; back edges run from a column to each row currently placed on it.
fn run_ssp(inst: &TransportInstance, arcs: &CostArcs) -> TransportSolution {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n_rows = inst.rows.len();
    let n_cols = inst.slots.len();
    let n_nodes = n_rows + n_cols;

    let mut potential = vec![0i64; n_nodes];
    let mut row_to_col: Vec<Option<usize>> = vec![None; n_rows];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n_cols];

    for start in 0..n_rows {
        let mut dist = vec![UNREACHED; n_nodes];
        let mut parent: Vec<usize> = vec![usize::MAX; n_nodes];
        let mut settled = vec![false; n_nodes];
        let mut heap = BinaryHeap::new();
        dist[start] = 0;
        heap.push(Reverse((0i64, start)));

        while let Some(Reverse((d, node))) = heap.pop() {
            if settled[node] || d > dist[node] {
                continue;
            }
            settled[node] = true;
            if node < n_rows {
                let row = node;
                for &(col, cost, _) in &arcs[row] {
                    if row_to_col[row] == Some(col) {
                        continue;
                    }
                    let node_c = n_rows + col;
                    let rc = cost + potential[row] - potential[node_c];
                    debug_assert!(rc >= 0, "reduced cost must stay non-negative");
                    let nd = d + rc;
                    if nd < dist[node_c] {
                        dist[node_c] = nd;
                        parent[node_c] = row;
                        heap.push(Reverse((nd, node_c)));
                    }
                }
            } else {
                let col = node - n_rows;
                for &row in &col_rows[col] {
                    let cost = arcs[row]
                        .iter()
                        .find(|&&(c, _, _)| c == col)
                        .map(|&(_, cost, _)| cost)
                        .expect("placed row keeps its arc");
                    let rc = -cost + potential[node] - potential[row];
                    debug_assert!(rc >= 0, "reduced cost must stay non-negative");
                    let nd = d + rc;
                    if nd < dist[row] {
                        dist[row] = nd;
                        parent[row] = node;
                        heap.push(Reverse((nd, row)));
                    }
                }
            }
        }

        // Cheapest column with spare capacity; smallest slot label on ties.
        let mut sink: Option<(i64, usize)> = None;
        for col in 0..n_cols {
            if col_rows[col].len() < inst.caps[col] as usize {
                let d = dist[n_rows + col];
                if d < UNREACHED && sink.map_or(true, |(bd, _)| d < bd) {
                    sink = Some((d, col));
                }
            }
        }
        let Some((sink_dist, sink_col)) = sink else {
            return TransportSolution {
                status: SolveStatus::Infeasible,
                objective: 0,
                usage: inst.slots.iter().map(|&s| (s, 0)).collect(),
            };
        };

        // Unreached nodes drift by the full sink distance, keeping every
        // residual arc (including future start rows') non-negative.
        for v in 0..n_nodes {
            potential[v] += dist[v].min(sink_dist);
        }

        // Walk parents back to the start row, flipping placements.
        let mut node = n_rows + sink_col;
        while node != start {
            let prev = parent[node];
            if node >= n_rows {
                // prev is the row that moves (or is newly placed) onto node.
                let col = node - n_rows;
                let row = prev;
                if let Some(old) = row_to_col[row] {
                    col_rows[old].retain(|&r| r != row);
                }
                row_to_col[row] = Some(col);
                col_rows[col].push(row);
                col_rows[col].sort_unstable();
            }
            node = prev;
        }
    }

    let placement: Vec<u32> = row_to_col
        .iter()
        .map(|c| inst.slots[c.expect("all rows placed")])
        .collect();
    let mut objective = 0i64;
    for (r, col) in row_to_col.iter().enumerate() {
        let col = col.expect("all rows placed");
        let w = arcs[r]
            .iter()
            .find(|&&(c, _, _)| c == col)
            .map(|&(_, _, w)| w)
            .expect("placement uses an existing arc");
        objective += w;
    }
    let usage = inst
        .slots
        .iter()
        .enumerate()
        .map(|(c, &s)| (s, col_rows[c].len() as u32))
        .collect();
    TransportSolution { status: SolveStatus::Feasible(placement), objective, usage }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(arcs: Vec<Vec<(u32, i64)>>) -> Vec<Row> {
        arcs.into_iter()
            .enumerate()
            .map(|(i, arcs)| Row { onu_id: i as u32, arcs })
            .collect()
    }

    /// Independent check: enumerate every cap-respecting arc placement.
    fn brute_force_max(inst: &TransportInstance) -> Option<i64> {
        fn rec(
            inst: &TransportInstance,
            row: usize,
            usage: &mut Vec<u32>,
            acc: i64,
            best: &mut Option<i64>,
        ) {
            if row == inst.rows().len() {
                *best = Some(best.map_or(acc, |b: i64| b.max(acc)));
                return;
            }
            for &(slot, w) in &inst.rows()[row].arcs {
                let col = inst.slots().iter().position(|&s| s == slot).unwrap();
                if usage[col] < inst.caps()[col] {
                    usage[col] += 1;
                    rec(inst, row + 1, usage, acc + w, best);
                    usage[col] -= 1;
                }
            }
        }
        let mut best = None;
        rec(inst, 0, &mut vec![0; inst.slots().len()], 0, &mut best);
        best
    }

    #[test]
    fn strict_picks_max_weight_matching() {
        // w_i = (2, 1), w_ij = j * w_i, both slots cap 1.
        let inst = TransportInstance::strict(
            rows(vec![vec![(0, 0), (1, 2)], vec![(0, 0), (1, 1)]]),
            vec![0, 1],
            vec![1, 1],
        );
        let sol = solve_strict(&inst).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible(vec![1, 0]));
        assert_eq!(sol.objective, 2);
        assert_eq!(brute_force_max(&inst), Some(2));
    }

    #[test]
    fn strict_reports_infeasible_contention() {
        let inst = TransportInstance::strict(
            rows(vec![vec![(0, 0)], vec![(0, 0)], vec![(0, 0), (1, 1), (2, 2)]]),
            vec![0, 1, 2],
            vec![1, 1, 1],
        );
        let sol = solve_strict(&inst).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert_eq!(brute_force_max(&inst), None);
    }

    #[test]
    fn strict_relaxed_caps_become_feasible() {
        let inst = TransportInstance::strict(
            rows(vec![vec![(0, 0)], vec![(0, 0)], vec![(0, 0), (1, 1), (2, 2)]]),
            vec![0, 1, 2],
            vec![2, 2, 2],
        );
        let sol = solve_strict(&inst).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible(vec![0, 0, 2]));
        assert_eq!(sol.objective, 2);
        assert_eq!(brute_force_max(&inst), Some(2));
    }

    #[test]
    fn penalized_minimises_unplaced_then_weight() {
        // Both ONUs window only slot 0, caps 1: one of them must overflow.
        let inst = TransportInstance::penalized(
            rows(vec![vec![(0, 0)], vec![(0, 0)]]),
            vec![0, 1],
            vec![1, 1],
            10,
        );
        let (sol, unplaced) = solve_penalized(&inst).unwrap();
        let SolveStatus::Feasible(placed) = &sol.status else { panic!() };
        assert_eq!(unplaced.len(), 1);
        assert_eq!(placed.iter().filter(|&&s| s == 0).count(), 1);
        assert_eq!(sol.objective, -10);
    }

    #[test]
    fn penalized_matches_strict_when_feasible() {
        let arcs = vec![vec![(0, 0), (1, 2)], vec![(0, 0), (1, 1)]];
        let strict = TransportInstance::strict(rows(arcs.clone()), vec![0, 1], vec![1, 1]);
        let pen = TransportInstance::penalized(rows(arcs), vec![0, 1], vec![1, 1], 100);
        let s1 = solve_strict(&strict).unwrap();
        let (s2, unplaced) = solve_penalized(&pen).unwrap();
        assert!(unplaced.is_empty());
        assert_eq!(s1.objective, s2.objective);
    }

    #[test]
    fn penalized_contention_unplaces_one_tight_row() {
        let inst = TransportInstance::penalized(
            rows(vec![vec![(0, 0)], vec![(0, 0)], vec![(0, 0), (1, 1), (2, 2)]]),
            vec![0, 1, 2],
            vec![1, 1, 1],
            100,
        );
        let (_, unplaced) = solve_penalized(&inst).unwrap();
        assert_eq!(unplaced.len(), 1);
        assert!(unplaced[0] == 0 || unplaced[0] == 1);
    }

    #[test]
    fn penalized_requires_capacity() {
        let inst = TransportInstance::penalized(
            rows(vec![vec![(0, 0)], vec![(0, 0)]]),
            vec![0],
            vec![1],
            10,
        );
        assert_eq!(
            solve_penalized(&inst),
            Err(TransportError::InsufficientCapacity { total: 1, onus: 2 })
        );
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let strict = TransportInstance::strict(rows(vec![vec![(0, 0)]]), vec![0], vec![1]);
        assert!(matches!(solve_penalized(&strict), Err(TransportError::WrongMode { .. })));
    }

    #[test]
    fn repeated_solves_are_identical() {
        let inst = TransportInstance::strict(
            rows(vec![
                vec![(0, 0), (1, 1), (2, 2)],
                vec![(0, 0), (1, 1)],
                vec![(1, 1), (2, 2)],
            ]),
            vec![0, 1, 2],
            vec![1, 2, 1],
        );
        let a = solve_strict(&inst).unwrap();
        let b = solve_strict(&inst).unwrap();
        assert_eq!(a, b);
    }
}
