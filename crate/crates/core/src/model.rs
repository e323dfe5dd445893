//! Shared domain types, the assignment objective functions and Jain's index.
//!
//! All protocol arithmetic is exact: time is integer nanoseconds, weights and
//! objective values are checked 64-bit integers, and the fairness index is an
//! exact rational. Slots are identified by integer labels `first_slot ..
//! first_slot + num_slots`; synthetic instances usually label slots from 0,
//! instances built from feasibility windows label them from 1 (slot 0 being
//! the in-flight polling cycle, which is never assignable).

use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("jain index is undefined for all-zero counts")]
    JainUndefined,
    #[error("integer overflow in objective arithmetic")]
    Overflow,
    #[error("invalid power profile: {0}")]
    InvalidProfile(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// Non-negative span of time in integer nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Duration(i64);

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_ns(ns: i64) -> Self {
        assert!(ns >= 0, "duration must be non-negative");
        Duration(ns)
    }

    pub const fn from_us(us: i64) -> Self {
        Self::from_ns(us * 1_000)
    }

    pub const fn from_ms(ms: i64) -> Self {
        Self::from_ns(ms * 1_000_000)
    }

    pub const fn from_secs(s: i64) -> Self {
        Self::from_ns(s * 1_000_000_000)
    }

    pub const fn as_ns(self) -> i64 {
        self.0
    }
}

impl std::ops::Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration::from_ns(self.0 + rhs.0)
    }
}

/// Instant relative to the current decision epoch; negative values lie in the
/// past (e.g. the time the last REPORT was received).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimePoint(i64);

impl TimePoint {
    pub const EPOCH: TimePoint = TimePoint(0);

    pub const fn from_ns(ns: i64) -> Self {
        TimePoint(ns)
    }

    pub const fn as_ns(self) -> i64 {
        self.0
    }
}

/// Floor division for signed nanosecond arithmetic (divisor must be positive).
pub(crate) fn div_floor(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && (a < 0) != (b < 0) {
        q - 1
    } else {
        q
    }
}

/// Ceiling division for signed nanosecond arithmetic (divisor must be positive).
pub(crate) fn div_ceil(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && (a < 0) == (b < 0) {
        q + 1
    } else {
        q
    }
}

/// ONU transceiver power states. `Doze` keeps the receiver on with the
/// transmitter off; it is also the charging mode of an awake ONU outside its
/// own grant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SleepMode {
    DeepSleep,
    FastSleep,
    Doze,
    Active,
}

impl SleepMode {
    pub const ALL: [SleepMode; 4] = [
        SleepMode::DeepSleep,
        SleepMode::FastSleep,
        SleepMode::Doze,
        SleepMode::Active,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            SleepMode::DeepSleep => "ds",
            SleepMode::FastSleep => "fs",
            SleepMode::Doze => "dz",
            SleepMode::Active => "on",
        }
    }

    fn index(self) -> usize {
        match self {
            SleepMode::DeepSleep => 0,
            SleepMode::FastSleep => 1,
            SleepMode::Doze => 2,
            SleepMode::Active => 3,
        }
    }
}

/// Per-mode power draw and sleep-to-wake time.
///
/// Power strictly increases from deep sleep to active while the wake-up time
/// strictly decreases, active waking instantly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PowerProfile {
    power_uw: [u64; 4],
    wake: [Duration; 4],
}

impl PowerProfile {
    pub fn new(power_uw: [u64; 4], wake: [Duration; 4]) -> Result<Self, ModelError> {
        if !(power_uw[0] > 0 && power_uw[0] < power_uw[1] && power_uw[1] < power_uw[2] && power_uw[2] < power_uw[3]) {
            return Err(ModelError::InvalidProfile(
                "power must satisfy 0 < ds < fs < dz < on".into(),
            ));
        }
        if wake[3] != Duration::ZERO {
            return Err(ModelError::InvalidProfile("active mode must wake instantly".into()));
        }
        if !(wake[0] > wake[1] && wake[1] > wake[2] && wake[2] > wake[3]) {
            return Err(ModelError::InvalidProfile(
                "wake time must strictly decrease as power increases".into(),
            ));
        }
        Ok(PowerProfile { power_uw, wake })
    }

    /// 1 Gbps EPON transceiver figures: 0.75/1.28/2.39/3.984 W and
    /// 5.125 ms/125 us/1 us sleep-to-wake times.
    pub fn epon_defaults() -> Self {
        PowerProfile::new(
            [750_000, 1_280_000, 2_390_000, 3_984_000],
            [
                Duration::from_us(5_125),
                Duration::from_us(125),
                Duration::from_us(1),
                Duration::ZERO,
            ],
        )
        .expect("default profile is valid")
    }

    pub fn power_uw(&self, mode: SleepMode) -> u64 {
        self.power_uw[mode.index()]
    }

    pub fn wake_time(&self, mode: SleepMode) -> Duration {
        self.wake[mode.index()]
    }
}

/// Feasible slot window of one ONU: either a single forced slot (a wake-up
/// message is already in flight) or an inclusive label range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotWindow {
    Forced(u32),
    Range { lb: u32, ub: u32 },
}

impl SlotWindow {
    pub fn lb(&self) -> u32 {
        match *self {
            SlotWindow::Forced(s) => s,
            SlotWindow::Range { lb, .. } => lb,
        }
    }

    pub fn ub(&self) -> u32 {
        match *self {
            SlotWindow::Forced(s) => s,
            SlotWindow::Range { ub, .. } => ub,
        }
    }

    pub fn contains(&self, slot: u32) -> bool {
        slot >= self.lb() && slot <= self.ub()
    }

    pub fn slots(&self) -> std::ops::RangeInclusive<u32> {
        self.lb()..=self.ub()
    }
}

/// Arc weights: either the per-ONU linear form `w_ij = j * w_i` or an explicit
/// matrix indexed by (onu, dense slot index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Weights {
    Linear { per_onu: Vec<i64> },
    Matrix { rows: Vec<Vec<i64>> },
}

/// One instance of the slot assignment problem: per-ONU feasible windows over
/// a contiguous slot label space, arc weights, and the fairness weight factor
/// `W` which dominates every achievable lateness reward.
#[derive(Clone, Debug)]
pub struct AssignmentProblem {
    arcs: Vec<Vec<u32>>,
    windows: Option<Vec<SlotWindow>>,
    first_slot: u32,
    num_slots: u32,
    weights: Weights,
    big_w: i64,
    penalty: i64,
}

impl AssignmentProblem {
    /// Builds a problem from per-ONU windows. `weights` defaults to
    /// `w_ij = j` and both `W` and the penalty `H` default to one more than
    /// the sum of all arc weights.
    pub fn from_windows(
        windows: Vec<SlotWindow>,
        first_slot: u32,
        num_slots: u32,
        weights: Option<Weights>,
        big_w: Option<i64>,
    ) -> Result<Self, ModelError> {
        let arcs = windows.iter().map(|w| w.slots().collect()).collect();
        let mut p = Self::from_arc_lists(arcs, first_slot, num_slots, weights, big_w)?;
        p.windows = Some(windows);
        Ok(p)
    }

    /// Builds a problem from raw arc lists. Unlike windows, arc lists may be
    /// empty (the oracle reports such instances infeasible).
    pub fn from_arc_lists(
        arcs: Vec<Vec<u32>>,
        first_slot: u32,
        num_slots: u32,
        weights: Option<Weights>,
        big_w: Option<i64>,
    ) -> Result<Self, ModelError> {
        if arcs.is_empty() {
            return Err(ModelError::InvalidProblem("at least one ONU required".into()));
        }
        if num_slots == 0 {
            return Err(ModelError::InvalidProblem("at least one slot required".into()));
        }
        let last = first_slot
            .checked_add(num_slots - 1)
            .ok_or_else(|| ModelError::InvalidProblem("slot label overflow".into()))?;
        for (i, a) in arcs.iter().enumerate() {
            if !a.windows(2).all(|w| w[0] < w[1]) {
                return Err(ModelError::InvalidProblem(format!(
                    "arc list of ONU {i} must be sorted and distinct"
                )));
            }
            if a.iter().any(|&j| j < first_slot || j > last) {
                return Err(ModelError::InvalidProblem(format!(
                    "ONU {i} has an arc outside slots {first_slot}..={last}"
                )));
            }
        }
        let weights = weights.unwrap_or(Weights::Linear { per_onu: vec![1; arcs.len()] });
        match &weights {
            Weights::Linear { per_onu } if per_onu.len() != arcs.len() => {
                return Err(ModelError::InvalidProblem("weight vector length mismatch".into()))
            }
            Weights::Matrix { rows }
                if rows.len() != arcs.len()
                    || rows.iter().any(|r| r.len() != num_slots as usize) =>
            {
                return Err(ModelError::InvalidProblem("weight matrix shape mismatch".into()))
            }
            _ => {}
        }
        let mut p = AssignmentProblem {
            arcs,
            windows: None,
            first_slot,
            num_slots,
            weights,
            big_w: 0,
            penalty: 0,
        };
        let sum = p.arc_weight_sum()?;
        let default_w = sum.checked_add(1).ok_or(ModelError::Overflow)?;
        let w = big_w.unwrap_or(default_w);
        if w <= sum {
            return Err(ModelError::InvalidProblem(format!(
                "weight factor W={w} must exceed the arc weight sum {sum}"
            )));
        }
        p.big_w = w;
        p.penalty = default_w;
        Ok(p)
    }

    /// Sum of all arc weights; also rejects negative weights, which would
    /// void the dominance of the weight factor and the overflow penalty.
    fn arc_weight_sum(&self) -> Result<i64, ModelError> {
        let mut sum: i64 = 0;
        for (i, a) in self.arcs.iter().enumerate() {
            for &j in a {
                let w = self.weight(i, j);
                if w < 0 {
                    return Err(ModelError::InvalidProblem(format!(
                        "arc ({i}, {j}) has negative weight {w}"
                    )));
                }
                sum = sum.checked_add(w).ok_or(ModelError::Overflow)?;
            }
        }
        Ok(sum)
    }

    pub fn num_onus(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_slots(&self) -> u32 {
        self.num_slots
    }

    pub fn first_slot(&self) -> u32 {
        self.first_slot
    }

    pub fn slot_labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.first_slot..self.first_slot + self.num_slots
    }

    pub fn dense_index(&self, label: u32) -> usize {
        debug_assert!(label >= self.first_slot && label < self.first_slot + self.num_slots);
        (label - self.first_slot) as usize
    }

    pub fn arcs_of(&self, onu: usize) -> &[u32] {
        &self.arcs[onu]
    }

    pub fn windows(&self) -> Option<&[SlotWindow]> {
        self.windows.as_deref()
    }

    pub fn weight(&self, onu: usize, slot_label: u32) -> i64 {
        match &self.weights {
            Weights::Linear { per_onu } => i64::from(slot_label) * per_onu[onu],
            Weights::Matrix { rows } => rows[onu][(slot_label - self.first_slot) as usize],
        }
    }

    pub fn big_w(&self) -> i64 {
        self.big_w
    }

    /// Restriction to an ONU and slot subset. The slot label space, weights
    /// and weight factor are kept, so objective values of disjoint
    /// restrictions add up to the value on the union.
    pub fn restrict(&self, onus: &[u32], slots: &[u32]) -> Result<AssignmentProblem, ModelError> {
        let arcs = onus
            .iter()
            .map(|&i| {
                self.arcs[i as usize]
                    .iter()
                    .copied()
                    .filter(|j| slots.binary_search(j).is_ok())
                    .collect()
            })
            .collect();
        let weights = match &self.weights {
            Weights::Linear { per_onu } => Weights::Linear {
                per_onu: onus.iter().map(|&i| per_onu[i as usize]).collect(),
            },
            Weights::Matrix { rows } => Weights::Matrix {
                rows: onus.iter().map(|&i| rows[i as usize].clone()).collect(),
            },
        };
        Self::from_arc_lists(arcs, self.first_slot, self.num_slots, Some(weights), Some(self.big_w))
    }

    /// Penalty `H` for out-of-window placements in the relaxed solve;
    /// exceeds the sum of all in-window arc weights.
    pub fn penalty(&self) -> i64 {
        self.penalty
    }
}

/// A total map ONU -> slot label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    slot_of: Vec<u32>,
}

impl Assignment {
    pub fn new(slot_of: Vec<u32>) -> Self {
        Assignment { slot_of }
    }

    pub fn slot_of(&self, onu: usize) -> u32 {
        self.slot_of[onu]
    }

    pub fn slots(&self) -> &[u32] {
        &self.slot_of
    }

    pub fn num_onus(&self) -> usize {
        self.slot_of.len()
    }

    /// Per-slot ONU counts in dense label order.
    pub fn counts(&self, p: &AssignmentProblem) -> Vec<u64> {
        let mut counts = vec![0u64; p.num_slots() as usize];
        for &j in &self.slot_of {
            counts[p.dense_index(j)] += 1;
        }
        counts
    }

    /// True when every ONU is placed on one of its own arcs.
    pub fn respects_arcs(&self, p: &AssignmentProblem) -> bool {
        self.slot_of.len() == p.num_onus()
            && self
                .slot_of
                .iter()
                .enumerate()
                .all(|(i, j)| p.arcs_of(i).binary_search(j).is_ok())
    }
}

/// Concentration cost: the sum of squared per-slot ONU counts. Minimising it
/// (for a fixed total) is the same as maximising Jain's index.
pub fn f1_of_counts(counts: &[u64]) -> Result<i64, ModelError> {
    let mut sum: i64 = 0;
    for &n in counts {
        let n = i64::try_from(n).map_err(|_| ModelError::Overflow)?;
        sum = n
            .checked_mul(n)
            .and_then(|sq| sum.checked_add(sq))
            .ok_or(ModelError::Overflow)?;
    }
    Ok(sum)
}

pub fn f1(a: &Assignment, p: &AssignmentProblem) -> Result<i64, ModelError> {
    f1_of_counts(&a.counts(p))
}

/// Lateness reward: the sum of the chosen arc weights (with default weights,
/// the sum of assigned slot labels).
pub fn f2(a: &Assignment, p: &AssignmentProblem) -> Result<i64, ModelError> {
    let mut sum: i64 = 0;
    for (i, &j) in a.slots().iter().enumerate() {
        sum = sum.checked_add(p.weight(i, j)).ok_or(ModelError::Overflow)?;
    }
    Ok(sum)
}

/// Combined minimisation objective `W * f1 - f2`.
pub fn objective(a: &Assignment, p: &AssignmentProblem) -> Result<i64, ModelError> {
    objective_parts(f1(a, p)?, f2(a, p)?, p.big_w())
}

pub fn objective_parts(f1: i64, f2: i64, big_w: i64) -> Result<i64, ModelError> {
    big_w
        .checked_mul(f1)
        .and_then(|x| x.checked_sub(f2))
        .ok_or(ModelError::Overflow)
}

/// Jain's fairness index of the per-slot counts, in the un-normalised form
/// `(sum n_j)^2 / sum n_j^2`. Note there is no `1/M` factor, so a perfectly
/// even spread over `M` occupied slots scores `M`, not 1.
pub fn jain_index(counts: &[u64]) -> Result<Ratio<u128>, ModelError> {
    let total: u128 = counts.iter().map(|&n| u128::from(n)).sum();
    if total == 0 {
        return Err(ModelError::JainUndefined);
    }
    let sq: u128 = counts.iter().map(|&n| u128::from(n) * u128::from(n)).sum();
    Ok(Ratio::new(total * total, sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(arcs: Vec<Vec<u32>>, num_slots: u32, big_w: Option<i64>) -> AssignmentProblem {
        AssignmentProblem::from_arc_lists(arcs, 0, num_slots, None, big_w).unwrap()
    }

    #[test]
    fn f1_counts_examples() {
        assert_eq!(f1_of_counts(&[2, 1, 1]).unwrap(), 6);
        assert_eq!(f1_of_counts(&[1, 1, 1, 1]).unwrap(), 4);
        assert_eq!(f1_of_counts(&[4, 0]).unwrap(), 16);
    }

    #[test]
    fn f2_examples() {
        let p = problem(vec![vec![0, 1, 2], vec![0, 1, 2]], 3, None);
        assert_eq!(f2(&Assignment::new(vec![2, 0]), &p).unwrap(), 2);
        assert_eq!(f2(&Assignment::new(vec![0, 0]), &p).unwrap(), 0);

        let weighted = AssignmentProblem::from_arc_lists(
            vec![vec![0, 1], vec![0, 1]],
            0,
            2,
            Some(Weights::Linear { per_onu: vec![2, 1] }),
            None,
        )
        .unwrap();
        assert_eq!(f2(&Assignment::new(vec![1, 0]), &weighted).unwrap(), 2);
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective_parts(5, 3, 10).unwrap(), 47);

        // Both ONUs in slot 0: f2 = 0 and the objective is W * f1 alone.
        let p = problem(vec![vec![0, 1, 2], vec![0, 1, 2]], 3, Some(100));
        let a = Assignment::new(vec![0, 0]);
        assert_eq!(f1(&a, &p).unwrap(), 4);
        assert_eq!(objective(&a, &p).unwrap(), 400);
    }

    /// Exhausts the three feasible assignments of a pinned instance and keeps
    /// the smallest objective; independent of any solver code path.
    #[test]
    fn objective_minimum_by_enumeration() {
        let p = problem(vec![vec![0], vec![0], vec![0, 1, 2]], 3, Some(100));
        let mut best = i64::MAX;
        let mut best_slot = u32::MAX;
        for j in [0u32, 1, 2] {
            let a = Assignment::new(vec![0, 0, j]);
            assert!(a.respects_arcs(&p));
            let f = objective(&a, &p).unwrap();
            if f < best {
                best = f;
                best_slot = j;
            }
        }
        assert_eq!(best, 498);
        assert_eq!(best_slot, 2);
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[2, 2, 2]).unwrap(), Ratio::new(3u128, 1));
        assert_eq!(jain_index(&[3, 0, 0]).unwrap(), Ratio::new(1u128, 1));
        assert_eq!(jain_index(&[2, 1]).unwrap(), Ratio::new(9u128, 5));
        assert_eq!(jain_index(&[0, 0]), Err(ModelError::JainUndefined));
    }

    /// For a fixed total, Jain's index peaks exactly where the concentration
    /// cost bottoms: enumerate every count vector with N <= 8, M <= 4.
    #[test]
    fn jain_peak_coincides_with_f1_minimum() {
        fn vectors(n: u64, m: usize) -> Vec<Vec<u64>> {
            if m == 1 {
                return vec![vec![n]];
            }
            let mut out = Vec::new();
            for head in 0..=n {
                for mut tail in vectors(n - head, m - 1) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        for m in 1..=4usize {
            for n in 1..=8u64 {
                let all = vectors(n, m);
                let min_f1 = all.iter().map(|v| f1_of_counts(v).unwrap()).min().unwrap();
                let max_jain = all.iter().map(|v| jain_index(v).unwrap()).max().unwrap();
                for v in &all {
                    let is_min = f1_of_counts(v).unwrap() == min_f1;
                    let is_peak = jain_index(v).unwrap() == max_jain;
                    assert_eq!(is_min, is_peak, "counts {v:?}");
                }
            }
        }
    }

    /// Cauchy-Schwarz floor: f1 >= N^2 / M, checked in exact rationals.
    #[test]
    fn f1_lower_envelope() {
        let cases: &[&[u64]] = &[&[2, 1, 1], &[4, 0], &[3, 3, 1], &[5], &[1, 0, 0, 1]];
        for counts in cases {
            let n: u64 = counts.iter().sum();
            let m = counts.len() as u64;
            let f1 = f1_of_counts(counts).unwrap() as u64;
            assert!(Ratio::new(f1, 1) >= Ratio::new(n * n, m));
        }
    }

    #[test]
    fn objective_invariant_under_onu_permutation() {
        let p = problem(vec![vec![0, 1], vec![0, 1], vec![1, 2]], 3, Some(1000));
        let a = Assignment::new(vec![0, 1, 2]);
        let b = Assignment::new(vec![1, 0, 2]);
        assert_eq!(objective(&a, &p).unwrap(), objective(&b, &p).unwrap());
    }

    #[test]
    fn default_weight_factor_dominates() {
        let p = problem(vec![vec![0, 1, 2], vec![1, 2]], 3, None);
        // arcs weigh 0+1+2 + 1+2 = 6
        assert_eq!(p.big_w(), 7);
        assert_eq!(p.penalty(), 7);
        assert!(AssignmentProblem::from_arc_lists(
            vec![vec![0, 1, 2], vec![1, 2]],
            0,
            3,
            None,
            Some(6)
        )
        .is_err());
    }

    #[test]
    fn profile_ordering_enforced() {
        assert!(PowerProfile::new(
            [750_000, 1_280_000, 2_390_000, 3_984_000],
            [
                Duration::from_us(5_125),
                Duration::from_us(125),
                Duration::from_us(1),
                Duration::ZERO
            ],
        )
        .is_ok());
        // doze drawing more than active
        assert!(PowerProfile::new(
            [750_000, 1_280_000, 4_000_000, 3_984_000],
            [
                Duration::from_us(5_125),
                Duration::from_us(125),
                Duration::from_us(1),
                Duration::ZERO
            ],
        )
        .is_err());
        // wake times not strictly decreasing
        assert!(PowerProfile::new(
            [750_000, 1_280_000, 2_390_000, 3_984_000],
            [
                Duration::from_us(125),
                Duration::from_us(125),
                Duration::from_us(1),
                Duration::ZERO
            ],
        )
        .is_err());
    }

    #[test]
    fn division_helpers_match_euclidean_rounding() {
        assert_eq!(div_floor(7, 2), 3);
        assert_eq!(div_floor(-7, 2), -4);
        assert_eq!(div_floor(-8, 2), -4);
        assert_eq!(div_ceil(7, 2), 4);
        assert_eq!(div_ceil(-7, 2), -3);
        assert_eq!(div_ceil(8, 2), 4);
        assert_eq!(div_ceil(-175_000, 2_000_000), 0);
    }
}
