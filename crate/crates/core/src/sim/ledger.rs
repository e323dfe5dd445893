//! Per-ONU energy and fleet-wide delay accounting.

use crate::model::{PowerProfile, SleepMode};

/// Integrates time spent in each charging mode. Energy is kept in exact
/// femtojoules (microwatt-nanoseconds) so the conservation identities hold
/// bit for bit.
#[derive(Clone, Debug)]
pub struct EnergyLedger {
    pub durations_ns: [i64; 4],
    current: SleepMode,
    since_ns: i64,
}

impl EnergyLedger {
    pub fn new(start_mode: SleepMode) -> Self {
        EnergyLedger { durations_ns: [0; 4], current: start_mode, since_ns: 0 }
    }

    pub fn mode(&self) -> SleepMode {
        self.current
    }

    /// Closes the current segment at `now` and starts charging `mode`.
    pub fn switch(&mut self, mode: SleepMode, now_ns: i64) {
        debug_assert!(
            now_ns >= self.since_ns,
            "energy segments must advance: {} -> {}",
            self.since_ns,
            now_ns
        );
        self.durations_ns[mode_index(self.current)] += now_ns - self.since_ns;
        self.current = mode;
        self.since_ns = now_ns;
    }

    pub fn finalize(&mut self, end_ns: i64) {
        self.switch(self.current, end_ns);
    }

    /// Exact energy in femtojoules under the given profile.
    pub fn energy_fj(&self, profile: &PowerProfile) -> u128 {
        SleepMode::ALL
            .iter()
            .map(|&m| {
                u128::from(profile.power_uw(m))
                    * u128::try_from(self.durations_ns[mode_index(m)]).expect("non-negative")
            })
            .sum()
    }

    pub fn total_ns(&self) -> i64 {
        self.durations_ns.iter().sum()
    }
}

fn mode_index(m: SleepMode) -> usize {
    match m {
        SleepMode::DeepSleep => 0,
        SleepMode::FastSleep => 1,
        SleepMode::Doze => 2,
        SleepMode::Active => 3,
    }
}

/// Sum of delivered-packet delays plus drop and de-registration counters.
#[derive(Clone, Debug, Default)]
pub struct DelayLedger {
    pub delivered: u64,
    pub delay_sum_ns: u128,
    pub max_delay_ns: i64,
    pub drops: u64,
    pub dereg_events: u64,
}

impl DelayLedger {
    pub fn record_delivery(&mut self, delay_ns: i64) {
        debug_assert!(delay_ns >= 0, "delivery cannot precede arrival");
        self.delivered += 1;
        self.delay_sum_ns += u128::try_from(delay_ns).expect("non-negative");
        self.max_delay_ns = self.max_delay_ns.max(delay_ns);
    }

    pub fn avg_delay_ns(&self) -> f64 {
        if self.delivered == 0 {
            return f64::NAN;
        }
        self.delay_sum_ns as f64 / self.delivered as f64
    }
}
