//! OLT-side policy pieces: limited-scheme grant sizing and wake-up message
//! timing.

use crate::model::{Duration, PowerProfile, SleepMode};

/// Usable payload bits of one maximum-length cycle shared by `n_active`
/// ONUs: the full cycle at line rate minus one guard interval each.
pub fn cycle_budget_bits(t_cm: Duration, guard: Duration, link_rate_bps: u64, n_active: u32) -> u64 {
    let payload_ns = t_cm.as_ns() - i64::from(n_active) * guard.as_ns();
    if payload_ns <= 0 {
        return 0;
    }
    (payload_ns as u128 * u128::from(link_rate_bps) / 1_000_000_000) as u64
}

/// Limited-scheme grant: the reported demand, capped at an equal share of the
/// cycle budget; ONUs without a seat in the cycle get nothing.
pub fn grant_size_bits(report_bits: u64, assigned: bool, n_active: u32, budget_bits: u64) -> u64 {
    if !assigned || n_active == 0 {
        return 0;
    }
    report_bits.min(budget_bits / u64::from(n_active))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WakeAction {
    /// Emit the wake-up message at this absolute time (clamped to the epoch
    /// when the computed instant already passed).
    SendAt { at_ns: i64, late: bool },
    /// The wake-up instant lies beyond this cycle; the ONU stays in the pool
    /// and is rescheduled at the next epoch.
    Defer,
    /// A wake-up message is already in flight; never send a second one.
    AlreadySent,
}

/// Wake-up timing for one scheduled ONU: early enough for the message round
/// trip and the transceiver wake-up to finish right before the slot that
/// precedes the assigned one (where the REPORT must land).
pub fn plan_wakeup(
    epoch_ns: i64,
    slot: u32,
    mode: SleepMode,
    wake_already_sent: bool,
    t_cm: Duration,
    t_rtt: Duration,
    profile: &PowerProfile,
) -> WakeAction {
    if wake_already_sent {
        return WakeAction::AlreadySent;
    }
    let t_wk = epoch_ns + (i64::from(slot) - 1) * t_cm.as_ns()
        - profile.wake_time(mode).as_ns()
        - t_rtt.as_ns();
    if t_wk < epoch_ns {
        WakeAction::SendAt { at_ns: epoch_ns, late: true }
    } else if t_wk < epoch_ns + t_cm.as_ns() {
        WakeAction::SendAt { at_ns: t_wk, late: false }
    } else {
        WakeAction::Defer
    }
}
