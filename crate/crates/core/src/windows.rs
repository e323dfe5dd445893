//! Per-ONU feasible slot windows.
//!
//! The OLT quantises future time into slots of the maximum cycle time and,
//! for every sleeping ONU, derives the slot range in which upstream service
//! may start: late enough for the wake-up round trip and the minimum
//! worthwhile sleep, early enough to beat the reported buffer fill-up times
//! and the de-registration timer. All formulas run in epoch-relative time
//! (the decision instant is 0, stored timestamps are negative when in the
//! past). Slot `j` spans `[j*T_cm, (j+1)*T_cm)` relative to the epoch; slot 0
//! is the cycle being scheduled right now, so assignable slots start at 1.

use crate::model::{
    div_ceil, div_floor, AssignmentProblem, Duration, ModelError, PowerProfile, SleepMode,
    SlotWindow, TimePoint, Weights,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WindowError {
    /// The bounds crossed (or an upper bound fell before slot 1): no future
    /// slot satisfies every constraint and the ONU must be woken immediately.
    #[error("no feasible slot for ONU (lb {lb}, ub {ub}); wake immediately")]
    Infeasible { lb: i64, ub: i64 },
    #[error("ONU has no wake-up message in flight")]
    NotWakePending,
    #[error("problem assembly failed: {0}")]
    Assembly(#[from] ModelError),
}

/// Everything the OLT knows about one sleeping ONU when windows are built.
/// Timestamps are epoch-relative (never positive).
#[derive(Clone, Debug)]
pub struct OnuScheduleState {
    pub onu_id: u32,
    pub rtt: Duration,
    pub sleep_mode: SleepMode,
    /// Arrival time of the latest REPORT.
    pub last_report_time: TimePoint,
    /// Buffer fill-up time the ONU predicted for its upstream queue, anchored
    /// at the REPORT transmission.
    pub reported_fill_time: Duration,
    /// OLT-side fill-up prediction for downstream traffic, when downstream is
    /// modelled.
    pub ds_fill_time: Option<Duration>,
    /// Set when a wake-up message has already been sent to this ONU.
    pub wake_sent_at: Option<TimePoint>,
    /// Transmission time of the last GATE addressed to this ONU.
    pub last_gate_time: Option<TimePoint>,
    /// Minimum worthwhile sleep for the mode the ONU is currently in.
    pub min_sleep_threshold: Duration,
}

/// Slot-window parameters shared by all ONUs.
#[derive(Clone, Debug)]
pub struct WindowConfig {
    pub t_cm: Duration,
    pub t_dereg: Duration,
    pub profile: PowerProfile,
}

fn wake_ns(cfg: &WindowConfig, s: &OnuScheduleState) -> i64 {
    cfg.profile.wake_time(s.sleep_mode).as_ns()
}

/// Slot in which an ONU with a wake-up message already in flight will start
/// upstreaming: one past the slot where its REPORT lands. When the message
/// and wake-up complete before the ONU's last GATE arrives, the REPORT lands
/// in the in-flight cycle and the first assignable slot is the answer.
pub fn forced_slot(s: &OnuScheduleState, cfg: &WindowConfig) -> Result<u32, WindowError> {
    let wake_sent = s.wake_sent_at.ok_or(WindowError::NotWakePending)?.as_ns();
    if let Some(t_lg) = s.last_gate_time {
        if wake_sent + wake_ns(cfg, s) < t_lg.as_ns() {
            return Ok(1);
        }
    }
    let report_slot = div_ceil(wake_sent + s.rtt.as_ns() + wake_ns(cfg, s), cfg.t_cm.as_ns());
    Ok(u32::try_from(report_slot + 1).unwrap_or(1).max(1))
}

/// Latest slot whose grant still precedes the reported upstream fill-up time
/// (with a one-cycle REPORT slot and a one-cycle grant pipeline in hand).
pub fn upstream_bound(s: &OnuScheduleState, cfg: &WindowConfig) -> Result<u32, WindowError> {
    let t_cm = cfg.t_cm.as_ns();
    let num = s.last_report_time.as_ns() + s.reported_fill_time.as_ns() - 2 * t_cm;
    let ub = div_floor(num, t_cm) + 1;
    u32::try_from(ub)
        .ok()
        .filter(|&u| u >= 1)
        .ok_or(WindowError::Infeasible { lb: 1, ub })
}

/// Latest slot that still beats the downstream fill-up prediction, or `None`
/// when downstream traffic is not modelled (no bound).
pub fn downstream_bound(s: &OnuScheduleState, cfg: &WindowConfig) -> Option<u32> {
    let t_bd = s.ds_fill_time?;
    let ub = div_floor(t_bd.as_ns(), cfg.t_cm.as_ns()) + 1;
    Some(u32::try_from(ub).unwrap_or(1).max(1))
}

/// Latest slot that keeps at least one REPORT inside the de-registration
/// timer.
pub fn dereg_bound(s: &OnuScheduleState, cfg: &WindowConfig) -> Result<u32, WindowError> {
    let t_cm = cfg.t_cm.as_ns();
    let ub = div_floor(s.last_report_time.as_ns() + cfg.t_dereg.as_ns(), t_cm) + 1;
    u32::try_from(ub)
        .ok()
        .filter(|&u| u >= 1)
        .ok_or(WindowError::Infeasible { lb: 1, ub })
}

/// Earliest slot the ONU can be serving in if the wake-up message leaves now:
/// the wake round trip must complete and the REPORT must land first.
pub fn presence_bound(s: &OnuScheduleState, cfg: &WindowConfig) -> u32 {
    let lb = div_ceil(s.rtt.as_ns() + wake_ns(cfg, s), cfg.t_cm.as_ns()) + 1;
    u32::try_from(lb).unwrap_or(1).max(1)
}

/// Earliest slot that lets the current sleep mode run for its minimum
/// worthwhile duration (clamped at the first assignable slot).
pub fn min_sleep_bound(s: &OnuScheduleState, cfg: &WindowConfig) -> u32 {
    let t_cm = cfg.t_cm.as_ns();
    let num = s.last_report_time.as_ns() + s.min_sleep_threshold.as_ns() - 2 * t_cm;
    let lb = div_ceil(num, t_cm) + 1;
    u32::try_from(lb).unwrap_or(1).max(1)
}

/// Combines every bound into the ONU's feasible window, or the forced slot
/// when a wake-up message is already in flight.
pub fn window(s: &OnuScheduleState, cfg: &WindowConfig) -> Result<SlotWindow, WindowError> {
    if s.wake_sent_at.is_some() {
        return Ok(SlotWindow::Forced(forced_slot(s, cfg)?));
    }
    let lb = presence_bound(s, cfg).max(min_sleep_bound(s, cfg));
    let mut ub = upstream_bound(s, cfg)?.min(dereg_bound(s, cfg)?);
    if let Some(ds) = downstream_bound(s, cfg) {
        ub = ub.min(ds);
    }
    if lb > ub {
        return Err(WindowError::Infeasible { lb: i64::from(lb), ub: i64::from(ub) });
    }
    Ok(SlotWindow::Range { lb, ub })
}

/// Output of [`build_problem`]: the assembled instance (when any ONU has a
/// feasible window) plus the ONUs whose windows collapsed and who must be
/// woken immediately instead of scheduled.
#[derive(Debug)]
pub struct BuiltProblem {
    pub problem: Option<AssignmentProblem>,
    /// ONU ids (in input order) with a seat in the problem; row `i` of the
    /// problem is `scheduled[i]`.
    pub scheduled: Vec<u32>,
    /// ONU ids whose windows were infeasible, with the offending bounds.
    pub immediate_wake: Vec<(u32, WindowError)>,
}

/// Computes every ONU's window and assembles the arc set over slots
/// `1 ..= M`, `M` being the largest reachable slot. Infeasible ONUs are
/// routed to the immediate-wake side list rather than failing the batch.
pub fn build_problem(
    states: &[OnuScheduleState],
    cfg: &WindowConfig,
) -> Result<BuiltProblem, WindowError> {
    let windows: Vec<(u32, Result<SlotWindow, WindowError>)> =
        states.iter().map(|s| (s.onu_id, window(s, cfg))).collect();
    assemble_problem(windows, None)
}

/// Assembly half of [`build_problem`], split out so callers can post-process
/// windows (e.g. tighten them with extra SLA constraints) before the arc set
/// is fixed.
pub fn assemble_problem(
    windows: Vec<(u32, Result<SlotWindow, WindowError>)>,
    weights: Option<Weights>,
) -> Result<BuiltProblem, WindowError> {
    let mut scheduled = Vec::new();
    let mut usable = Vec::new();
    let mut immediate_wake = Vec::new();
    for (onu_id, w) in windows {
        match w {
            Ok(w) => {
                scheduled.push(onu_id);
                usable.push(w);
            }
            Err(e) => immediate_wake.push((onu_id, e)),
        }
    }
    let problem = if usable.is_empty() {
        None
    } else {
        let max_slot = usable.iter().map(|w| w.ub()).max().expect("nonempty");
        Some(AssignmentProblem::from_windows(usable, 1, max_slot, weights, None)?)
    };
    Ok(BuiltProblem { problem, scheduled, immediate_wake })
}
