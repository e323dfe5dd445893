//! ONU-side behaviour: the sleep-mode decision rules, buffer fill-up
//! prediction and the upstream packet buffer.

use crate::model::{Duration, PowerProfile, SleepMode};
use std::collections::VecDeque;

/// Sleep retention check, run every decision period while asleep. The mode is
/// kept only when the predicted fill-up time outlasts one more decision
/// period plus the wake-up latency plus two polling cycles (one to catch a
/// GATE, one to be granted).
pub fn retain_sleep(t_bu: Duration, t_m: Duration, t_sw: Duration, t_cm: Duration) -> bool {
    t_bu.as_ns() > t_m.as_ns() + t_sw.as_ns() + 2 * t_cm.as_ns()
}

/// Post-drain mode choice: the deepest mode whose minimum worthwhile sleep
/// fits inside the predicted fill-up time.
pub fn post_drain_mode(t_bu: Duration, t_lb_deep: Duration, t_lb_fast: Duration) -> SleepMode {
    if t_bu >= t_lb_deep {
        SleepMode::DeepSleep
    } else if t_bu > t_lb_fast {
        SleepMode::FastSleep
    } else {
        SleepMode::Active
    }
}

/// Sleep duration beyond which `low` beats `high` on energy: solves
/// `P_low * T + P_on * T_sw_low = P_high * T + P_on * T_sw_high`.
pub fn break_even_threshold(profile: &PowerProfile, low: SleepMode, high: SleepMode) -> Duration {
    let p_on = profile.power_uw(SleepMode::Active) as i128;
    let wake_gap =
        (profile.wake_time(low).as_ns() - profile.wake_time(high).as_ns()) as i128;
    let power_gap = (profile.power_uw(high) - profile.power_uw(low)) as i128;
    debug_assert!(wake_gap > 0 && power_gap > 0);
    Duration::from_ns(i64::try_from(p_on * wake_gap / power_gap).expect("fits in ns range"))
}

/// Exponentially weighted arrival-rate estimate (bits per second).
#[derive(Clone, Debug)]
pub struct RateEstimate {
    half_life_ns: f64,
    rate_bps: f64,
    pending_bits: u64,
    last_update_ns: i64,
}

impl RateEstimate {
    pub fn new(half_life: Duration) -> Self {
        RateEstimate {
            half_life_ns: half_life.as_ns() as f64,
            rate_bps: 0.0,
            pending_bits: 0,
            last_update_ns: 0,
        }
    }

    pub fn on_arrival(&mut self, bits: u32) {
        self.pending_bits += u64::from(bits);
    }

    pub fn advance_to(&mut self, now_ns: i64) {
        if now_ns <= self.last_update_ns {
            return;
        }
        let dt = (now_ns - self.last_update_ns) as f64;
        let inst_bps = self.pending_bits as f64 * 1e9 / dt;
        let keep = libm::exp2(-dt / self.half_life_ns);
        self.rate_bps = keep * self.rate_bps + (1.0 - keep) * inst_bps;
        self.pending_bits = 0;
        self.last_update_ns = now_ns;
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }
}

/// Upstream buffer with pre-generated arrivals and drop-tail admission.
#[derive(Clone, Debug)]
pub struct OnuBuffer {
    /// Packet arrival times, whole horizon, ascending.
    arrivals: Vec<i64>,
    packet_bits: u32,
    capacity_bits: u64,
    /// Next arrival not yet admitted.
    cursor: usize,
    /// Arrival timestamps of queued packets.
    queue: VecDeque<i64>,
    pub queue_bits: u64,
    pub drops: u64,
    pub rate: RateEstimate,
}

impl OnuBuffer {
    pub fn new(arrivals: Vec<i64>, packet_bits: u32, capacity_bits: u64) -> Self {
        OnuBuffer {
            arrivals,
            packet_bits,
            capacity_bits,
            cursor: 0,
            queue: VecDeque::new(),
            queue_bits: 0,
            drops: 0,
            rate: RateEstimate::new(Duration::from_ms(10)),
        }
    }

    /// Admits every arrival up to and including `now`.
    pub fn catch_up(&mut self, now_ns: i64) {
        while self.cursor < self.arrivals.len() && self.arrivals[self.cursor] <= now_ns {
            let t = self.arrivals[self.cursor];
            self.cursor += 1;
            self.rate.on_arrival(self.packet_bits);
            if self.queue_bits + u64::from(self.packet_bits) > self.capacity_bits {
                self.drops += 1;
            } else {
                self.queue.push_back(t);
                self.queue_bits += u64::from(self.packet_bits);
            }
        }
        self.rate.advance_to(now_ns);
    }

    /// Removes up to `grant_bits` worth of whole packets, returning their
    /// arrival timestamps in order.
    pub fn dequeue(&mut self, grant_bits: u64) -> Vec<i64> {
        let mut out = Vec::new();
        let mut left = grant_bits;
        while u64::from(self.packet_bits) <= left {
            match self.queue.pop_front() {
                Some(t) => {
                    out.push(t);
                    self.queue_bits -= u64::from(self.packet_bits);
                    left -= u64::from(self.packet_bits);
                }
                None => break,
            }
        }
        out
    }

    /// Time from `now` until the queue (with no service) reaches `threshold`,
    /// by exact look-ahead into the arrival trace; `cap` bounds the horizon
    /// and is returned when the trace runs out first.
    pub fn fill_time_exact(&self, now_ns: i64, threshold_bits: u64, cap: Duration) -> Duration {
        if self.queue_bits >= threshold_bits {
            return Duration::ZERO;
        }
        let mut cum = self.queue_bits;
        for &t in &self.arrivals[self.cursor..] {
            cum += u64::from(self.packet_bits);
            if cum >= threshold_bits {
                let dt = t - now_ns;
                return if dt <= 0 { Duration::ZERO } else { Duration::from_ns(dt).min(cap) };
            }
        }
        cap
    }

    /// Rate-estimate version of the fill-time prediction.
    pub fn fill_time_estimated(&self, threshold_bits: u64, cap: Duration) -> Duration {
        if self.queue_bits >= threshold_bits {
            return Duration::ZERO;
        }
        let rate = self.rate.rate_bps();
        if rate <= 0.0 {
            return cap;
        }
        let gap_bits = (threshold_bits - self.queue_bits) as f64;
        let ns = libm::round(gap_bits / rate * 1e9) as i64;
        Duration::from_ns(ns.max(0)).min(cap)
    }
}
