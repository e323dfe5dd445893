//! Self-similar upstream traffic: per-ONU aggregation of ON-OFF sources with
//! Pareto-distributed period lengths.
//!
//! Each source emits fixed-size packets at its peak rate while ON and is
//! silent while OFF. Period lengths are heavy-tailed with shape
//! `alpha = 3 - 2H`, which yields the configured Hurst parameter in the
//! aggregate. Samples are drawn by inverse CDF through `libm` (bit-identical
//! across platforms) and truncated at 10 s to bound single-period
//! pathologies; the truncation slightly thins the tail, so the Pareto scale
//! is solved from the truncated mean and the configured load stays unbiased.
//! The packet clock carries its phase across periods, making the long-run
//! rate exactly `load * peak` without per-period rounding bias.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrafficError {
    #[error("load must lie in (0, 1], got {0}")]
    InvalidLoad(String),
    #[error("invalid traffic config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug)]
pub struct TrafficConfig {
    pub num_sources: u32,
    pub hurst: f64,
    /// Peak aggregate rate of one ONU; each source runs at an equal share.
    pub peak_rate_bps: u64,
    pub packet_bits: u32,
    /// Offered mean rate as a fraction of the peak rate.
    pub load: f64,
    /// Mean ON-period length (the OFF mean follows from the load).
    pub mean_on: crate::model::Duration,
    /// Hard cap on sampled period lengths.
    pub truncation: crate::model::Duration,
    /// Overrides the Hurst-derived tail shape when set; must stay in (1, 2).
    pub shape_override: Option<f64>,
}

impl TrafficConfig {
    pub fn new(load: f64) -> Self {
        TrafficConfig {
            num_sources: 16,
            hurst: 0.8,
            peak_rate_bps: 100_000_000,
            packet_bits: 12_000,
            load,
            mean_on: crate::model::Duration::from_ms(10),
            truncation: crate::model::Duration::from_secs(10),
            shape_override: None,
        }
    }

    fn shape(&self) -> f64 {
        self.shape_override.unwrap_or(3.0 - 2.0 * self.hurst)
    }
}

/// Mean of `min(X, t)` for Pareto(shape, scale).
fn truncated_pareto_mean(scale: f64, shape: f64, t: f64) -> f64 {
    scale * shape / (shape - 1.0) - libm::pow(scale / t, shape) * t / (shape - 1.0)
}

/// Scale parameter whose truncated mean matches `target` (seconds).
fn scale_for_mean(target: f64, shape: f64, t: f64) -> f64 {
    let mut lo = target * (shape - 1.0) / shape;
    let mut hi = target;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if truncated_pareto_mean(mid, shape, t) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct OnOffSource {
    rng: ChaCha8Rng,
    shape: f64,
    scale_on_s: f64,
    scale_off_s: f64,
    truncation_ns: i64,
    /// Packet spacing while ON.
    spacing_ns: i64,
    always_on: bool,
    /// Wall-clock end of the current ON period.
    on_end: i64,
    /// ON time still to elapse before the next packet.
    phase_ns: i64,
    /// Wall-clock time of the next emission, advanced lazily.
    next_emit: i64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl OnOffSource {
    fn sample_period(&mut self, scale_s: f64) -> i64 {
        // Uniform in (0, 1]; inverse CDF of the Pareto tail.
        let u = (self.rng.random::<u64>() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u = 1.0 - u;
        let x = scale_s * libm::pow(u, -1.0 / self.shape);
        let ns = libm::round(x * 1e9) as i64;
        ns.min(self.truncation_ns).max(1)
    }

    /// Advances period state until the wall-clock time of the next packet is
    /// known.
    fn advance(&mut self) {
        loop {
            let due = self.next_emit + self.phase_ns;
            if self.always_on || due < self.on_end {
                self.next_emit = due;
                self.phase_ns = self.spacing_ns;
                return;
            }
            // Bank the ON time left before the period ends, skip the OFF
            // period and open the next ON period.
            self.phase_ns = due - self.on_end;
            let off = self.sample_period(self.scale_off_s);
            let on = self.sample_period(self.scale_on_s);
            self.next_emit = self.on_end + off;
            self.on_end = self.next_emit + on;
        }
    }
}

/// Merged arrival stream of one ONU.
pub struct TrafficGen {
    sources: Vec<OnOffSource>,
    packet_bits: u32,
}

impl TrafficGen {
    pub fn new(cfg: &TrafficConfig, seed: u64) -> Result<TrafficGen, TrafficError> {
        if !(cfg.load > 0.0 && cfg.load <= 1.0) {
            return Err(TrafficError::InvalidLoad(format!("{}", cfg.load)));
        }
        let shape = cfg.shape();
        if !(shape > 1.0 && shape < 2.0) {
            return Err(TrafficError::InvalidConfig(format!(
                "tail shape {shape} outside (1, 2); adjust hurst or the override"
            )));
        }
        if cfg.num_sources == 0 || cfg.peak_rate_bps == 0 || cfg.packet_bits == 0 {
            return Err(TrafficError::InvalidConfig("zero-sized parameter".into()));
        }
        let per_source_bps = cfg.peak_rate_bps as f64 / f64::from(cfg.num_sources);
        let spacing_ns = libm::round(f64::from(cfg.packet_bits) / per_source_bps * 1e9) as i64;
        let trunc_s = cfg.truncation.as_ns() as f64 * 1e-9;
        let mean_on_s = cfg.mean_on.as_ns() as f64 * 1e-9;
        let always_on = cfg.load >= 1.0;
        let scale_on_s = scale_for_mean(mean_on_s, shape, trunc_s);
        let mean_off_s = mean_on_s * (1.0 - cfg.load) / cfg.load;
        let scale_off_s = if always_on {
            0.0
        } else {
            scale_for_mean(mean_off_s, shape, trunc_s)
        };

        let sources = (0..cfg.num_sources)
            .map(|i| {
                let mut src = OnOffSource {
                    rng: ChaCha8Rng::seed_from_u64(splitmix64(
                        seed ^ splitmix64(u64::from(i)),
                    )),
                    shape,
                    scale_on_s,
                    scale_off_s,
                    truncation_ns: cfg.truncation.as_ns(),
                    spacing_ns,
                    always_on,
                    on_end: 0,
                    phase_ns: 0,
                    next_emit: 0,
                };
                // Start in an OFF period with a random fraction of the packet
                // phase consumed, so sources do not fire in lockstep at zero.
                let on = src.sample_period(src.scale_on_s);
                let off = if always_on { 0 } else { src.sample_period(src.scale_off_s) };
                src.next_emit = off;
                src.on_end = off + on;
                src.phase_ns = src.rng.random_range(0..src.spacing_ns.max(1));
                src.advance();
                src
            })
            .collect();
        Ok(TrafficGen { sources, packet_bits: cfg.packet_bits })
    }

    /// Next packet in the merged stream: `(arrival_ns, bits)`. Timestamps are
    /// non-decreasing; the stream is unbounded.
    pub fn next_arrival(&mut self) -> (i64, u32) {
        let (idx, _) = self
            .sources
            .iter()
            .enumerate()
            .min_by_key(|(i, s)| (s.next_emit, *i))
            .expect("at least one source");
        let t = self.sources[idx].next_emit;
        self.sources[idx].advance();
        (t, self.packet_bits)
    }

    /// All arrival times strictly before `horizon_ns`.
    pub fn collect_until(&mut self, horizon_ns: i64) -> Vec<i64> {
        let mut out = Vec::new();
        loop {
            let peek = self
                .sources
                .iter()
                .map(|s| s.next_emit)
                .min()
                .expect("at least one source");
            if peek >= horizon_ns {
                return out;
            }
            let (t, _) = self.next_arrival();
            out.push(t);
        }
    }
}
