use super::{Mode, Trace};
use crate::error::SimError;

/// Shortest trace accepted by [`estimate_stability`].
pub const MIN_STABILITY_SLOTS: usize = 10_000;
/// Max-queue growth, in packets per 1000 slots, at or below which a trace is stable.
pub const STABLE_SLOPE_PER_1000: f64 = 0.01;
/// Fitted rise across the window, as a fraction of the window's mean max-queue,
/// at or below which a trace is stable. A queue growing linearly since before
/// the window scores at least 2/3 here.
pub const STABLE_RELATIVE_RISE: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Least-squares growth of the maximum queue over the window, per 1000 slots.
    pub slope: f64,
    /// Mean of the maximum queue over the window.
    pub mean_queue: f64,
    /// Fitted rise across the window divided by `max(mean_queue, 1)`.
    pub relative_rise: f64,
}

/// Fits a line to the maximum queue length over the second half of the trace.
///
/// Queues follow a sawtooth with the period structure, so the window is
/// trimmed to start on a period boundary and span whole periods whenever
/// at least one full period fits.
///
/// The trace is stable when the slope is at most [`STABLE_SLOPE_PER_1000`],
/// or when the fitted rise is at most [`STABLE_RELATIVE_RISE`] of the mean
/// queue (slow drift of a queue that stays small).
pub fn estimate_stability(trace: &Trace) -> Result<Stability, SimError> {
    let len = trace.slots.len();
    if len < MIN_STABILITY_SLOTS {
        return Err(SimError::ShortTrace { got: len, min: MIN_STABILITY_SLOTS });
    }
    let period = match trace.mode {
        Mode::Centralized => trace.theta,
        Mode::Distributed => 2 * trace.theta,
    }
    .max(1) as usize;
    let mut start = len / 2;
    let mut end = len;
    let aligned = start.div_ceil(period) * period;
    if aligned < end {
        let whole = (end - aligned) / period * period;
        if whole > 0 {
            start = aligned;
            end = aligned + whole;
        }
    }
    let window = &trace.slots[start..end];

    let m = window.len() as f64;
    let mean_x = (m - 1.0) / 2.0;
    let mean_y = window.iter().map(|r| r.max_queue as f64).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, r) in window.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (r.max_queue as f64 - mean_y);
        sxx += dx * dx;
    }
    let per_slot = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let slope = 1000.0 * per_slot;
    let relative_rise = per_slot * m / mean_y.max(1.0);
    Ok(Stability {
        stable: slope <= STABLE_SLOPE_PER_1000 || relative_rise <= STABLE_RELATIVE_RISE,
        slope,
        mean_queue: mean_y,
        relative_rise,
    })
}
