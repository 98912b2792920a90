use std::sync::Arc;

use super::{Clock, IqError, IqFrame, Result};

/// Resource-block counts of the six standard LTE channel bandwidths.
pub const SUPPORTED_NRB: [u32; 6] = [6, 15, 25, 50, 75, 100];

/// Throttled links run at this fraction of the nominal LTE rate.
pub const THROTTLE_FRACTION: f64 = 0.75;

/// Nominal LTE baseband sample rate for `n_rb` resource blocks.
pub fn base_rate(n_rb: u32) -> Result<f64> {
    let rate = match n_rb {
        6 => 1.92e6,
        15 => 3.84e6,
        25 => 7.68e6,
        50 => 15.36e6,
        75 => 23.04e6,
        100 => 30.72e6,
        other => {
            return Err(IqError::Domain(format!(
                "unsupported resource-block count {other}; valid values are {SUPPORTED_NRB:?}"
            )))
        }
    };
    Ok(rate)
}

pub fn throttle_rate(n_rb: u32) -> Result<f64> {
    Ok(THROTTLE_FRACTION * base_rate(n_rb)?)
}

/// Average-rate pacing stage (the flowgraph throttle).
///
/// Each frame is released when the cumulative sample count divided by the
/// target rate has elapsed since the first frame arrived. The schedule is
/// absolute, so oversleeping on one frame does not accumulate drift.
pub struct Pacer {
    target_rate_hz: f64,
    clock: Arc<dyn Clock>,
    origin_s: Option<f64>,
    delivered: u64,
}

impl Pacer {
    pub fn new(target_rate_hz: f64, clock: Arc<dyn Clock>) -> Result<Self> {
        if !(target_rate_hz > 0.0) || !target_rate_hz.is_finite() {
            return Err(IqError::Domain(format!(
                "pacing rate must be positive, got {target_rate_hz}"
            )));
        }
        Ok(Self {
            target_rate_hz,
            clock,
            origin_s: None,
            delivered: 0,
        })
    }

    pub fn target_rate_hz(&self) -> f64 {
        self.target_rate_hz
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Blocks (or advances a virtual clock) until the frame is due, then
    /// hands it back untouched.
    pub fn pace(&mut self, frame: IqFrame) -> IqFrame {
        let origin = *self.origin_s.get_or_insert_with(|| self.clock.now_s());
        self.delivered += frame.len() as u64;
        let due = origin + self.delivered as f64 / self.target_rate_hz;
        self.clock.sleep_until(due);
        frame
    }
}

impl std::fmt::Debug for Pacer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pacer")
            .field("target_rate_hz", &self.target_rate_hz)
            .field("delivered", &self.delivered)
            .finish()
    }
}
