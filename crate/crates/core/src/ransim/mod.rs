//! Simplified UE, eNB and MME endpoints.
//!
//! Each endpoint is a plain sequential state machine. [`RanNetwork`] wires
//! them together over an ordered delivery queue keyed by scenario time, so a
//! run driven by a virtual clock is fully deterministic.

mod enb;
mod message;
mod mme;
mod network;
mod ue;

pub use enb::EnbState;
pub use message::{HandoverId, S1Kind, S1Message};
pub use mme::{LatencyModel, Mme, MmeOutcome};
pub use network::{EventKind, NetEvent, RanCell, RanNetwork};
pub use ue::{CommandOutcome, UePhase, UeState};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RanError {
    #[error("state error: {0}")]
    State(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, RanError>;

/// Slack used when comparing a hold time against time-to-trigger, so that
/// measurement instants computed as `i * period` are not lost to rounding.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// A3 event parameters: neighbour better than serving by more than
/// `hysteresis_db`, held for `time_to_trigger_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct A3Config {
    pub hysteresis_db: f64,
    pub time_to_trigger_s: f64,
    pub meas_period_s: f64,
}

impl Default for A3Config {
    fn default() -> Self {
        Self {
            hysteresis_db: 3.0,
            time_to_trigger_s: 0.0,
            meas_period_s: 0.1,
        }
    }
}

impl A3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.hysteresis_db >= 0.0 && self.hysteresis_db.is_finite()) {
            return Err(RanError::Config(format!(
                "hysteresis_db must be >= 0, got {}",
                self.hysteresis_db
            )));
        }
        if !(self.time_to_trigger_s >= 0.0 && self.time_to_trigger_s.is_finite()) {
            return Err(RanError::Config(format!(
                "time_to_trigger_s must be >= 0, got {}",
                self.time_to_trigger_s
            )));
        }
        if !(self.meas_period_s > 0.0 && self.meas_period_s.is_finite()) {
            return Err(RanError::Config(format!(
                "meas_period_s must be > 0, got {}",
                self.meas_period_s
            )));
        }
        Ok(())
    }
}

/// S1 backhaul timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S1Config {
    pub fixed_s: f64,
    pub jitter_s: f64,
    /// Source eNB gives up on an unacknowledged handover after this long.
    #[serde(default = "default_ho_timeout")]
    pub ho_timeout_s: f64,
    /// Service interruption after a switch; A3 is not evaluated meanwhile.
    #[serde(default)]
    pub gap_s: f64,
}

fn default_ho_timeout() -> f64 {
    1.0
}

impl Default for S1Config {
    fn default() -> Self {
        Self {
            fixed_s: 0.0,
            jitter_s: 0.0,
            ho_timeout_s: default_ho_timeout(),
            gap_s: 0.0,
        }
    }
}

impl S1Config {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fixed_s", self.fixed_s),
            ("jitter_s", self.jitter_s),
            ("gap_s", self.gap_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(RanError::Config(format!(
                    "s1_latency.{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.ho_timeout_s > 0.0 && self.ho_timeout_s.is_finite()) {
            return Err(RanError::Config(format!(
                "s1_latency.ho_timeout_s must be > 0, got {}",
                self.ho_timeout_s
            )));
        }
        Ok(())
    }

    pub fn latency(&self) -> LatencyModel {
        LatencyModel {
            fixed_s: self.fixed_s,
            jitter_s: self.jitter_s,
        }
    }
}
