//! Complex-baseband DSP primitives.

mod clock;
mod frame;
mod gain;
mod measure;
mod pilot;
mod rates;

pub use clock::{Clock, VirtualClock, WallClock};
pub use frame::{add_awgn, apply_gain, mix, IqFrame, Sample};
pub use gain::{db_to_linear, linear_to_db, GainCell};
pub use measure::{
    estimate_rsrp, estimate_snr, CellId, MeasurementSnapshot, PilotBank, DB_FLOOR,
    DEFAULT_RSRP_CAL_DB, SNR_CAP_DB,
};
pub use pilot::{make_pilot, PilotSpec, PilotTable};
pub use rates::{base_rate, throttle_rate, Pacer, SUPPORTED_NRB, THROTTLE_FRACTION};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IqError {
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, IqError>;
