//! Receiver-driven sample streaming between virtual radios.
//!
//! Every link has one provider, which answers requests with samples, and
//! one consumer, which asks for them. A request for `n` samples is answered
//! with `min(n, buffered)` samples, never zero: the provider blocks until at
//! least one sample is available. Three carriers share that contract:
//!
//! - [`in_process_link`]: a bounded in-memory queue, used by tests and by the
//!   realtime scenario runner.
//! - [`tcp`]: little-endian length-prefixed framing over a TCP stream.
//! - `zmq` (feature `zmq`): a REQ/REP adapter carrying interleaved `f32`
//!   samples, for interop with virtual-radio peers.
//!
//! [`bridge_link`] stands in the middle of a link and pushes every sample
//! through an ordered list of DSP [`Stage`]s.

mod bridge;
mod inproc;
mod source;
pub mod tcp;
#[cfg(feature = "zmq")]
pub mod zmq;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iqcore::{IqError, IqFrame};

pub use bridge::{
    bridge_link, AwgnStage, BridgeHandle, BridgeStats, GainStage, MixTap, PaceStage, Stage,
    TeeStage,
};
pub use inproc::{in_process_link, serve_samples, InProcessConsumer, SampleWriter, ServeStats};
pub use source::PilotSource;

/// Default wait for a reply before a consumer gives up.
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("connection error on link {link}: {reason}")]
    Connection { link: String, reason: String },
    #[error("timed out after {0:?} waiting for samples")]
    Timeout(Duration),
    #[error("bridge configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dsp(#[from] IqError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TransportError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Downlink,
    Uplink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Replies to requests with samples.
    Provider,
    /// Requests samples.
    Consumer,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkEndpoint {
    pub link_id: String,
    pub direction: Direction,
    pub role: Role,
}

impl LinkEndpoint {
    pub fn new(link_id: impl Into<String>, direction: Direction, role: Role) -> Self {
        Self {
            link_id: link_id.into(),
            direction,
            role,
        }
    }

    /// The other end of the same link.
    pub fn peer(&self) -> Self {
        let role = match self.role {
            Role::Provider => Role::Consumer,
            Role::Consumer => Role::Provider,
        };
        Self::new(self.link_id.clone(), self.direction, role)
    }
}

impl fmt::Display for LinkEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{:?}/{:?}", self.link_id, self.direction, self.role)
    }
}

/// A request for up to `count` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRequest {
    count: u32,
}

impl SampleRequest {
    pub fn new(count: u32) -> Result<Self> {
        if count == 0 {
            return Err(TransportError::Protocol(
                "sample request count must be >= 1".into(),
            ));
        }
        Ok(Self { count })
    }

    pub fn count(&self) -> u32 {
        self.count
    }
}

/// Consumer side of a link.
///
/// Replies are returned as frames positioned on the link's stream, so
/// consecutive calls observe contiguous `start_index` values.
pub trait SampleConsumer: Send {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame>;

    fn sample_rate_hz(&self) -> f64;

    fn link_id(&self) -> &str;
}

impl<T: SampleConsumer + ?Sized> SampleConsumer for Box<T> {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame> {
        (**self).request_samples(count)
    }

    fn sample_rate_hz(&self) -> f64 {
        (**self).sample_rate_hz()
    }

    fn link_id(&self) -> &str {
        (**self).link_id()
    }
}

/// Keeps requesting until exactly `count` samples have arrived.
///
/// Returns fewer only when the provider goes away or stalls past the timeout
/// part way; the samples collected so far are returned and the next call
/// reports the error.
pub fn request_exact<C: SampleConsumer + ?Sized>(
    consumer: &mut C,
    count: usize,
) -> Result<IqFrame> {
    let first = consumer.request_samples(count)?;
    let mut frame = first;
    while frame.len() < count {
        match consumer.request_samples(count - frame.len()) {
            Ok(more) => frame.samples.extend(more.samples),
            Err(TransportError::Connection { .. } | TransportError::Timeout(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(frame)
}
