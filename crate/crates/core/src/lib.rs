//! Virtual RF channel emulation and S1 handover simulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`iqcore`]: complex-baseband primitives (gain, mixing, noise, pacing,
//!   pilot combs, RSRP/SNR estimation).
//! - [`transport`]: receiver-driven request/reply sample streaming and the
//!   flowgraph bridges that stand between virtual radios.
//! - [`ransim`]: UE, eNB and MME state machines (A3 reporting and the S1
//!   handover choreography).
//! - [`scenario`]: declarative experiments, the runner and trace output.
//! - [`bench`]: PA saturation benchmarks (Rapp model, Welch PSD, ACLR, EVM,
//!   throughput).

pub mod bench;
pub mod iqcore;
pub mod ransim;
pub mod scenario;
pub mod transport;

pub use iqcore::{CellId, IqFrame, MeasurementSnapshot, PilotSpec};
