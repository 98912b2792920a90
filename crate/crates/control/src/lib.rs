//! Command-line entry points and the live control server.
//!
//! The server exposes one [`session::Session`] over HTTP and a WebSocket:
//! clients steer link gains of the running scenario and receive telemetry
//! frames at a fixed cadence.

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{Command, ControlCommand, Reply, ServerMessage, TelemetryFrame};
pub use server::router;
pub use session::Session;
