//! Wire types shared by the HTTP routes and the WebSocket.

use std::collections::BTreeMap;

use hoemu_core::ransim::{EventKind, NetEvent};
use hoemu_core::scenario::{LiveState, Scenario};
use hoemu_core::CellId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    SetGain,
    GetState,
    StartScenario,
    StopScenario,
}

/// A client request as it arrives on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlCommand {
    pub cmd: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
}

/// A command whose required fields have been checked.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetGain { link: String, gain_db: f64 },
    GetState,
    StartScenario(Box<Scenario>),
    StopScenario,
}

impl ControlCommand {
    pub fn set_gain(link: impl Into<String>, gain_db: f64) -> Self {
        Self {
            cmd: CommandKind::SetGain,
            link: Some(link.into()),
            gain_db: Some(gain_db),
            scenario: None,
        }
    }

    pub fn simple(cmd: CommandKind) -> Self {
        Self {
            cmd,
            link: None,
            gain_db: None,
            scenario: None,
        }
    }

    pub fn validate(self) -> Result<Command, ErrorReply> {
        match self.cmd {
            CommandKind::SetGain => {
                let (Some(link), Some(gain_db)) = (self.link, self.gain_db) else {
                    return Err(ErrorReply::invalid("set_gain requires link and gain_db"));
                };
                if !gain_db.is_finite() {
                    return Err(ErrorReply::invalid(format!(
                        "gain_db must be finite, got {gain_db}"
                    )));
                }
                Ok(Command::SetGain { link, gain_db })
            }
            CommandKind::GetState => Ok(Command::GetState),
            CommandKind::StopScenario => Ok(Command::StopScenario),
            CommandKind::StartScenario => {
                let body = self
                    .scenario
                    .ok_or_else(|| ErrorReply::invalid("start_scenario requires a scenario"))?;
                let s = Scenario::from_json(&body.to_string())
                    .map_err(|e| ErrorReply::invalid(e.to_string()))?;
                Ok(Command::StartScenario(Box::new(s)))
            }
        }
    }
}

/// Parses one client text frame.
pub fn parse_command(text: &str) -> Result<Command, ErrorReply> {
    let raw: ControlCommand = serde_json::from_str(text)
        .map_err(|e| ErrorReply::invalid(format!("malformed command: {e}")))?;
    raw.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Invalid,
    UnknownLink,
    NoScenario,
    Busy,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub code: ErrorCode,
    pub reason: String,
}

impl ErrorReply {
    pub fn new(code: ErrorCode, reason: impl Into<String>) -> Self {
        Self {
            code,
            reason: reason.into(),
        }
    }

    pub fn invalid(reason: impl Into<String>) -> Self {
        Self::new(ErrorCode::Invalid, reason)
    }
}

/// Answer to one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ack {
        cmd: CommandKind,
        /// Scenario time the command took effect at.
        t_s: f64,
    },
    State(LiveState),
    Error(ErrorReply),
}

/// Periodic snapshot pushed to every subscriber while a scenario runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub t_s: f64,
    pub rsrp_db: BTreeMap<CellId, f64>,
    pub snr_db: Option<f64>,
    pub serving: Option<CellId>,
    pub gains_db: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventKind>,
}

impl TelemetryFrame {
    pub fn from_state(st: &LiveState, event: Option<EventKind>) -> Self {
        Self {
            t_s: st.t_s,
            rsrp_db: st.rsrp_db.clone(),
            snr_db: st.snr_db,
            serving: st.serving,
            gains_db: st.gains_db.clone(),
            event,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    Handover,
    S1,
    Timeout,
    Warning,
    Error,
}

/// A discrete network event as streamed to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMessage {
    pub kind: EventClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<CellId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<CellId>,
    pub t_s: f64,
    pub label: String,
}

impl From<&NetEvent> for EventMessage {
    fn from(e: &NetEvent) -> Self {
        let (kind, from, to) = match &e.event {
            EventKind::Handover { from, to } => (EventClass::Handover, Some(*from), Some(*to)),
            EventKind::S1 { .. } => (
                EventClass::S1,
                e.message.as_ref().map(|m| m.source),
                e.message.as_ref().map(|m| m.target),
            ),
            EventKind::HandoverTimeout { .. } => (EventClass::Timeout, None, None),
            EventKind::Warning { .. } => (EventClass::Warning, None, None),
            EventKind::Error { .. } => (EventClass::Error, None, None),
        };
        Self {
            kind,
            from,
            to,
            t_s: e.t_s,
            label: e.event.to_string(),
        }
    }
}

/// Everything the server pushes down a socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Telemetry(TelemetryFrame),
    Event(EventMessage),
    Ack { cmd: CommandKind, t_s: f64 },
    State(LiveState),
    Error(ErrorReply),
}

impl From<Reply> for ServerMessage {
    fn from(r: Reply) -> Self {
        match r {
            Reply::Ack { cmd, t_s } => ServerMessage::Ack { cmd, t_s },
            Reply::State(s) => ServerMessage::State(s),
            Reply::Error(e) => ServerMessage::Error(e),
        }
    }
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
