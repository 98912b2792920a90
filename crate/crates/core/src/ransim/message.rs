use std::fmt;

use serde::{Deserialize, Serialize};

use super::{RanError, Result};
use crate::iqcore::{CellId, MeasurementSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum S1Kind {
    MeasurementReport,
    HandoverRequired,
    HandoverRequest,
    HandoverRequestAck,
    HandoverCommand,
    HandoverNotify,
}

impl S1Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            S1Kind::MeasurementReport => "MeasurementReport",
            S1Kind::HandoverRequired => "HandoverRequired",
            S1Kind::HandoverRequest => "HandoverRequest",
            S1Kind::HandoverRequestAck => "HandoverRequestAck",
            S1Kind::HandoverCommand => "HandoverCommand",
            S1Kind::HandoverNotify => "HandoverNotify",
        }
    }
}

impl fmt::Display for S1Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One handover attempt, numbered by the source eNB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HandoverId {
    pub source: CellId,
    pub seq: u32,
}

impl fmt::Display for HandoverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.source, self.seq)
    }
}

/// `source` is always the cell the UE is leaving, `target` the one it is
/// moving to, whichever direction the message travels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S1Message {
    pub kind: S1Kind,
    pub source: CellId,
    pub target: CellId,
    pub t_sent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handover: Option<HandoverId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<MeasurementSnapshot>,
}

impl S1Message {
    pub fn report(
        source: CellId,
        target: CellId,
        t_sent: f64,
        snapshot: MeasurementSnapshot,
    ) -> Self {
        Self {
            kind: S1Kind::MeasurementReport,
            source,
            target,
            t_sent,
            handover: None,
            payload: Some(snapshot),
        }
    }

    pub fn for_handover(kind: S1Kind, id: HandoverId, target: CellId, t_sent: f64) -> Self {
        Self {
            kind,
            source: id.source,
            target,
            t_sent,
            handover: Some(id),
            payload: None,
        }
    }

    /// Derives the next message of the same attempt.
    pub fn follow_up(&self, kind: S1Kind, t_sent: f64) -> Self {
        Self {
            kind,
            t_sent,
            payload: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source == self.target {
            return Err(RanError::Protocol(format!(
                "{} names cell {} as both source and target",
                self.kind, self.source
            )));
        }
        match self.kind {
            S1Kind::MeasurementReport if self.payload.is_none() => Err(RanError::Protocol(
                "MeasurementReport without a snapshot".into(),
            )),
            S1Kind::MeasurementReport => Ok(()),
            _ if self.handover.is_none() => Err(RanError::Protocol(format!(
                "{} without a handover id",
                self.kind
            ))),
            _ => Ok(()),
        }
    }

    pub fn handover_id(&self) -> Result<HandoverId> {
        self.handover
            .ok_or_else(|| RanError::Protocol(format!("{} without a handover id", self.kind)))
    }
}
