use std::collections::BTreeSet;

use super::{HandoverId, RanError, Result, S1Kind, S1Message};
use crate::iqcore::CellId;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Attempt {
    /// Required sent, waiting for the command until the deadline.
    Awaiting { id: HandoverId, deadline: f64 },
    /// Command relayed; the attempt ends when the MME reports completion.
    Commanded { id: HandoverId },
}

impl Attempt {
    fn id(&self) -> HandoverId {
        match *self {
            Attempt::Awaiting { id, .. } | Attempt::Commanded { id } => id,
        }
    }
}

/// One eNB, acting as source or target depending on the message.
#[derive(Debug, Clone)]
pub struct EnbState {
    pub cell: CellId,
    pub admitting: bool,
    neighbors: BTreeSet<CellId>,
    attempt: Option<Attempt>,
    acked: BTreeSet<HandoverId>,
    next_seq: u32,
}

impl EnbState {
    pub fn new(cell: CellId, neighbors: impl IntoIterator<Item = CellId>, admitting: bool) -> Self {
        Self {
            cell,
            admitting,
            neighbors: neighbors.into_iter().filter(|&c| c != cell).collect(),
            attempt: None,
            acked: BTreeSet::new(),
            next_seq: 0,
        }
    }

    pub fn in_progress(&self) -> Option<HandoverId> {
        self.attempt.map(|a| a.id())
    }

    /// Turns a UE report into a HandoverRequired, unless an attempt is
    /// already running.
    pub fn on_meas_report(
        &mut self,
        report: &S1Message,
        now: f64,
        ho_timeout_s: f64,
    ) -> Result<Option<S1Message>> {
        if report.kind != S1Kind::MeasurementReport {
            return Err(RanError::Protocol(format!(
                "eNB {} expected a MeasurementReport, got {}",
                self.cell, report.kind
            )));
        }
        report.validate()?;
        if report.source != self.cell {
            return Err(RanError::Protocol(format!(
                "report for serving cell {} delivered to eNB {}",
                report.source, self.cell
            )));
        }
        if !self.neighbors.contains(&report.target) {
            return Err(RanError::Protocol(format!(
                "report names unconfigured neighbour cell {}",
                report.target
            )));
        }
        if self.attempt.is_some() {
            return Ok(None);
        }
        let id = HandoverId {
            source: self.cell,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.attempt = Some(Attempt::Awaiting {
            id,
            deadline: now + ho_timeout_s,
        });
        Ok(Some(S1Message::for_handover(
            S1Kind::HandoverRequired,
            id,
            report.target,
            now,
        )))
    }

    /// Target side: admit the UE with exactly one Ack per attempt.
    pub fn on_request(&mut self, req: &S1Message, now: f64) -> Result<Option<S1Message>> {
        if req.kind != S1Kind::HandoverRequest {
            return Err(RanError::Protocol(format!(
                "eNB {} expected a HandoverRequest, got {}",
                self.cell, req.kind
            )));
        }
        if req.target != self.cell {
            return Err(RanError::Protocol(format!(
                "request for cell {} delivered to eNB {}",
                req.target, self.cell
            )));
        }
        let id = req.handover_id()?;
        if !self.admitting || !self.acked.insert(id) {
            return Ok(None);
        }
        Ok(Some(req.follow_up(S1Kind::HandoverRequestAck, now)))
    }

    /// Source side: a command for the running attempt is relayed to the UE.
    pub fn on_command(&mut self, cmd: &S1Message) -> Result<bool> {
        let id = cmd.handover_id()?;
        match self.attempt {
            Some(Attempt::Awaiting { id: cur, .. }) if cur == id => {
                self.attempt = Some(Attempt::Commanded { id });
                Ok(true)
            }
            // stale or duplicate command
            _ => Ok(false),
        }
    }

    pub fn on_complete(&mut self, id: HandoverId) {
        if self.in_progress() == Some(id) {
            self.attempt = None;
        }
    }

    /// Gives up the attempt if its deadline has passed.
    pub fn check_timeout(&mut self, now: f64) -> Option<HandoverId> {
        match self.attempt {
            Some(Attempt::Awaiting { id, deadline }) if now >= deadline => {
                self.attempt = None;
                Some(id)
            }
            _ => None,
        }
    }

    pub fn deadline(&self) -> Option<f64> {
        match self.attempt {
            Some(Attempt::Awaiting { deadline, .. }) => Some(deadline),
            _ => None,
        }
    }
}
