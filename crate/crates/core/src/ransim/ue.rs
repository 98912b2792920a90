use serde::{Deserialize, Serialize};

use super::{A3Config, RanError, Result, S1Kind, S1Message, TIME_EPS};
use crate::iqcore::{CellId, MeasurementSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UePhase {
    Connected,
    HandoverInProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    pub serving: CellId,
    pub a3_entered_at: Option<f64>,
    pub phase: UePhase,
    /// Whether the current A3 entering has already produced its report.
    reported: bool,
    /// A3 is not evaluated before this time (service interruption).
    quiet_until: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandOutcome {
    Switched {
        from: CellId,
        to: CellId,
        notify: S1Message,
    },
    Ignored(String),
}

impl UeState {
    pub fn new(serving: CellId) -> Self {
        Self {
            serving,
            a3_entered_at: None,
            phase: UePhase::Connected,
            reported: false,
            quiet_until: f64::NEG_INFINITY,
        }
    }

    /// Best neighbour by RSRP; the lowest cell id wins a tie.
    fn best_neighbor(&self, snap: &MeasurementSnapshot) -> Option<(CellId, f64)> {
        let mut best: Option<(CellId, f64)> = None;
        for (&cell, &rsrp) in &snap.rsrp_db {
            if cell == self.serving {
                continue;
            }
            if best.map_or(true, |(_, b)| rsrp > b) {
                best = Some((cell, rsrp));
            }
        }
        best
    }

    /// Evaluates the A3 condition on one snapshot and returns a report when
    /// it has held for the time-to-trigger.
    pub fn a3_check(
        &mut self,
        snap: &MeasurementSnapshot,
        cfg: &A3Config,
        now: f64,
    ) -> Result<Option<S1Message>> {
        let serving_rsrp = snap.rsrp(self.serving).ok_or_else(|| {
            RanError::State(format!(
                "snapshot has no RSRP for serving cell {}",
                self.serving
            ))
        })?;
        let (neighbor, neighbor_rsrp) = self
            .best_neighbor(snap)
            .ok_or_else(|| RanError::State("snapshot has no neighbour cell".into()))?;
        if now < self.quiet_until {
            return Ok(None);
        }
        if !(neighbor_rsrp > serving_rsrp + cfg.hysteresis_db) {
            self.a3_entered_at = None;
            self.reported = false;
            return Ok(None);
        }
        let entered = *self.a3_entered_at.get_or_insert(now);
        if self.reported || self.phase != UePhase::Connected {
            return Ok(None);
        }
        if now - entered + TIME_EPS < cfg.time_to_trigger_s {
            return Ok(None);
        }
        self.reported = true;
        self.phase = UePhase::HandoverInProgress;
        let mut payload = snap.clone();
        payload.serving = self.serving;
        Ok(Some(S1Message::report(
            self.serving,
            neighbor,
            now,
            payload,
        )))
    }

    /// Applies a handover command relayed by the source eNB.
    pub fn on_handover_command(
        &mut self,
        cmd: &S1Message,
        now: f64,
        gap_s: f64,
    ) -> Result<CommandOutcome> {
        if cmd.kind != S1Kind::HandoverCommand {
            return Err(RanError::Protocol(format!("UE cannot handle {}", cmd.kind)));
        }
        if cmd.target == self.serving {
            return Ok(CommandOutcome::Ignored(format!(
                "HandoverCommand names current serving cell {}",
                self.serving
            )));
        }
        if self.phase != UePhase::HandoverInProgress {
            return Ok(CommandOutcome::Ignored(format!(
                "HandoverCommand to cell {} while no handover is in progress",
                cmd.target
            )));
        }
        let from = self.serving;
        self.serving = cmd.target;
        self.phase = UePhase::Connected;
        self.a3_entered_at = None;
        self.reported = false;
        self.quiet_until = now + gap_s;
        let notify = cmd.follow_up(S1Kind::HandoverNotify, now);
        Ok(CommandOutcome::Switched {
            from,
            to: cmd.target,
            notify,
        })
    }

    /// Source gave up: back to CONNECTED on the old cell, A3 re-arms.
    pub fn revert(&mut self) {
        self.phase = UePhase::Connected;
        self.a3_entered_at = None;
        self.reported = false;
    }
}
