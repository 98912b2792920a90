use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    A3Config, CommandOutcome, EnbState, HandoverId, Mme, MmeOutcome, RanError, Result, S1Config,
    S1Kind, S1Message, UePhase, UeState,
};
use crate::iqcore::{CellId, MeasurementSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RanCell {
    pub id: CellId,
    pub admitting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    S1 { kind: S1Kind },
    Handover { from: CellId, to: CellId },
    HandoverTimeout { handover: HandoverId },
    Warning { reason: String },
    Error { reason: String },
}

impl fmt::Display for EventKind {
    /// Short label for the trace CSV `event` column (never contains commas).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::S1 { kind } => f.write_str(kind.as_str()),
            EventKind::Handover { from, to } => write!(f, "Handover:{from}->{to}"),
            EventKind::HandoverTimeout { handover } => write!(f, "HandoverTimeout:{handover}"),
            EventKind::Warning { .. } => f.write_str("Warning"),
            EventKind::Error { .. } => f.write_str("Error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEvent {
    pub t_s: f64,
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<S1Message>,
}

impl NetEvent {
    fn s1(t_s: f64, msg: &S1Message) -> Self {
        Self {
            t_s,
            event: EventKind::S1 { kind: msg.kind },
            message: Some(msg.clone()),
        }
    }

    fn plain(t_s: f64, event: EventKind) -> Self {
        Self {
            t_s,
            event,
            message: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Pending {
    ToEnb { cell: CellId, msg: S1Message },
    Timeout { cell: CellId },
}

#[derive(Debug, Clone)]
struct Queued {
    at: f64,
    seq: u64,
    item: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // min-heap on (at, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.seq.cmp(&self.seq))
    }
}

/// One UE, its eNBs and the MME, exchanging S1 messages over an ordered
/// delivery queue.
#[derive(Debug, Clone)]
pub struct RanNetwork {
    ue: UeState,
    enbs: BTreeMap<CellId, EnbState>,
    mme: Mme,
    a3: A3Config,
    s1: S1Config,
    queue: BinaryHeap<Queued>,
    next_seq: u64,
}

impl RanNetwork {
    pub fn new(
        cells: &[RanCell],
        serving: CellId,
        a3: A3Config,
        s1: S1Config,
        seed: u64,
    ) -> Result<Self> {
        a3.validate()?;
        s1.validate()?;
        if cells.len() < 2 {
            return Err(RanError::Config("at least two cells are required".into()));
        }
        let ids: Vec<CellId> = cells.iter().map(|c| c.id).collect();
        let mut enbs = BTreeMap::new();
        for c in cells {
            if enbs
                .insert(c.id, EnbState::new(c.id, ids.iter().copied(), c.admitting))
                .is_some()
            {
                return Err(RanError::Config(format!("duplicate cell id {}", c.id)));
            }
        }
        if !enbs.contains_key(&serving) {
            return Err(RanError::Config(format!(
                "serving cell {serving} is not configured"
            )));
        }
        Ok(Self {
            ue: UeState::new(serving),
            enbs,
            mme: Mme::new(ids, s1.latency(), seed),
            a3,
            s1,
            queue: BinaryHeap::new(),
            next_seq: 0,
        })
    }

    pub fn ue(&self) -> &UeState {
        &self.ue
    }

    pub fn serving(&self) -> CellId {
        self.ue.serving
    }

    pub fn enb(&self, cell: CellId) -> Option<&EnbState> {
        self.enbs.get(&cell)
    }

    pub fn completed(&self) -> &[HandoverId] {
        self.mme.completed()
    }

    /// Time of the next queued delivery or timer.
    pub fn next_due(&self) -> Option<f64> {
        self.queue.peek().map(|q| q.at)
    }

    fn push(&mut self, at: f64, item: Pending) {
        self.queue.push(Queued {
            at,
            seq: self.next_seq,
            item,
        });
        self.next_seq += 1;
    }

    /// Processes every delivery due at or before `until`, in time order.
    pub fn advance(&mut self, until: f64) -> Vec<NetEvent> {
        let mut out = Vec::new();
        while self.queue.peek().is_some_and(|q| q.at <= until) {
            let Queued { at, item, .. } = self.queue.pop().expect("peeked");
            match item {
                Pending::ToEnb { cell, msg } => self.deliver(cell, msg, at, &mut out),
                Pending::Timeout { cell } => self.on_timer(cell, at, &mut out),
            }
        }
        out
    }

    /// Delivers due messages, then runs the UE's A3 check on `snap`.
    pub fn measure(&mut self, snap: &MeasurementSnapshot, now: f64) -> Result<Vec<NetEvent>> {
        let mut out = self.advance(now);
        let Some(report) = self.ue.a3_check(snap, &self.a3, now)? else {
            return Ok(out);
        };
        out.push(NetEvent::s1(now, &report));
        let source = report.source;
        let enb = self
            .enbs
            .get_mut(&source)
            .expect("serving cell is configured");
        match enb.on_meas_report(&report, now, self.s1.ho_timeout_s) {
            Ok(Some(required)) => {
                out.push(NetEvent::s1(now, &required));
                self.push(
                    now + self.s1.ho_timeout_s,
                    Pending::Timeout { cell: source },
                );
                self.route(&required, now, &mut out);
            }
            // an attempt is already running
            Ok(None) => {}
            Err(e) => {
                self.ue.revert();
                out.push(NetEvent::plain(
                    now,
                    EventKind::Error {
                        reason: e.to_string(),
                    },
                ));
            }
        }
        out.extend(self.advance(now));
        Ok(out)
    }

    fn route(&mut self, msg: &S1Message, now: f64, out: &mut Vec<NetEvent>) {
        match self.mme.route(msg, now) {
            MmeOutcome::Deliver { to, msg, at } => self.push(at, Pending::ToEnb { cell: to, msg }),
            MmeOutcome::Completed(id) => {
                if let Some(enb) = self.enbs.get_mut(&id.source) {
                    enb.on_complete(id);
                }
            }
            MmeOutcome::Dropped(reason) => {
                tracing::warn!(%reason, "MME dropped message");
                out.push(NetEvent::plain(now, EventKind::Error { reason }));
            }
        }
    }

    fn deliver(&mut self, cell: CellId, msg: S1Message, now: f64, out: &mut Vec<NetEvent>) {
        let Some(enb) = self.enbs.get_mut(&cell) else {
            out.push(NetEvent::plain(
                now,
                EventKind::Error {
                    reason: format!("no eNB for cell {cell}"),
                },
            ));
            return;
        };
        match msg.kind {
            S1Kind::HandoverRequest => {
                out.push(NetEvent::s1(now, &msg));
                match enb.on_request(&msg, now) {
                    Ok(Some(ack)) => {
                        out.push(NetEvent::s1(now, &ack));
                        self.route(&ack, now, out);
                    }
                    Ok(None) => out.push(NetEvent::plain(
                        now,
                        EventKind::Warning {
                            reason: format!("cell {cell} did not acknowledge handover request"),
                        },
                    )),
                    Err(e) => out.push(NetEvent::plain(
                        now,
                        EventKind::Error {
                            reason: e.to_string(),
                        },
                    )),
                }
            }
            S1Kind::HandoverCommand => {
                match enb.on_command(&msg) {
                    Ok(true) => {}
                    Ok(false) => {
                        out.push(NetEvent::plain(
                            now,
                            EventKind::Warning {
                                reason: format!("stale HandoverCommand at cell {cell}"),
                            },
                        ));
                        return;
                    }
                    Err(e) => {
                        out.push(NetEvent::plain(
                            now,
                            EventKind::Error {
                                reason: e.to_string(),
                            },
                        ));
                        return;
                    }
                }
                out.push(NetEvent::s1(now, &msg));
                match self.ue.on_handover_command(&msg, now, self.s1.gap_s) {
                    Ok(CommandOutcome::Switched { from, to, notify }) => {
                        out.push(NetEvent::plain(now, EventKind::Handover { from, to }));
                        out.push(NetEvent::s1(now, &notify));
                        self.route(&notify, now, out);
                    }
                    Ok(CommandOutcome::Ignored(reason)) => {
                        tracing::warn!(%reason, "handover command ignored");
                        out.push(NetEvent::plain(now, EventKind::Warning { reason }));
                    }
                    Err(e) => out.push(NetEvent::plain(
                        now,
                        EventKind::Error {
                            reason: e.to_string(),
                        },
                    )),
                }
            }
            other => out.push(NetEvent::plain(
                now,
                EventKind::Error {
                    reason: format!("eNB {cell} cannot handle {other}"),
                },
            )),
        }
    }

    fn on_timer(&mut self, cell: CellId, now: f64, out: &mut Vec<NetEvent>) {
        let Some(enb) = self.enbs.get_mut(&cell) else {
            return;
        };
        if let Some(handover) = enb.check_timeout(now) {
            if self.ue.serving == cell && self.ue.phase == UePhase::HandoverInProgress {
                self.ue.revert();
            }
            out.push(NetEvent::plain(
                now,
                EventKind::HandoverTimeout { handover },
            ));
        }
    }
}
