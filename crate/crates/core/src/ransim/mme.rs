use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HandoverId, S1Kind, S1Message};
use crate::iqcore::CellId;

/// Backhaul delay: `fixed_s + U(0, jitter_s)` per delivery.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyModel {
    pub fixed_s: f64,
    pub jitter_s: f64,
}

impl LatencyModel {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        // one draw per delivery keeps the stream aligned whatever the jitter
        let u: f64 = rng.gen();
        self.fixed_s + u * self.jitter_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MmeOutcome {
    /// Forward `msg` to the eNB of `to`, arriving at `at`.
    Deliver {
        to: CellId,
        msg: S1Message,
        at: f64,
    },
    Completed(HandoverId),
    Dropped(String),
}

/// Minimal MME: admit-all relay of the S1 handover messages.
#[derive(Debug, Clone)]
pub struct Mme {
    cells: BTreeSet<CellId>,
    latency: LatencyModel,
    rng: ChaCha8Rng,
    completed: Vec<HandoverId>,
}

impl Mme {
    pub fn new(cells: impl IntoIterator<Item = CellId>, latency: LatencyModel, seed: u64) -> Self {
        Self {
            cells: cells.into_iter().collect(),
            latency,
            rng: ChaCha8Rng::seed_from_u64(seed),
            completed: Vec::new(),
        }
    }

    pub fn completed(&self) -> &[HandoverId] {
        &self.completed
    }

    pub fn route(&mut self, msg: &S1Message, now: f64) -> MmeOutcome {
        for cell in [msg.source, msg.target] {
            if !self.cells.contains(&cell) {
                return MmeOutcome::Dropped(format!("{} for unknown cell {cell}", msg.kind));
            }
        }
        let id = match msg.handover_id() {
            Ok(id) => id,
            Err(e) => return MmeOutcome::Dropped(e.to_string()),
        };
        let (kind, to) = match msg.kind {
            S1Kind::HandoverRequired => (S1Kind::HandoverRequest, msg.target),
            S1Kind::HandoverRequestAck => (S1Kind::HandoverCommand, msg.source),
            S1Kind::HandoverNotify => {
                self.completed.push(id);
                return MmeOutcome::Completed(id);
            }
            other => return MmeOutcome::Dropped(format!("MME does not accept {other}")),
        };
        let at = now + self.latency.sample(&mut self.rng);
        MmeOutcome::Deliver {
            to,
            msg: msg.follow_up(kind, now),
            at,
        }
    }
}
