use super::{Result, SampleConsumer, TransportError};
use crate::iqcore::{IqFrame, PilotTable};

/// A radio transmitting its pilot, served on demand.
///
/// Being receiver-driven, an eNB's transmit port only produces what its
/// consumer asks for, so no buffer is needed in front of it.
pub struct PilotSource {
    link_id: String,
    table: PilotTable,
    sample_rate_hz: f64,
    position: u64,
    max_reply: usize,
}

impl PilotSource {
    pub fn new(link_id: impl Into<String>, table: PilotTable, sample_rate_hz: f64) -> Self {
        Self {
            link_id: link_id.into(),
            table,
            sample_rate_hz,
            position: 0,
            max_reply: 1 << 16,
        }
    }

    pub fn position(&self) -> u64 {
        self.position
    }
}

impl SampleConsumer for PilotSource {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame> {
        if count == 0 {
            return Err(TransportError::Protocol(
                "sample request count must be >= 1".into(),
            ));
        }
        let n = count.min(self.max_reply);
        let frame = self.table.frame(self.position, n, self.sample_rate_hz);
        self.position += n as u64;
        Ok(frame)
    }

    fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    fn link_id(&self) -> &str {
        &self.link_id
    }
}
