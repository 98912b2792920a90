use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use super::{Result, SampleConsumer, TransportError, DEFAULT_REQUEST_TIMEOUT};
use crate::iqcore::{IqFrame, Sample};

struct State {
    buf: VecDeque<Sample>,
    capacity: usize,
    origin: Option<u64>,
    pushed: u64,
    served: u64,
    writer_open: bool,
    consumer_open: bool,
}

struct Shared {
    link_id: String,
    sample_rate_hz: f64,
    state: Mutex<State>,
    cond: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // a panicking peer leaves the queue itself consistent
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn closed(&self, reason: &str) -> TransportError {
        TransportError::Connection {
            link: self.link_id.clone(),
            reason: reason.into(),
        }
    }
}

/// Creates one in-memory link.
///
/// `capacity` bounds the samples buffered between the two ends; a full
/// buffer blocks the writer instead of dropping samples.
pub fn in_process_link(
    link_id: impl Into<String>,
    sample_rate_hz: f64,
    capacity: usize,
) -> (SampleWriter, InProcessConsumer) {
    let shared = Arc::new(Shared {
        link_id: link_id.into(),
        sample_rate_hz,
        state: Mutex::new(State {
            buf: VecDeque::new(),
            capacity: capacity.max(1),
            origin: None,
            pushed: 0,
            served: 0,
            writer_open: true,
            consumer_open: true,
        }),
        cond: Condvar::new(),
    });
    (
        SampleWriter {
            shared: shared.clone(),
        },
        InProcessConsumer {
            shared,
            timeout: DEFAULT_REQUEST_TIMEOUT,
        },
    )
}

/// Provider side of an in-process link. Dropping it closes the link.
pub struct SampleWriter {
    shared: Arc<Shared>,
}

impl SampleWriter {
    pub fn link_id(&self) -> &str {
        &self.shared.link_id
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.shared.sample_rate_hz
    }

    /// Samples accepted so far.
    pub fn pushed(&self) -> u64 {
        self.shared.lock().pushed
    }

    /// Samples handed to the consumer so far.
    pub fn served(&self) -> u64 {
        self.shared.lock().served
    }

    pub fn consumer_connected(&self) -> bool {
        self.shared.lock().consumer_open
    }

    /// Appends a frame, blocking while the buffer is full.
    ///
    /// Frames must continue the stream without gaps and at the link's rate.
    pub fn push(&self, frame: IqFrame) -> Result<()> {
        if frame.sample_rate_hz != self.shared.sample_rate_hz {
            return Err(TransportError::Protocol(format!(
                "link {} carries {} Hz, frame is {} Hz",
                self.shared.link_id, self.shared.sample_rate_hz, frame.sample_rate_hz
            )));
        }
        let mut st = self.shared.lock();
        let expected = st.origin.unwrap_or(frame.start_index) + st.pushed;
        if frame.start_index != expected {
            return Err(TransportError::Protocol(format!(
                "link {}: frame starts at {}, stream is at {expected}",
                self.shared.link_id, frame.start_index
            )));
        }
        st.origin.get_or_insert(frame.start_index);
        let mut rest = &frame.samples[..];
        while !rest.is_empty() {
            if !st.consumer_open {
                return Err(self.shared.closed("consumer disconnected"));
            }
            let space = st.capacity.saturating_sub(st.buf.len());
            if space == 0 {
                st = self.shared.cond.wait(st).unwrap_or_else(|p| p.into_inner());
                continue;
            }
            let take = space.min(rest.len());
            st.buf.extend(rest[..take].iter().copied());
            st.pushed += take as u64;
            rest = &rest[take..];
            self.shared.cond.notify_all();
        }
        Ok(())
    }
}

impl Drop for SampleWriter {
    fn drop(&mut self) {
        self.shared.lock().writer_open = false;
        self.shared.cond.notify_all();
    }
}

/// Consumer side of an in-process link. Dropping it disconnects the link.
pub struct InProcessConsumer {
    shared: Arc<Shared>,
    timeout: Duration,
}

impl InProcessConsumer {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn buffered(&self) -> usize {
        self.shared.lock().buf.len()
    }
}

impl SampleConsumer for InProcessConsumer {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame> {
        if count == 0 {
            return Err(TransportError::Protocol(
                "sample request count must be >= 1".into(),
            ));
        }
        let deadline = Instant::now() + self.timeout;
        let mut st = self.shared.lock();
        while st.buf.is_empty() {
            if !st.writer_open {
                return Err(self.shared.closed("provider closed"));
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout(self.timeout));
            }
            st = self
                .shared
                .cond
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
        let take = count.min(st.buf.len());
        let start = st.origin.unwrap_or(0) + st.served;
        let samples: Vec<Sample> = st.buf.drain(..take).collect();
        st.served += take as u64;
        self.shared.cond.notify_all();
        Ok(IqFrame::new(start, self.shared.sample_rate_hz, samples))
    }

    fn sample_rate_hz(&self) -> f64 {
        self.shared.sample_rate_hz
    }

    fn link_id(&self) -> &str {
        &self.shared.link_id
    }
}

impl Drop for InProcessConsumer {
    fn drop(&mut self) {
        self.shared.lock().consumer_open = false;
        self.shared.cond.notify_all();
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub frames: u64,
    pub samples: u64,
    pub consumer_disconnected: bool,
}

/// Feeds a frame stream into a link until the stream ends or the consumer
/// leaves. Either way the link is closed on return.
pub fn serve_samples<I>(source: I, writer: SampleWriter) -> Result<ServeStats>
where
    I: IntoIterator<Item = IqFrame>,
{
    let mut stats = ServeStats::default();
    for frame in source {
        let len = frame.len() as u64;
        match writer.push(frame) {
            Ok(()) => {
                stats.frames += 1;
                stats.samples += len;
            }
            Err(TransportError::Connection { .. }) => {
                stats.consumer_disconnected = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(stats)
}
