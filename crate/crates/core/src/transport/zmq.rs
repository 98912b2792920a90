//! ZeroMQ REQ/REP carrier, shaped like the srsRAN virtual-radio driver.
//!
//! The request payload is opaque: any message asks for the next block. A
//! reply is one frame of interleaved `f32` LE `(re, im)` pairs with no
//! header, holding between 1 and `block_len` samples. The consumer keeps
//! any surplus beyond what its caller asked for and hands it out first.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tokio::runtime::{Builder, Runtime};
use zeromq::{RepSocket, ReqSocket, Socket, SocketRecv, SocketSend, ZmqMessage};

use super::tcp::decode_samples;
use super::{Result, SampleConsumer, SampleRequest, TransportError, DEFAULT_REQUEST_TIMEOUT};
use crate::iqcore::{IqFrame, Sample};

const POLL: Duration = Duration::from_millis(50);

/// Samples per reply unless the provider is told otherwise.
pub const DEFAULT_BLOCK_LEN: usize = 4096;

/// What the consumer sends to ask for a block.
const DUMMY_REQUEST: [u8; 1] = [0];

fn raw_payload(samples: &[Sample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * samples.len());
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

fn runtime() -> Result<Runtime> {
    Ok(Builder::new_current_thread().enable_all().build()?)
}

fn zmq_err(link: &str, e: zeromq::ZmqError) -> TransportError {
    TransportError::Connection {
        link: link.to_string(),
        reason: e.to_string(),
    }
}

fn first_frame(msg: &ZmqMessage) -> &[u8] {
    msg.get(0).map(|b| b.as_ref()).unwrap_or(&[])
}

/// A REP socket answering sample requests from a consumer-side source.
pub struct ZmqProvider {
    endpoint: String,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<u64>>>,
}

impl ZmqProvider {
    /// Binds `endpoint` (e.g. `tcp://127.0.0.1:0`) and serves `source` on a
    /// dedicated thread, [`DEFAULT_BLOCK_LEN`] samples at most per reply.
    pub fn bind(endpoint: &str, source: Box<dyn SampleConsumer>) -> Result<Self> {
        Self::bind_with_block(endpoint, source, DEFAULT_BLOCK_LEN)
    }

    pub fn bind_with_block(
        endpoint: &str,
        mut source: Box<dyn SampleConsumer>,
        block_len: usize,
    ) -> Result<Self> {
        if block_len == 0 {
            return Err(TransportError::Config(
                "zmq block length must be >= 1".into(),
            ));
        }
        let link = source.link_id().to_string();
        let (tx, rx) = std::sync::mpsc::channel::<Result<String>>();
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = stop.clone();
        let endpoint = endpoint.to_string();
        let thread = std::thread::Builder::new()
            .name(format!("zmq-{link}"))
            .spawn(move || -> Result<u64> {
                let rt = runtime()?;
                rt.block_on(async move {
                    let mut sock = RepSocket::new();
                    match sock.bind(&endpoint).await {
                        Ok(ep) => {
                            let _ = tx.send(Ok(ep.to_string()));
                        }
                        Err(e) => {
                            let err = zmq_err(&link, e);
                            let _ = tx.send(Err(TransportError::Config(err.to_string())));
                            return Err(err);
                        }
                    }
                    let mut served = 0u64;
                    while !stop_flag.load(Ordering::Relaxed) {
                        let msg = match tokio::time::timeout(POLL, sock.recv()).await {
                            Err(_) => continue,
                            Ok(Ok(m)) => m,
                            Ok(Err(e)) => return Err(zmq_err(&link, e)),
                        };
                        // the request body carries no information
                        drop(msg);
                        let frame = loop {
                            match source.request_samples(block_len) {
                                Ok(f) => break Some(f),
                                Err(TransportError::Timeout(_))
                                    if !stop_flag.load(Ordering::Relaxed) => {}
                                Err(
                                    TransportError::Timeout(_) | TransportError::Connection { .. },
                                ) => break None,
                                Err(e) => return Err(e),
                            }
                        };
                        let reply = match frame {
                            Some(f) => {
                                served += f.len() as u64;
                                raw_payload(&f.samples)
                            }
                            // upstream is gone, so the peer sees silence and times out
                            None => break,
                        };
                        sock.send(ZmqMessage::from(reply))
                            .await
                            .map_err(|e| zmq_err(&link, e))?;
                    }
                    Ok(served)
                })
            })?;
        let endpoint = rx.recv().map_err(|_| {
            TransportError::Config("zmq provider thread exited before binding".into())
        })??;
        Ok(Self {
            endpoint,
            stop,
            thread: Some(thread),
        })
    }

    /// The bound endpoint, with any wildcard port resolved.
    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Stops serving and returns the number of samples sent.
    pub fn shutdown(mut self) -> Result<u64> {
        self.stop.store(true, Ordering::Relaxed);
        match self.thread.take() {
            Some(t) => t
                .join()
                .map_err(|_| TransportError::Config("zmq provider thread panicked".into()))?,
            None => Ok(0),
        }
    }
}

impl Drop for ZmqProvider {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// REQ side of a ZeroMQ link.
///
/// After a timeout the REQ state machine is out of step with the peer, so the
/// consumer should be dropped and reconnected.
pub struct ZmqConsumer {
    link_id: String,
    rt: Runtime,
    sock: ReqSocket,
    sample_rate_hz: f64,
    position: u64,
    surplus: Vec<Sample>,
    timeout: Duration,
}

impl ZmqConsumer {
    pub fn connect(
        endpoint: &str,
        link_id: impl Into<String>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let link_id = link_id.into();
        let rt = runtime()?;
        let mut sock = ReqSocket::new();
        rt.block_on(sock.connect(endpoint))
            .map_err(|e| zmq_err(&link_id, e))?;
        Ok(Self {
            link_id,
            rt,
            sock,
            sample_rate_hz,
            position: 0,
            surplus: Vec::new(),
            timeout: DEFAULT_REQUEST_TIMEOUT,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl SampleConsumer for ZmqConsumer {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame> {
        let count = u32::try_from(count).map_err(|_| {
            TransportError::Protocol(format!("request of {count} samples exceeds u32"))
        })?;
        SampleRequest::new(count)?;
        if self.surplus.is_empty() {
            let link = self.link_id.clone();
            let timeout = self.timeout;
            let sock = &mut self.sock;
            let msg = self.rt.block_on(async {
                sock.send(ZmqMessage::from(DUMMY_REQUEST.to_vec()))
                    .await
                    .map_err(|e| zmq_err(&link, e))?;
                match tokio::time::timeout(timeout, sock.recv()).await {
                    Err(_) => Err(TransportError::Timeout(timeout)),
                    Ok(r) => r.map_err(|e| zmq_err(&link, e)),
                }
            })?;
            let samples = decode_samples(first_frame(&msg))?;
            if samples.is_empty() {
                return Err(TransportError::Protocol(
                    "provider sent an empty reply".into(),
                ));
            }
            self.surplus = samples;
        }
        let n = (count as usize).min(self.surplus.len());
        let rest = self.surplus.split_off(n);
        let samples = std::mem::replace(&mut self.surplus, rest);
        let frame = IqFrame::new(self.position, self.sample_rate_hz, samples);
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
