//! Length-prefixed TCP framing.
//!
//! All integers and floats are little-endian.
//!
//! - request: `u32` sample count (must be >= 1)
//! - reply: `u32` sample count `n`, then `n` complex samples as interleaved
//!   `f32` pairs (`re`, `im`), `8 * n` payload bytes
//!
//! A valid reply always carries at least one sample, so a reply count of
//! zero is the provider's protocol-error signal (sent for a zero-count
//! request). The connection stays open after it.

use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{Result, SampleConsumer, SampleRequest, TransportError, DEFAULT_REQUEST_TIMEOUT};
use crate::iqcore::{IqFrame, Sample};

pub const ERROR_REPLY_COUNT: u32 = 0;

pub fn encode_request(req: SampleRequest) -> [u8; 4] {
    req.count().to_le_bytes()
}

/// Reply bytes for a block of samples (narrowed to `f32` on the wire).
pub fn encode_reply(samples: &[Sample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * samples.len());
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

/// Decodes an interleaved `f32` payload.
pub fn decode_samples(payload: &[u8]) -> Result<Vec<Sample>> {
    if payload.len() % 8 != 0 {
        return Err(TransportError::Protocol(format!(
            "sample payload of {} bytes is not a multiple of 8",
            payload.len()
        )));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Sample::new(re as f64, im as f64)
        })
        .collect())
}

fn map_read_err(e: io::Error, link: &str, timeout: Duration) -> TransportError {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => TransportError::Timeout(timeout),
        io::ErrorKind::UnexpectedEof
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::BrokenPipe => TransportError::Connection {
            link: link.to_string(),
            reason: e.to_string(),
        },
        _ => TransportError::Io(e),
    }
}

/// Consumer end of a TCP link.
pub struct TcpConsumer {
    link_id: String,
    stream: TcpStream,
    sample_rate_hz: f64,
    position: u64,
    timeout: Duration,
}

impl TcpConsumer {
    pub fn connect(
        addr: impl ToSocketAddrs,
        link_id: impl Into<String>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let link_id = link_id.into();
        let stream = TcpStream::connect(addr).map_err(|e| TransportError::Connection {
            link: link_id.clone(),
            reason: e.to_string(),
        })?;
        stream.set_nodelay(true)?;
        let mut c = Self {
            link_id,
            stream,
            sample_rate_hz,
            position: 0,
            timeout: DEFAULT_REQUEST_TIMEOUT,
        };
        c.set_timeout(DEFAULT_REQUEST_TIMEOUT)?;
        Ok(c)
    }

    pub fn set_timeout(&mut self, timeout: Duration) -> Result<()> {
        self.timeout = timeout;
        self.stream.set_read_timeout(Some(timeout))?;
        Ok(())
    }
}

impl SampleConsumer for TcpConsumer {
    fn request_samples(&mut self, count: usize) -> Result<IqFrame> {
        let count = u32::try_from(count).map_err(|_| {
            TransportError::Protocol(format!("request of {count} samples exceeds u32"))
        })?;
        let req = SampleRequest::new(count)?;
        self.stream
            .write_all(&encode_request(req))
            .map_err(|e| map_read_err(e, &self.link_id, self.timeout))?;
        let mut head = [0u8; 4];
        self.stream
            .read_exact(&mut head)
            .map_err(|e| map_read_err(e, &self.link_id, self.timeout))?;
        let n = u32::from_le_bytes(head);
        if n == ERROR_REPLY_COUNT {
            return Err(TransportError::Protocol(
                "provider rejected the request".into(),
            ));
        }
        if n > count {
            return Err(TransportError::Protocol(format!(
                "asked for {count} samples, provider sent {n}"
            )));
        }
        let mut payload = vec![0u8; 8 * n as usize];
        self.stream
            .read_exact(&mut payload)
            .map_err(|e| map_read_err(e, &self.link_id, self.timeout))?;
        let samples = decode_samples(&payload)?;
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

/// Provider loop: answers each request on `stream` from `source` until the
/// peer hangs up. Returns the number of samples served.
pub fn serve_tcp(mut stream: TcpStream, source: &mut dyn SampleConsumer) -> Result<u64> {
    stream.set_nodelay(true)?;
    let mut served = 0u64;
    loop {
        let mut head = [0u8; 4];
        match stream.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(served),
            Err(e) if e.kind() == io::ErrorKind::ConnectionReset => return Ok(served),
            Err(e) => return Err(e.into()),
        }
        let count = u32::from_le_bytes(head);
        if count == 0 {
            stream.write_all(&ERROR_REPLY_COUNT.to_le_bytes())?;
            continue;
        }
        let frame = loop {
            match source.request_samples(count as usize) {
                Ok(f) => break f,
                Err(TransportError::Timeout(_)) => continue,
                Err(TransportError::Connection { .. }) => return Ok(served),
                Err(e) => return Err(e),
            }
        };
        match stream.write_all(&encode_reply(&frame.samples)) {
            Ok(()) => served += frame.len() as u64,
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::BrokenPipe | io::ErrorKind::ConnectionReset
                ) =>
            {
                return Ok(served)
            }
            Err(e) => return Err(e.into()),
        }
    }
}
