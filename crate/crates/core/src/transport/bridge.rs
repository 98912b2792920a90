use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Result, SampleConsumer, SampleWriter, TransportError};
use crate::iqcore::{add_awgn, apply_gain, mix, GainCell, IqFrame, Pacer, Sample};

/// One frame-preserving step of a bridge.
pub trait Stage: Send {
    fn name(&self) -> &str;

    /// Sample rate the stage was built for, when it depends on one.
    fn sample_rate_hz(&self) -> Option<f64> {
        None
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame>;
}

/// Multiply-constant block steered through a shared [`GainCell`].
pub struct GainStage {
    cell: Arc<GainCell>,
}

impl GainStage {
    pub fn new(cell: Arc<GainCell>) -> Self {
        Self { cell }
    }
}

impl Stage for GainStage {
    fn name(&self) -> &str {
        "gain"
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame> {
        // read once per frame: changes land on frame boundaries
        let g = self.cell.linear();
        Ok(apply_gain(frame, Sample::new(g, 0.0)))
    }
}

pub struct AwgnStage {
    noise_power: f64,
    rng: ChaCha8Rng,
}

impl AwgnStage {
    pub fn new(noise_power: f64, seed: u64) -> Self {
        Self {
            noise_power,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Stage for AwgnStage {
    fn name(&self) -> &str {
        "awgn"
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame> {
        Ok(add_awgn(frame, self.noise_power, &mut self.rng)?)
    }
}

pub struct PaceStage {
    pacer: Pacer,
}

impl PaceStage {
    pub fn new(pacer: Pacer) -> Self {
        Self { pacer }
    }
}

impl Stage for PaceStage {
    fn name(&self) -> &str {
        "pace"
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame> {
        Ok(self.pacer.pace(frame))
    }
}

/// Adder input: sums the co-timed samples of a second link into the frame.
pub struct MixTap {
    tap: Box<dyn SampleConsumer>,
    position: u64,
    carry: Vec<Sample>,
}

impl MixTap {
    pub fn new(tap: Box<dyn SampleConsumer>) -> Self {
        Self {
            tap,
            position: 0,
            carry: Vec::new(),
        }
    }
}

impl Stage for MixTap {
    fn name(&self) -> &str {
        "mix"
    }

    fn sample_rate_hz(&self) -> Option<f64> {
        Some(self.tap.sample_rate_hz())
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame> {
        if frame.start_index != self.position {
            return Err(TransportError::Protocol(format!(
                "mix tap {} is at sample {}, frame starts at {}",
                self.tap.link_id(),
                self.position,
                frame.start_index
            )));
        }
        while self.carry.len() < frame.len() {
            let more = self.tap.request_samples(frame.len() - self.carry.len())?;
            self.carry.extend(more.samples);
        }
        let rest = self.carry.split_off(frame.len());
        let tapped = IqFrame::new(
            frame.start_index,
            frame.sample_rate_hz,
            std::mem::replace(&mut self.carry, rest),
        );
        self.position += frame.len() as u64;
        Ok(mix(&[frame, tapped])?)
    }
}

/// Fan-out: copies every frame onto a second link and passes it on.
pub struct TeeStage {
    copy: SampleWriter,
}

impl TeeStage {
    pub fn new(copy: SampleWriter) -> Self {
        Self { copy }
    }
}

impl Stage for TeeStage {
    fn name(&self) -> &str {
        "tee"
    }

    fn sample_rate_hz(&self) -> Option<f64> {
        Some(self.copy.sample_rate_hz())
    }

    fn process(&mut self, frame: IqFrame) -> Result<IqFrame> {
        self.copy.push(frame.clone())?;
        Ok(frame)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BridgeStats {
    pub pulled: u64,
    pub served: u64,
    pub frames: u64,
}

/// A running bridge thread.
pub struct BridgeHandle {
    stop: Arc<AtomicBool>,
    thread: JoinHandle<Result<BridgeStats>>,
}

impl BridgeHandle {
    pub fn stop(&self) {
        self.stop.store(true, Ordering::Release);
    }

    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    pub fn is_finished(&self) -> bool {
        self.thread.is_finished()
    }

    pub fn join(self) -> Result<BridgeStats> {
        self.thread
            .join()
            .unwrap_or_else(|_| Err(TransportError::Config("bridge thread panicked".into())))
    }
}

/// Pulls frames of `frame_len` samples from `upstream`, runs them through
/// `stages` in order and serves the result on `downstream`.
///
/// Rates are checked before the thread starts; a mismatch refuses to run.
/// The bridge ends when upstream closes, downstream disconnects or `stop` is
/// raised, flushing any partial frame first so that every pulled sample is
/// served.
pub fn bridge_link(
    mut upstream: Box<dyn SampleConsumer>,
    mut stages: Vec<Box<dyn Stage>>,
    downstream: SampleWriter,
    frame_len: usize,
    stop: Arc<AtomicBool>,
) -> Result<BridgeHandle> {
    let rate = upstream.sample_rate_hz();
    if frame_len == 0 {
        return Err(TransportError::Config("frame length must be >= 1".into()));
    }
    if downstream.sample_rate_hz() != rate {
        return Err(TransportError::Config(format!(
            "upstream {} runs at {rate} Hz but downstream {} expects {} Hz",
            upstream.link_id(),
            downstream.link_id(),
            downstream.sample_rate_hz()
        )));
    }
    for stage in &stages {
        if let Some(stage_rate) = stage.sample_rate_hz() {
            if stage_rate != rate {
                return Err(TransportError::Config(format!(
                    "stage {} runs at {stage_rate} Hz on a {rate} Hz link {}",
                    stage.name(),
                    upstream.link_id()
                )));
            }
        }
    }

    let name = format!("bridge:{}", downstream.link_id());
    let stop_flag = stop.clone();
    let thread = std::thread::Builder::new().name(name).spawn(move || {
        let mut stats = BridgeStats::default();
        let mut acc: Vec<Sample> = Vec::with_capacity(frame_len);
        let mut acc_start = 0u64;

        let mut emit =
            |acc: &mut Vec<Sample>, start: u64, stats: &mut BridgeStats| -> Result<bool> {
                let mut frame = IqFrame::new(start, rate, std::mem::take(acc));
                for stage in stages.iter_mut() {
                    frame = stage.process(frame)?;
                }
                let len = frame.len() as u64;
                match downstream.push(frame) {
                    Ok(()) => {
                        stats.served += len;
                        stats.frames += 1;
                        Ok(true)
                    }
                    Err(TransportError::Connection { .. }) => Ok(false),
                    Err(e) => Err(e),
                }
            };

        while !stop_flag.load(Ordering::Acquire) {
            match upstream.request_samples(frame_len - acc.len()) {
                Ok(reply) => {
                    if acc.is_empty() {
                        acc_start = reply.start_index;
                    }
                    stats.pulled += reply.len() as u64;
                    acc.extend(reply.samples);
                    if acc.len() == frame_len && !emit(&mut acc, acc_start, &mut stats)? {
                        return Ok(stats);
                    }
                }
                Err(TransportError::Timeout(_)) => continue,
                Err(TransportError::Connection { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        if !acc.is_empty() {
            emit(&mut acc, acc_start, &mut stats)?;
        }
        Ok(stats)
    })?;
    Ok(BridgeHandle { stop, thread })
}
