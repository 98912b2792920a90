use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{IqError, Result};

pub type Sample = Complex64;

/// A block of complex baseband samples located on a stream.
///
/// `start_index` counts samples since the origin of the stream, so two
/// consecutive frames of one gapless stream satisfy
/// `next.start_index == prev.end_index()`.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    pub start_index: u64,
    pub sample_rate_hz: f64,
    pub samples: Vec<Sample>,
}

impl IqFrame {
    pub fn new(start_index: u64, sample_rate_hz: f64, samples: Vec<Sample>) -> Self {
        Self {
            start_index,
            sample_rate_hz,
            samples,
        }
    }

    pub fn zeros(start_index: u64, sample_rate_hz: f64, len: usize) -> Self {
        Self::new(
            start_index,
            sample_rate_hz,
            vec![Sample::new(0.0, 0.0); len],
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end_index(&self) -> u64 {
        self.start_index + self.samples.len() as u64
    }

    /// Stream time of the first sample.
    pub fn start_time_s(&self) -> f64 {
        self.start_index as f64 / self.sample_rate_hz
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Multiplies every sample by `gain`. Stream position and rate are kept.
pub fn apply_gain(mut frame: IqFrame, gain: Sample) -> IqFrame {
    for s in &mut frame.samples {
        *s *= gain;
    }
    frame
}

/// Sample-wise sum of aligned frames.
pub fn mix(frames: &[IqFrame]) -> Result<IqFrame> {
    let (first, rest) = frames
        .split_first()
        .ok_or_else(|| IqError::Alignment("no frames to mix".into()))?;
    for f in rest {
        if f.start_index != first.start_index
            || f.len() != first.len()
            || f.sample_rate_hz != first.sample_rate_hz
        {
            return Err(IqError::Alignment(format!(
                "frame [{}, +{}) @ {} Hz does not line up with [{}, +{}) @ {} Hz",
                f.start_index,
                f.len(),
                f.sample_rate_hz,
                first.start_index,
                first.len(),
                first.sample_rate_hz
            )));
        }
    }
    let mut out = first.clone();
    for f in rest {
        for (o, s) in out.samples.iter_mut().zip(&f.samples) {
            *o += s;
        }
    }
    Ok(out)
}

/// Adds circularly-symmetric complex Gaussian noise with total per-sample
/// variance `noise_power`.
pub fn add_awgn<R: Rng + ?Sized>(
    mut frame: IqFrame,
    noise_power: f64,
    rng: &mut R,
) -> Result<IqFrame> {
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        return Err(IqError::Domain(format!(
            "noise power must be a finite value >= 0, got {noise_power}"
        )));
    }
    if noise_power == 0.0 {
        return Ok(frame);
    }
    let sigma = (noise_power / 2.0).sqrt();
    for s in &mut frame.samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Sample::new(sigma * re, sigma * im);
    }
    Ok(frame)
}
