use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::iqcore::{IqError, IqFrame, Result, Sample};

pub const DEFAULT_NFFT: usize = 1024;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// Two-sided power spectral density, bins ascending from `-fs/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    /// Power per Hz.
    pub density: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl Psd {
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.density.len() as f64
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz()
    }

    /// Power in the bins whose frequency satisfies `keep`.
    pub fn power_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let df = self.bin_width_hz();
        self.freqs_hz
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| keep(**f))
            .map(|(_, p)| p * df)
            .sum()
    }

    pub fn peak_hz(&self) -> f64 {
        let (i, _) =
            self.density
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                    if p > best.1 {
                        (i, p)
                    } else {
                        best
                    }
                });
        self.freqs_hz[i]
    }
}

fn hann(n: usize) -> Vec<f64> {
    // periodic form, so 50% overlapped windows sum to a constant
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate with a Hann window.
///
/// Scaled so that the PSD integrates to the mean power of the window-weighted
/// segments, which is the frame's mean power for stationary input.
pub fn welch_psd(x: &IqFrame, nfft: usize, overlap: f64) -> Result<Psd> {
    if nfft < 2 {
        return Err(IqError::Domain(format!("nfft must be >= 2, got {nfft}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(IqError::Domain(format!(
            "overlap must be in [0, 1), got {overlap}"
        )));
    }
    if x.len() < nfft {
        return Err(IqError::Domain(format!(
            "frame of {} samples is shorter than nfft = {nfft}",
            x.len()
        )));
    }
    let step = ((nfft as f64 * (1.0 - overlap)).round() as usize).max(1);
    let window = hann(nfft);
    let w_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft];
    let mut buf = vec![Sample::new(0.0, 0.0); nfft];
    let mut segments = 0usize;
    let mut start = 0;
    while start + nfft <= x.len() {
        for ((b, s), w) in buf
            .iter_mut()
            .zip(&x.samples[start..start + nfft])
            .zip(&window)
        {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let fs = x.sample_rate_hz;
    let scale = 1.0 / (segments as f64 * fs * w_energy);
    // reorder FFT bins [0, fs) into ascending [-fs/2, fs/2)
    let half = nfft / 2;
    let mut density = Vec::with_capacity(nfft);
    let mut freqs_hz = Vec::with_capacity(nfft);
    for j in 0..nfft {
        let k = (j + nfft - half) % nfft;
        density.push(acc[k] * scale);
        freqs_hz.push((j as f64 - half as f64) * fs / nfft as f64);
    }
    Ok(Psd {
        freqs_hz,
        density,
        sample_rate_hz: fs,
    })
}

/// Adjacent-channel leakage: power in `B/2 < |f| <= 3B/2` over power in
/// `|f| <= B/2`, in dB.
pub fn aclr_shoulder(psd: &Psd, inband_hz: f64) -> Result<f64> {
    if !(inband_hz > 0.0) {
        return Err(IqError::Domain(format!(
            "in-band width must be > 0, got {inband_hz}"
        )));
    }
    if psd.sample_rate_hz < 3.0 * inband_hz {
        return Err(IqError::Domain(format!(
            "PSD spans {} Hz, fewer than the 3 x {inband_hz} Hz needed to see both adjacent channels",
            psd.sample_rate_hz
        )));
    }
    let half = inband_hz / 2.0;
    let inband = psd.power_where(|f| f.abs() <= half);
    let adjacent = psd.power_where(|f| f.abs() > half && f.abs() <= 3.0 * half);
    if inband == 0.0 {
        return Err(IqError::Domain("no in-band power".into()));
    }
    if adjacent == 0.0 {
        return Ok(crate::iqcore::DB_FLOOR);
    }
    Ok(10.0 * (adjacent / inband).log10())
}
