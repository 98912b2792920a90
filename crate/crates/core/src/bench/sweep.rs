use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    aclr_shoulder, evm, rapp_pa, throughput_map, welch_psd, PaParams, DEFAULT_NFFT, DEFAULT_OVERLAP,
};
use crate::iqcore::{db_to_linear, IqError, IqFrame, Result, Sample};

/// Analysis rate of the benchmark stimulus: wide enough to show both
/// adjacent channels of a 20 MHz carrier.
pub const STIMULUS_RATE_HZ: f64 = 61.44e6;
/// Occupied bandwidth of a 20 MHz LTE carrier (1200 subcarriers x 15 kHz
/// plus the guard-free edge), used as the in-band width.
pub const INBAND_HZ: f64 = 19.2e6;
pub const BANDWIDTH_MHZ: f64 = 20.0;
pub const STIMULUS_TONES: usize = 64;
pub const STIMULUS_LEN: usize = 1 << 16;

/// Tone spacing and first tone, in Welch bins of the default FFT size.
const TONE_STEP_BINS: i64 = 5;
const FIRST_TONE_BIN: i64 = -157;

/// A seeded, unit-power multitone with its analysis parameters.
#[derive(Debug, Clone)]
pub struct Stimulus {
    pub frame: IqFrame,
    pub inband_hz: f64,
    pub bandwidth_mhz: f64,
}

impl Stimulus {
    pub fn standard(seed: u64) -> Self {
        Self {
            frame: multitone(STIMULUS_TONES, STIMULUS_LEN, STIMULUS_RATE_HZ, seed),
            inband_hz: INBAND_HZ,
            bandwidth_mhz: BANDWIDTH_MHZ,
        }
    }
}

/// `tones` equal-amplitude carriers with random phases, centred on Welch
/// bins so that a clean signal leaks nothing outside its band.
pub fn multitone(tones: usize, len: usize, sample_rate_hz: f64, seed: u64) -> IqFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 1.0 / (tones as f64).sqrt();
    let nfft = DEFAULT_NFFT as i64;
    let carriers: Vec<(i64, f64)> = (0..tones as i64)
        .map(|j| {
            (
                FIRST_TONE_BIN + TONE_STEP_BINS * j,
                rng.gen::<f64>() * 2.0 * PI,
            )
        })
        .collect();
    let samples = (0..len as i64)
        .map(|n| {
            carriers
                .iter()
                .map(|&(k, phase)| {
                    // integer phase reduction keeps long frames exact
                    let cyc = (k * n).rem_euclid(nfft) as f64 / nfft as f64;
                    Sample::from_polar(amp, 2.0 * PI * cyc + phase)
                })
                .sum()
        })
        .collect();
    IqFrame::new(0, sample_rate_hz, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub drive_db: f64,
    pub aclr_db: f64,
    pub evm_pct: f64,
    pub throughput_mbps: f64,
}

/// Evaluates every drive level; rows come back in input order.
pub fn pa_sweep(drives_db: &[f64], pa: &PaParams, stimulus: &Stimulus) -> Result<Vec<SweepRow>> {
    pa.validate()?;
    if drives_db.is_empty() {
        return Err(IqError::Domain("drive list is empty".into()));
    }
    if drives_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IqError::Domain(
            "drive levels must be strictly increasing".into(),
        ));
    }
    drives_db
        .par_iter()
        .map(|&drive_db| {
            let g = db_to_linear(drive_db);
            let x = IqFrame::new(
                stimulus.frame.start_index,
                stimulus.frame.sample_rate_hz,
                stimulus.frame.samples.iter().map(|s| s * g).collect(),
            );
            let y = rapp_pa(&x, pa);
            let psd = welch_psd(&y, DEFAULT_NFFT, DEFAULT_OVERLAP)?;
            let aclr_db = aclr_shoulder(&psd, stimulus.inband_hz)?;
            let reference = IqFrame::new(
                x.start_index,
                x.sample_rate_hz,
                x.samples.iter().map(|s| s * pa.gain_linear()).collect(),
            );
            let evm_pct = evm(&reference, &y)?;
            Ok(SweepRow {
                drive_db,
                aclr_db,
                evm_pct,
                throughput_mbps: throughput_map(evm_pct, stimulus.bandwidth_mhz),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("drive_db,aclr_db,evm_pct,throughput_mbps\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.3},{:.3},{:.3},{:.3}",
            r.drive_db, r.aclr_db, r.evm_pct, r.throughput_mbps
        );
    }
    out
}

/// Parses `start:stop:step` (inclusive of `stop` when it lands on the grid).
pub fn parse_drive_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || IqError::Domain(format!("expected start:stop:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(IqError::Domain(format!(
            "drive range {spec:?} needs step > 0 and stop >= start"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stimulus_is_unit_power_and_in_band() {
        let s = Stimulus::standard(3);
        assert!((s.frame.mean_power() - 1.0).abs() < 0.05);
        let top = (FIRST_TONE_BIN + TONE_STEP_BINS * (STIMULUS_TONES as i64 - 1)) as f64;
        let bin = STIMULUS_RATE_HZ / DEFAULT_NFFT as f64;
        assert!(FIRST_TONE_BIN.abs() as f64 * bin < INBAND_HZ / 2.0);
        assert!(top * bin < INBAND_HZ / 2.0);
        assert!(STIMULUS_RATE_HZ >= 3.0 * INBAND_HZ);
    }

    #[test]
    fn clean_multitone_has_no_shoulders() {
        let s = Stimulus::standard(3);
        let psd = welch_psd(&s.frame, DEFAULT_NFFT, DEFAULT_OVERLAP).unwrap();
        assert!((psd.total_power() / s.frame.mean_power() - 1.0).abs() < 0.01);
        assert!(aclr_shoulder(&psd, INBAND_HZ).unwrap() <= -50.0);
    }

    #[test]
    fn rows_keep_input_order() {
        let s = Stimulus {
            frame: multitone(16, 8192, STIMULUS_RATE_HZ, 1),
            inband_hz: INBAND_HZ,
            bandwidth_mhz: BANDWIDTH_MHZ,
        };
        let pa = PaParams::with_backoff(-10.0, 8.0, 2.0).unwrap();
        let drives = [-10.0, -5.0, 0.0, 5.0];
        let rows = pa_sweep(&drives, &pa, &s).unwrap();
        assert_eq!(rows.iter().map(|r| r.drive_db).collect::<Vec<_>>(), drives);
        assert!(pa_sweep(&[0.0, 0.0], &pa, &s).is_err());
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("drive_db,aclr_db,evm_pct,throughput_mbps\n-10.000,"));
    }

    #[test]
    fn drive_ranges() {
        assert_eq!(
            parse_drive_range("0:10:2").unwrap(),
            [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
        );
        assert_eq!(parse_drive_range("-3:0:1.5").unwrap(), [-3.0, -1.5, 0.0]);
        assert_eq!(parse_drive_range("0:0.9:0.5").unwrap(), [0.0, 0.5]);
        assert!(parse_drive_range("0:10").is_err());
        assert!(parse_drive_range("0:10:0").is_err());
        assert!(parse_drive_range("5:1:1").is_err());
    }
}
