//! PA saturation benchmarks: a memoryless Rapp amplifier, Welch spectra,
//! adjacent-channel leakage, EVM and a throughput estimate per drive level.

mod psd;
mod sweep;

pub use psd::{aclr_shoulder, welch_psd, Psd, DEFAULT_NFFT, DEFAULT_OVERLAP};
pub use sweep::{
    multitone, pa_sweep, parse_drive_range, sweep_csv, Stimulus, SweepRow, BANDWIDTH_MHZ,
    INBAND_HZ, STIMULUS_LEN, STIMULUS_RATE_HZ, STIMULUS_TONES,
};

use serde::{Deserialize, Serialize};

use crate::iqcore::{db_to_linear, IqError, IqFrame, Result, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaParams {
    pub small_signal_gain_db: f64,
    /// Output amplitude the PA saturates at.
    pub a_sat: f64,
    /// Rapp smoothness; large values approach a hard limiter.
    pub p: f64,
}

impl PaParams {
    pub fn new(small_signal_gain_db: f64, a_sat: f64, p: f64) -> Result<Self> {
        let pa = Self {
            small_signal_gain_db,
            a_sat,
            p,
        };
        pa.validate()?;
        Ok(pa)
    }

    /// Unity-gain PA whose saturation sits `backoff_db` above a unit-power
    /// stimulus driven at `drive_db`.
    pub fn with_backoff(drive_db: f64, backoff_db: f64, p: f64) -> Result<Self> {
        Self::new(0.0, db_to_linear(drive_db + backoff_db), p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_sat > 0.0 && self.a_sat.is_finite()) {
            return Err(IqError::Domain(format!(
                "a_sat must be > 0, got {}",
                self.a_sat
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(IqError::Domain(format!(
                "Rapp p must be > 0, got {}",
                self.p
            )));
        }
        if !self.small_signal_gain_db.is_finite() {
            return Err(IqError::Domain(
                "small_signal_gain_db must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn gain_linear(&self) -> f64 {
        db_to_linear(self.small_signal_gain_db)
    }

    /// AM/AM curve for one sample.
    pub fn apply(&self, x: Sample) -> Sample {
        let g = self.gain_linear();
        let lin = x * g;
        let r = lin.norm() / self.a_sat;
        if r == 0.0 {
            return lin;
        }
        let two_p = 2.0 * self.p;
        // ln(1 + r^(2p)) in the log domain so large p cannot overflow
        let z = two_p * r.ln();
        let softplus = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        lin * (-softplus / two_p).exp()
    }
}

pub fn rapp_pa(x: &IqFrame, pa: &PaParams) -> IqFrame {
    IqFrame::new(
        x.start_index,
        x.sample_rate_hz,
        x.samples.iter().map(|&s| pa.apply(s)).collect(),
    )
}

/// EVM in percent after fitting `distorted ≈ c · reference` by least squares.
pub fn evm(reference: &IqFrame, distorted: &IqFrame) -> Result<f64> {
    if reference.len() != distorted.len() {
        return Err(IqError::Alignment(format!(
            "reference has {} samples, distorted {}",
            reference.len(),
            distorted.len()
        )));
    }
    let ref_power: f64 = reference.samples.iter().map(|r| r.norm_sqr()).sum();
    if ref_power == 0.0 {
        return Err(IqError::Domain("EVM reference has zero power".into()));
    }
    let cross: Sample = distorted
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(d, r)| d * r.conj())
        .sum();
    let c = cross / ref_power;
    let fitted_power = c.norm_sqr() * ref_power;
    if fitted_power == 0.0 {
        return Err(IqError::Domain(
            "distorted signal is uncorrelated with the reference".into(),
        ));
    }
    let err: f64 = distorted
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(d, r)| (d - c * r).norm_sqr())
        .sum();
    Ok(100.0 * (err / fitted_power).sqrt())
}

/// Peak rate at 20 MHz, scaled linearly with bandwidth.
pub const THR_MAX_20MHZ_MBPS: f64 = 75.0;
pub const SINR_REF_DB: f64 = 22.0;
pub const EVM_FLOOR_PCT: f64 = 0.1;

/// Shannon-shaped throughput estimate, saturating at the peak rate once the
/// EVM-implied SINR reaches the reference.
pub fn throughput_map(evm_pct: f64, bandwidth_mhz: f64) -> f64 {
    let evm = evm_pct.max(EVM_FLOOR_PCT);
    let sinr_db = -20.0 * (evm / 100.0).log10();
    let sinr = 10f64.powf(sinr_db / 10.0);
    let sinr_ref = 10f64.powf(SINR_REF_DB / 10.0);
    let thr_max = THR_MAX_20MHZ_MBPS * bandwidth_mhz / 20.0;
    thr_max * ((1.0 + sinr).log2() / (1.0 + sinr_ref).log2()).min(1.0)
}
