use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Amplitude ratio for a gain expressed in dB.
pub fn db_to_linear(gain_db: f64) -> f64 {
    10f64.powf(gain_db / 20.0)
}

pub fn linear_to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

/// Shared, atomically updated gain of one link (the multiply-constant knob).
///
/// Pipeline stages read it once per frame. A manual value written by the
/// control plane pins the link: later automatic (trajectory) updates are
/// ignored until [`GainCell::release`] is called.
#[derive(Debug)]
pub struct GainCell {
    db_bits: AtomicU64,
    manual: AtomicBool,
}

impl GainCell {
    pub fn new(gain_db: f64) -> Self {
        Self {
            db_bits: AtomicU64::new(gain_db.to_bits()),
            manual: AtomicBool::new(false),
        }
    }

    pub fn gain_db(&self) -> f64 {
        f64::from_bits(self.db_bits.load(Ordering::Acquire))
    }

    pub fn linear(&self) -> f64 {
        db_to_linear(self.gain_db())
    }

    pub fn is_manual(&self) -> bool {
        self.manual.load(Ordering::Acquire)
    }

    /// Trajectory-driven update; no effect while the link is pinned.
    pub fn set_auto(&self, gain_db: f64) {
        if !self.is_manual() {
            self.db_bits.store(gain_db.to_bits(), Ordering::Release);
        }
    }

    pub fn set_manual(&self, gain_db: f64) {
        self.manual.store(true, Ordering::Release);
        self.db_bits.store(gain_db.to_bits(), Ordering::Release);
    }

    pub fn release(&self) {
        self.manual.store(false, Ordering::Release);
    }
}

impl Default for GainCell {
    fn default() -> Self {
        Self::new(0.0)
    }
}
