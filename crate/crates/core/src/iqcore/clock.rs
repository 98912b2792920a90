use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Time source for pacing and scenario stepping, in seconds since its origin.
pub trait Clock: Send + Sync {
    fn now_s(&self) -> f64;

    /// Returns once `now_s() >= t_s`. A virtual clock jumps forward instead of
    /// waiting.
    fn sleep_until(&self, t_s: f64);
}

/// Logical clock that only moves when something sleeps on it.
#[derive(Debug, Default)]
pub struct VirtualClock {
    bits: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::starting_at(0.0)
    }

    pub fn starting_at(t_s: f64) -> Self {
        Self {
            bits: AtomicU64::new(t_s.to_bits()),
        }
    }
}

impl Clock for VirtualClock {
    fn now_s(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::Acquire))
    }

    fn sleep_until(&self, t_s: f64) {
        // times are non-negative, so the bit patterns order like the values
        self.bits
            .fetch_max(t_s.max(0.0).to_bits(), Ordering::AcqRel);
    }
}

/// Wall clock anchored at construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_s(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep_until(&self, t_s: f64) {
        loop {
            let remaining = t_s - self.now_s();
            if remaining <= 0.0 {
                return;
            }
            std::thread::sleep(Duration::from_secs_f64(remaining));
        }
    }
}
