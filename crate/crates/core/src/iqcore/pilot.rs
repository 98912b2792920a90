use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{IqError, IqFrame, Result, Sample};

/// Frequency-comb pilot: `tone_count` unit tones on DFT bins
/// `comb_offset + comb_spacing * m` of an `fft_len`-point grid.
///
/// Combs that differ only in offset occupy disjoint bins and are therefore
/// exactly orthogonal over any whole number of periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSpec {
    pub fft_len: usize,
    pub comb_spacing: usize,
    pub comb_offset: usize,
    pub tone_count: usize,
}

impl PilotSpec {
    pub const DEFAULT_FFT_LEN: usize = 4096;
    pub const DEFAULT_COMB_SPACING: usize = 16;
    pub const DEFAULT_TONE_COUNT: usize = 64;

    pub fn new(
        fft_len: usize,
        comb_spacing: usize,
        comb_offset: usize,
        tone_count: usize,
    ) -> Result<Self> {
        let spec = Self {
            fft_len,
            comb_spacing,
            comb_offset,
            tone_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default comb (N=4096, C=16, M=64) at the given offset.
    pub fn with_offset(comb_offset: usize) -> Self {
        Self {
            fft_len: Self::DEFAULT_FFT_LEN,
            comb_spacing: Self::DEFAULT_COMB_SPACING,
            comb_offset,
            tone_count: Self::DEFAULT_TONE_COUNT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(IqError::Domain(format!("invalid pilot {self:?}: {why}")));
        if self.fft_len < 2 || !self.fft_len.is_power_of_two() {
            return bad("fft_len must be a power of two >= 2".into());
        }
        if self.comb_spacing == 0 {
            return bad("comb_spacing must be >= 1".into());
        }
        if self.comb_offset >= self.comb_spacing {
            return bad("comb_offset must be below comb_spacing".into());
        }
        if self.tone_count == 0 {
            return bad("tone_count must be >= 1".into());
        }
        if self.highest_bin() >= self.fft_len / 2 {
            return bad(format!(
                "highest tone bin {} must stay below N/2",
                self.highest_bin()
            ));
        }
        Ok(())
    }

    pub fn highest_bin(&self) -> usize {
        self.comb_offset + self.comb_spacing * (self.tone_count - 1)
    }

    pub fn tone_bins(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tone_count).map(move |m| self.comb_offset + self.comb_spacing * m)
    }

    /// Same grid and comb shape, so the two can share a receiver.
    pub fn same_comb_shape(&self, other: &PilotSpec) -> bool {
        self.fft_len == other.fft_len
            && self.comb_spacing == other.comb_spacing
            && self.tone_count == other.tone_count
    }

    fn sample_at(&self, index: u64) -> Sample {
        let n = self.fft_len as u64;
        let phase_index = index % n;
        let amp = 1.0 / (self.tone_count as f64).sqrt();
        let mut acc = Sample::new(0.0, 0.0);
        for bin in self.tone_bins() {
            // reduce k*t mod N in integers so the phase stays accurate far
            // from the stream origin
            let k = (bin as u64 * phase_index) % n;
            acc += Sample::from_polar(1.0, TAU * k as f64 / n as f64);
        }
        acc * amp
    }
}

/// Direct evaluation of the pilot waveform over `[start_index, start_index + length)`.
pub fn make_pilot(
    spec: &PilotSpec,
    start_index: u64,
    length: usize,
    sample_rate_hz: f64,
) -> IqFrame {
    let samples = (0..length as u64)
        .map(|t| spec.sample_at(start_index + t))
        .collect();
    IqFrame::new(start_index, sample_rate_hz, samples)
}

/// One precomputed period of a pilot, for streaming generation.
#[derive(Debug, Clone)]
pub struct PilotTable {
    spec: PilotSpec,
    period: Vec<Sample>,
}

impl PilotTable {
    pub fn new(spec: PilotSpec) -> Result<Self> {
        spec.validate()?;
        let period = make_pilot(&spec, 0, spec.fft_len, 1.0).samples;
        Ok(Self { spec, period })
    }

    pub fn spec(&self) -> &PilotSpec {
        &self.spec
    }

    pub fn at(&self, index: u64) -> Sample {
        self.period[(index % self.spec.fft_len as u64) as usize]
    }

    pub fn frame(&self, start_index: u64, length: usize, sample_rate_hz: f64) -> IqFrame {
        let mut samples = Vec::with_capacity(length);
        self.extend_into(&mut samples, start_index, length);
        IqFrame::new(start_index, sample_rate_hz, samples)
    }

    pub fn extend_into(&self, out: &mut Vec<Sample>, start_index: u64, length: usize) {
        let n = self.spec.fft_len;
        let mut pos = (start_index % n as u64) as usize;
        let mut left = length;
        while left > 0 {
            let take = left.min(n - pos);
            out.extend_from_slice(&self.period[pos..pos + take]);
            left -= take;
            pos = 0;
        }
    }

    /// `sum_t x[t] * conj(pilot[start + t])`.
    pub fn correlate(&self, window: &IqFrame) -> Sample {
        let n = self.spec.fft_len as u64;
        let mut pos = (window.start_index % n) as usize;
        let mut acc = Sample::new(0.0, 0.0);
        for s in &window.samples {
            acc += s * self.period[pos].conj();
            pos += 1;
            if pos == self.period.len() {
                pos = 0;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        assert!(PilotSpec::new(4096, 16, 0, 64).is_ok());
        assert!(PilotSpec::new(4095, 16, 0, 64).is_err());
        assert!(PilotSpec::new(4096, 0, 0, 64).is_err());
        assert!(PilotSpec::new(4096, 16, 16, 64).is_err());
        assert!(PilotSpec::new(4096, 16, 0, 0).is_err());
        // 15 + 16*127 = 2047 < 2048 is the last legal comb
        assert!(PilotSpec::new(4096, 16, 15, 128).is_ok());
        assert!(PilotSpec::new(4096, 16, 0, 129).is_err());
    }

    #[test]
    fn single_dc_tone_is_constant_one() {
        for n in [2usize, 8, 64, 4096] {
            let spec = PilotSpec::new(n, 1, 0, 1).unwrap();
            let f = make_pilot(&spec, 17, 40, 1.0);
            assert!(f.samples.iter().all(|s| *s == Sample::new(1.0, 0.0)));
        }
    }

    #[test]
    fn unit_mean_power_over_period() {
        let spec = PilotSpec::with_offset(3);
        let f = make_pilot(&spec, 0, spec.fft_len, 1.0);
        // Parseval on the comb: M tones of power 1/M each
        assert!((f.mean_power() - 1.0).abs() < 1e-9, "{}", f.mean_power());
    }

    #[test]
    fn adjacent_offsets_are_orthogonal() {
        let a = PilotSpec::with_offset(0);
        let b = PilotSpec::with_offset(1);
        let pa = make_pilot(&a, 0, a.fft_len, 1.0);
        let pb = make_pilot(&b, 0, b.fft_len, 1.0);
        // DFT-bin orthogonality: <pa, pb> / N
        let ip: Sample = pa
            .samples
            .iter()
            .zip(&pb.samples)
            .map(|(x, y)| x * y.conj())
            .sum();
        assert!((ip / a.fft_len as f64).norm() < 1e-9);
    }

    #[test]
    fn periodic_with_period_n() {
        let spec = PilotSpec::new(256, 4, 1, 16).unwrap();
        let a = make_pilot(&spec, 5, 100, 1.0);
        let b = make_pilot(&spec, 5 + 256 * 7, 100, 1.0);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let spec = PilotSpec::new(512, 8, 5, 30).unwrap();
        let table = PilotTable::new(spec).unwrap();
        let direct = make_pilot(&spec, 1_000_003, 1300, 2.0);
        let fast = table.frame(1_000_003, 1300, 2.0);
        assert_eq!(direct.start_index, fast.start_index);
        for (x, y) in direct.samples.iter().zip(&fast.samples) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parseval_over_whole_periods(k in 1usize..5, offset in 0usize..16, start in 0u64..100_000) {
            let spec = PilotSpec::with_offset(offset);
            let f = make_pilot(&spec, start, k * spec.fft_len, 1.0);
            prop_assert!((f.mean_power() - 1.0).abs() < 1e-9);
        }
    }
}
