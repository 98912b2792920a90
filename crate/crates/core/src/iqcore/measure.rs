use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{IqError, IqFrame, PilotSpec, PilotTable, Result, Sample};

/// Upper bound on reported SNR; a noiseless window reads exactly this.
pub const SNR_CAP_DB: f64 = 150.0;
/// Stand-in for minus infinity in RSRP and SNR reports.
pub const DB_FLOOR: f64 = -200.0;
/// Calibration offset so that a unity-gain pilot reads -20 dB RSRP.
pub const DEFAULT_RSRP_CAL_DB: f64 = -20.0;

/// Identity of one cell (one eNB sector).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The UE's view of the radio at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSnapshot {
    pub t_s: f64,
    pub rsrp_db: BTreeMap<CellId, f64>,
    pub snr_db: f64,
    pub serving: CellId,
}

impl MeasurementSnapshot {
    pub fn rsrp(&self, cell: CellId) -> Option<f64> {
        self.rsrp_db.get(&cell).copied()
    }
}

/// A validated set of cell pilots sharing one comb shape.
#[derive(Debug, Clone)]
pub struct PilotBank {
    cells: Vec<(CellId, PilotTable)>,
}

impl PilotBank {
    pub fn new(cells: &[(CellId, PilotSpec)]) -> Result<Self> {
        let Some((_, first)) = cells.first() else {
            return Err(IqError::Domain(
                "at least one cell pilot is required".into(),
            ));
        };
        let mut tables = Vec::with_capacity(cells.len());
        for (i, (id, spec)) in cells.iter().enumerate() {
            if !spec.same_comb_shape(first) {
                return Err(IqError::Domain(format!(
                    "cell {id} pilot {spec:?} does not share N, C, M with {first:?}"
                )));
            }
            for (other_id, other) in &cells[..i] {
                if other_id == id {
                    return Err(IqError::Domain(format!("duplicate cell id {id}")));
                }
                if other.comb_offset == spec.comb_offset {
                    return Err(IqError::Domain(format!(
                        "cells {other_id} and {id} share comb offset {}",
                        spec.comb_offset
                    )));
                }
            }
            tables.push((*id, PilotTable::new(*spec)?));
        }
        Ok(Self { cells: tables })
    }

    pub fn fft_len(&self) -> usize {
        self.cells[0].1.spec().fft_len
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().map(|(id, _)| *id)
    }

    pub fn table(&self, cell: CellId) -> Option<&PilotTable> {
        self.cells
            .iter()
            .find(|(id, _)| *id == cell)
            .map(|(_, t)| t)
    }

    fn check_window(&self, window: &IqFrame) -> Result<()> {
        let n = self.fft_len();
        if window.is_empty() || window.len() % n != 0 {
            return Err(IqError::Alignment(format!(
                "measurement window of {} samples is not a positive multiple of N = {n}",
                window.len()
            )));
        }
        Ok(())
    }

    /// Complex gain estimate per cell: mean of `window * conj(pilot)`.
    pub fn gains(&self, window: &IqFrame) -> Result<BTreeMap<CellId, Sample>> {
        self.check_window(window)?;
        let w = window.len() as f64;
        Ok(self
            .cells
            .iter()
            .map(|(id, table)| (*id, table.correlate(window) / w))
            .collect())
    }

    pub fn rsrp(&self, window: &IqFrame, cal_db: f64) -> Result<BTreeMap<CellId, f64>> {
        Ok(self
            .gains(window)?
            .into_iter()
            .map(|(id, g)| (id, rsrp_from_gain(g, cal_db)))
            .collect())
    }

    pub fn snr(&self, window: &IqFrame, serving: CellId) -> Result<f64> {
        let gains = self.gains(window)?;
        self.snr_from_gains(window, &gains, serving)
    }

    fn snr_from_gains(
        &self,
        window: &IqFrame,
        gains: &BTreeMap<CellId, Sample>,
        serving: CellId,
    ) -> Result<f64> {
        let g_serving = gains.get(&serving).ok_or_else(|| {
            IqError::Domain(format!("serving cell {serving} has no configured pilot"))
        })?;
        let signal = g_serving.norm_sqr();
        if signal == 0.0 {
            return Ok(DB_FLOOR);
        }
        let mut residual_power = 0.0;
        for (t, x) in window.samples.iter().enumerate() {
            let idx = window.start_index + t as u64;
            let model: Sample = self
                .cells
                .iter()
                .map(|(id, table)| gains[id] * table.at(idx))
                .sum();
            residual_power += (x - model).norm_sqr();
        }
        let noise = residual_power / window.len() as f64;
        if noise == 0.0 {
            return Ok(SNR_CAP_DB);
        }
        Ok((10.0 * (signal / noise).log10()).clamp(DB_FLOOR, SNR_CAP_DB))
    }

    /// RSRP for every cell plus serving-cell SNR, in one pass over the gains.
    pub fn snapshot(
        &self,
        window: &IqFrame,
        serving: CellId,
        t_s: f64,
        cal_db: f64,
    ) -> Result<MeasurementSnapshot> {
        let gains = self.gains(window)?;
        let snr_db = self.snr_from_gains(window, &gains, serving)?;
        let rsrp_db = gains
            .iter()
            .map(|(id, g)| (*id, rsrp_from_gain(*g, cal_db)))
            .collect();
        Ok(MeasurementSnapshot {
            t_s,
            rsrp_db,
            snr_db,
            serving,
        })
    }
}

fn rsrp_from_gain(g: Sample, cal_db: f64) -> f64 {
    let mag = g.norm();
    if mag == 0.0 {
        return DB_FLOOR;
    }
    (20.0 * mag.log10() + cal_db).max(DB_FLOOR)
}

pub fn estimate_rsrp(
    window: &IqFrame,
    cells: &[(CellId, PilotSpec)],
    cal_db: f64,
) -> Result<BTreeMap<CellId, f64>> {
    PilotBank::new(cells)?.rsrp(window, cal_db)
}

pub fn estimate_snr(
    window: &IqFrame,
    cells: &[(CellId, PilotSpec)],
    serving: CellId,
) -> Result<f64> {
    PilotBank::new(cells)?.snr(window, serving)
}
