//! Declarative experiments, the runner and trace output.
//!
//! A [`Scenario`] is read from JSON, validated up front, and then executed
//! either on a virtual clock (deterministic, as fast as the CPU allows) or
//! in real time through the full sample pipeline.

mod drive;
mod realtime;
mod runner;
mod trace;

pub use drive::{
    pathloss_gain, pathloss_gain_db, traj_eval, traj_eval_db, FlightPath, GainPlan, GainTrajectory,
    PathLoss,
};
pub use realtime::{LiveState, RunHandle, RunStatus};
pub use runner::{run_scenario, run_virtual, spawn_scenario};
pub use trace::{Trace, TraceRecord};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::iqcore::{base_rate, throttle_rate, CellId, IqError, PilotBank, PilotSpec};
use crate::ransim::{A3Config, RanCell, RanError, S1Config};
use crate::transport::TransportError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ran(#[from] RanError),
    #[error(transparent)]
    Dsp(#[from] IqError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl ScenarioError {
    /// Whether the error is the scenario's fault rather than the run's.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ScenarioError::Invalid(_)
                | ScenarioError::Json(_)
                | ScenarioError::Ran(RanError::Config(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// RSRP calibration used by every scenario run.
pub const RSRP_CAL_DB: f64 = crate::iqcore::DEFAULT_RSRP_CAL_DB;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellRole {
    Serving,
    #[default]
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub cell_id: CellId,
    /// Defaults to the standard comb at offset equal to the cell's index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<PilotSpec>,
    #[serde(default)]
    pub role: CellRole,
    #[serde(default = "yes")]
    pub admitting: bool,
}

fn yes() -> bool {
    true
}

/// The scenario file's `a3` block. `meas_period_s` lives at top level; if
/// repeated here it must agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A3Section {
    #[serde(default = "default_hysteresis")]
    pub hysteresis_db: f64,
    #[serde(default)]
    pub time_to_trigger_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meas_period_s: Option<f64>,
}

fn default_hysteresis() -> f64 {
    3.0
}

impl Default for A3Section {
    fn default() -> Self {
        Self {
            hysteresis_db: default_hysteresis(),
            time_to_trigger_s: 0.0,
            meas_period_s: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<GainTrajectory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flight: Option<FlightPath>,
    /// AWGN power added at the UE, linear (unit = full-scale pilot power).
    #[serde(default)]
    pub noise_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Virtual,
    Realtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cells: Vec<CellConfig>,
    pub n_rb: u32,
    pub a3: A3Section,
    pub s1_latency: S1Config,
    pub drive: Drive,
    pub duration_s: f64,
    pub seed: u64,
    pub clock: ClockMode,
    pub meas_period_s: f64,
}

pub fn dl_link(cell: CellId) -> String {
    format!("enb{}_dl", cell.0)
}

pub fn ul_link(cell: CellId) -> String {
    format!("enb{}_ul", cell.0)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn cell_ids(&self) -> Vec<CellId> {
        self.cells.iter().map(|c| c.cell_id).collect()
    }

    /// Pilot of each cell, defaults filled in.
    pub fn pilots(&self) -> Vec<(CellId, PilotSpec)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    c.cell_id,
                    c.pilot.unwrap_or_else(|| PilotSpec::with_offset(i)),
                )
            })
            .collect()
    }

    /// Every link of the topology: each eNB's downlink and uplink.
    pub fn link_ids(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .cells
            .iter()
            .flat_map(|c| [dl_link(c.cell_id), ul_link(c.cell_id)])
            .collect();
        out.sort();
        out
    }

    pub fn initial_serving(&self) -> CellId {
        if let Some(c) = self.cells.iter().find(|c| c.role == CellRole::Serving) {
            return c.cell_id;
        }
        // a flight starts next to its origin eNB
        match &self.drive.flight {
            Some(f) if f.reverse && self.cells.len() == 2 => self.cells[1].cell_id,
            _ => self.cells[0].cell_id,
        }
    }

    pub fn a3_config(&self) -> A3Config {
        A3Config {
            hysteresis_db: self.a3.hysteresis_db,
            time_to_trigger_s: self.a3.time_to_trigger_s,
            meas_period_s: self.meas_period_s,
        }
    }

    pub fn ran_cells(&self) -> Vec<RanCell> {
        self.cells
            .iter()
            .map(|c| RanCell {
                id: c.cell_id,
                admitting: c.admitting,
            })
            .collect()
    }

    pub fn sample_rate_hz(&self) -> Result<f64> {
        Ok(throttle_rate(self.n_rb)?)
    }

    pub fn gain_plan(&self) -> GainPlan {
        GainPlan::new(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.len() < 2 {
            return Err(invalid(format!(
                "need at least 2 cells, got {}",
                self.cells.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for c in &self.cells {
            if !ids.insert(c.cell_id) {
                return Err(invalid(format!("duplicate cell_id {}", c.cell_id)));
            }
        }
        let serving = self
            .cells
            .iter()
            .filter(|c| c.role == CellRole::Serving)
            .count();
        if serving > 1 {
            return Err(invalid("more than one cell has role \"serving\""));
        }
        PilotBank::new(&self.pilots()).map_err(|e| invalid(e.to_string()))?;
        base_rate(self.n_rb).map_err(|e| invalid(e.to_string()))?;

        if !(self.meas_period_s > 0.0 && self.meas_period_s.is_finite()) {
            return Err(invalid(format!(
                "meas_period_s must be > 0, got {}",
                self.meas_period_s
            )));
        }
        if let Some(p) = self.a3.meas_period_s {
            if p != self.meas_period_s {
                return Err(invalid(format!(
                    "a3.meas_period_s ({p}) disagrees with meas_period_s ({})",
                    self.meas_period_s
                )));
            }
        }
        self.a3_config()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.s1_latency
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(invalid(format!(
                "duration_s must be > 0, got {}",
                self.duration_s
            )));
        }
        if !(self.drive.noise_power >= 0.0 && self.drive.noise_power.is_finite()) {
            return Err(invalid(format!(
                "drive.noise_power must be >= 0, got {}",
                self.drive.noise_power
            )));
        }

        let links = self.link_ids();
        let mut seen = BTreeSet::new();
        for traj in &self.drive.trajectories {
            if !links.contains(&traj.link_id) {
                return Err(invalid(format!(
                    "trajectory references unknown link {:?}; valid links are {links:?}",
                    traj.link_id
                )));
            }
            if !seen.insert(traj.link_id.as_str()) {
                return Err(invalid(format!(
                    "link {:?} has more than one trajectory",
                    traj.link_id
                )));
            }
            traj.validate()?;
        }
        if let Some(flight) = &self.drive.flight {
            if !self.drive.trajectories.is_empty() {
                return Err(invalid(
                    "drive takes either trajectories or a flight, not both",
                ));
            }
            if self.cells.len() != 2 {
                return Err(invalid(
                    "a flight needs exactly 2 cells, one per eNB position",
                ));
            }
            flight.validate()?;
        }
        Ok(())
    }
}
