use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{dl_link, invalid, ul_link, Result, Scenario};
use crate::iqcore::{db_to_linear, CellId};

/// Piecewise-linear gain schedule in dB for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainTrajectory {
    pub link_id: String,
    /// `(t_s, gain_db)` with strictly increasing times.
    pub points: Vec<(f64, f64)>,
}

impl GainTrajectory {
    pub fn new(link_id: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let t = Self {
            link_id: link_id.into(),
            points,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid(format!(
                "trajectory for {} has no points",
                self.link_id
            )));
        }
        if self
            .points
            .iter()
            .any(|(t, g)| !t.is_finite() || !g.is_finite())
        {
            return Err(invalid(format!(
                "trajectory for {} has a non-finite point",
                self.link_id
            )));
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid(format!(
                "trajectory for {} needs strictly increasing times",
                self.link_id
            )));
        }
        Ok(())
    }
}

/// Gain in dB at `t`, holding the first and last values outside the points.
pub fn traj_eval_db(traj: &GainTrajectory, t: f64) -> f64 {
    let pts = &traj.points;
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = pts.partition_point(|p| p.0 <= t);
    let (t0, g0) = pts[i - 1];
    let (t1, g1) = pts[i];
    g0 + (g1 - g0) * (t - t0) / (t1 - t0)
}

pub fn traj_eval(traj: &GainTrajectory, t: f64) -> f64 {
    db_to_linear(traj_eval_db(traj, t))
}

/// Log-distance path loss `pl0 + 10 n log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLoss {
    pub pl0_db: f64,
    pub exponent: f64,
    pub d0_m: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            pl0_db: 40.0,
            exponent: 2.7,
            d0_m: 1.0,
        }
    }
}

impl PathLoss {
    pub fn loss_db(&self, d_m: f64) -> f64 {
        self.pl0_db + 10.0 * self.exponent * (d_m.max(self.d0_m) / self.d0_m).log10()
    }
}

fn default_tx_cal() -> f64 {
    // RSRP of about -60 at 100 m with the default path loss
    54.0
}

/// A straight flight at constant altitude and speed from the first eNB
/// towards the second (or back, with `reverse`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightPath {
    pub enb_positions: [[f64; 3]; 2],
    pub altitude_m: f64,
    pub speed_mps: f64,
    #[serde(default)]
    pub pathloss: PathLoss,
    #[serde(default = "default_tx_cal")]
    pub tx_cal_db: f64,
    #[serde(default)]
    pub reverse: bool,
}

impl FlightPath {
    pub fn validate(&self) -> Result<()> {
        if self.separation_m() <= 0.0 || !self.separation_m().is_finite() {
            return Err(invalid("flight eNB positions must be distinct"));
        }
        if !(self.speed_mps > 0.0 && self.speed_mps.is_finite()) {
            return Err(invalid(format!(
                "flight speed_mps must be > 0, got {}",
                self.speed_mps
            )));
        }
        if !(self.pathloss.exponent >= 1.0) {
            return Err(invalid(format!(
                "path loss exponent must be >= 1, got {}",
                self.pathloss.exponent
            )));
        }
        if !(self.pathloss.d0_m > 0.0) {
            return Err(invalid("path loss d0_m must be > 0"));
        }
        if !self.altitude_m.is_finite()
            || !self.tx_cal_db.is_finite()
            || !self.pathloss.pl0_db.is_finite()
        {
            return Err(invalid("flight parameters must be finite"));
        }
        Ok(())
    }

    /// Horizontal distance between the eNBs, which is the flight length.
    pub fn separation_m(&self) -> f64 {
        let [a, b] = self.enb_positions;
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn flight_time_s(&self) -> f64 {
        self.separation_m() / self.speed_mps
    }

    /// Distance flown from the origin at `t`, clamped to the flight.
    pub fn travelled_m(&self, t: f64) -> f64 {
        (t.max(0.0) * self.speed_mps).min(self.separation_m())
    }

    pub fn position(&self, t: f64) -> [f64; 3] {
        let [mut a, mut b] = self.enb_positions;
        if self.reverse {
            std::mem::swap(&mut a, &mut b);
        }
        let s = self.travelled_m(t) / self.separation_m();
        [
            a[0] + (b[0] - a[0]) * s,
            a[1] + (b[1] - a[1]) * s,
            self.altitude_m,
        ]
    }

    pub fn distance_m(&self, enb: usize, t: f64) -> f64 {
        let p = self.position(t);
        let e = self.enb_positions[enb];
        ((p[0] - e[0]).powi(2) + (p[1] - e[1]).powi(2) + (p[2] - e[2]).powi(2)).sqrt()
    }
}

/// Link gain in dB from eNB number `enb` (0 or 1) at time `t`.
pub fn pathloss_gain_db(path: &FlightPath, enb: usize, t: f64) -> f64 {
    path.tx_cal_db - path.pathloss.loss_db(path.distance_m(enb, t))
}

pub fn pathloss_gain(path: &FlightPath, enb: usize, t: f64) -> f64 {
    db_to_linear(pathloss_gain_db(path, enb, t))
}

#[derive(Debug, Clone)]
enum LinkDrive {
    Fixed(f64),
    Trajectory(GainTrajectory),
    Flight(usize),
}

/// What drives every link's gain over time. Links without a schedule sit at
/// 0 dB.
#[derive(Debug, Clone)]
pub struct GainPlan {
    links: BTreeMap<String, LinkDrive>,
    flight: Option<FlightPath>,
    dl: BTreeMap<CellId, String>,
}

impl GainPlan {
    pub fn new(s: &Scenario) -> Self {
        let mut links = BTreeMap::new();
        let mut dl = BTreeMap::new();
        for (i, c) in s.cells.iter().enumerate() {
            let drive = if s.drive.flight.is_some() {
                LinkDrive::Flight(i)
            } else {
                LinkDrive::Fixed(0.0)
            };
            links.insert(dl_link(c.cell_id), drive.clone());
            links.insert(ul_link(c.cell_id), drive);
            dl.insert(c.cell_id, dl_link(c.cell_id));
        }
        for t in &s.drive.trajectories {
            links.insert(t.link_id.clone(), LinkDrive::Trajectory(t.clone()));
        }
        Self {
            links,
            flight: s.drive.flight.clone(),
            dl,
        }
    }

    pub fn link_ids(&self) -> impl Iterator<Item = &str> {
        self.links.keys().map(String::as_str)
    }

    pub fn gain_db(&self, link: &str, t: f64) -> Option<f64> {
        Some(match self.links.get(link)? {
            LinkDrive::Fixed(g) => *g,
            LinkDrive::Trajectory(traj) => traj_eval_db(traj, t),
            LinkDrive::Flight(i) => {
                pathloss_gain_db(self.flight.as_ref().expect("flight drive"), *i, t)
            }
        })
    }

    pub fn downlink_db(&self, cell: CellId, t: f64) -> f64 {
        self.dl
            .get(&cell)
            .and_then(|l| self.gain_db(l, t))
            .unwrap_or(0.0)
    }

    pub fn all_db(&self, t: f64) -> BTreeMap<String, f64> {
        self.links
            .keys()
            .map(|l| (l.clone(), self.gain_db(l, t).expect("own link")))
            .collect()
    }
}
