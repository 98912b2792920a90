use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Result;
use crate::iqcore::CellId;
use crate::ransim::{EventKind, NetEvent};

/// One trace row: a measurement, or an S1/handover event stamped with the
/// latest measured values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_s: f64,
    pub rsrp_db: BTreeMap<CellId, f64>,
    pub snr_db: f64,
    pub serving: CellId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub cells: Vec<CellId>,
    pub records: Vec<TraceRecord>,
    /// Full event records, in trace order.
    pub events: Vec<NetEvent>,
    /// Measured delivery rate per link (realtime runs only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub link_rate_hz: BTreeMap<String, f64>,
}

impl Trace {
    pub fn new(mut cells: Vec<CellId>) -> Self {
        cells.sort();
        Self {
            cells,
            ..Self::default()
        }
    }

    pub fn push_measurement(
        &mut self,
        t_s: f64,
        rsrp_db: BTreeMap<CellId, f64>,
        snr_db: f64,
        serving: CellId,
    ) {
        self.records.push(TraceRecord {
            t_s,
            rsrp_db,
            snr_db,
            serving,
            event: None,
        });
    }

    /// Appends event rows; `serving` is the serving cell before the first of
    /// them and follows any handover in the batch.
    pub fn push_events(&mut self, events: Vec<NetEvent>, mut serving: CellId) {
        let (rsrp, snr) = match self.records.last() {
            Some(r) => (r.rsrp_db.clone(), r.snr_db),
            None => (BTreeMap::new(), f64::NAN),
        };
        for ev in events {
            if let EventKind::Handover { to, .. } = ev.event {
                serving = to;
            }
            self.records.push(TraceRecord {
                t_s: ev.t_s,
                rsrp_db: rsrp.clone(),
                snr_db: snr,
                serving,
                event: Some(ev.event.clone()),
            });
            self.events.push(ev);
        }
    }

    pub fn measurements(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.event.is_none())
    }

    pub fn handovers(&self) -> impl Iterator<Item = (f64, CellId, CellId)> + '_ {
        self.events.iter().filter_map(|e| match e.event {
            EventKind::Handover { from, to } => Some((e.t_s, from, to)),
            _ => None,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t_s");
        for c in &self.cells {
            let _ = write!(h, ",rsrp_{}_db", c.0);
        }
        h.push_str(",snr_db,serving,event");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{:.3}", r.t_s);
            for c in &self.cells {
                match r.rsrp_db.get(c) {
                    Some(v) => {
                        let _ = write!(out, ",{v:.3}");
                    }
                    None => out.push(','),
                }
            }
            if r.snr_db.is_finite() {
                let _ = write!(out, ",{:.3}", r.snr_db);
            } else {
                out.push(',');
            }
            let _ = write!(out, ",{},", r.serving.0);
            if let Some(e) = &r.event {
                let _ = write!(out, "{e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    /// `<dir>/<stem>.events.jsonl` next to the CSV.
    pub fn events_path(csv: &Path) -> PathBuf {
        let stem = csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        csv.with_file_name(format!("{stem}.events.jsonl"))
    }

    /// Writes the CSV and its JSON-lines event mirror; returns the latter's
    /// path.
    pub fn write(&self, csv: &Path) -> Result<PathBuf> {
        std::fs::write(csv, self.to_csv())?;
        let ev = Self::events_path(csv);
        std::fs::write(&ev, self.events_jsonl())?;
        Ok(ev)
    }
}
