use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::realtime::{run_realtime, LiveShared, RunHandle, RunStatus};
use super::{dl_link, ClockMode, GainPlan, Result, Scenario, ScenarioError, Trace, RSRP_CAL_DB};
use crate::iqcore::{add_awgn, CellId, IqFrame, PilotBank, PilotTable, Sample};
use crate::ransim::{NetEvent, RanNetwork};

/// Measurement, A3 and S1 stepping shared by both clock modes.
pub(crate) struct Stepper {
    pub net: RanNetwork,
    pub bank: PilotBank,
    pub trace: Trace,
    pub live: Arc<LiveShared>,
}

impl Stepper {
    pub fn new(s: &Scenario, live: Arc<LiveShared>) -> Result<Self> {
        let net = RanNetwork::new(
            &s.ran_cells(),
            s.initial_serving(),
            s.a3_config(),
            s.s1_latency,
            s.seed,
        )?;
        Ok(Self {
            net,
            bank: PilotBank::new(&s.pilots())?,
            trace: Trace::new(s.cell_ids()),
            live,
        })
    }

    fn record_events(&mut self, events: Vec<NetEvent>, serving_before: CellId) {
        if events.is_empty() {
            return;
        }
        self.live.publish_events(&events);
        self.trace.push_events(events, serving_before);
    }

    /// Processes deliveries due by `t`.
    pub fn advance(&mut self, t: f64) {
        let serving = self.net.serving();
        let events = self.net.advance(t);
        self.record_events(events, serving);
    }

    /// Measures `window`, records the row, then runs A3 and any S1 traffic
    /// it starts.
    pub fn measure(&mut self, window: &IqFrame, t: f64) -> Result<()> {
        self.advance(t);
        let serving = self.net.serving();
        let snap = self.bank.snapshot(window, serving, t, RSRP_CAL_DB)?;
        self.trace
            .push_measurement(t, snap.rsrp_db.clone(), snap.snr_db, serving);
        self.live.publish_measurement(&snap);
        let events = self.net.measure(&snap, t)?;
        self.record_events(events, serving);
        Ok(())
    }
}

/// Rebuilds the UE's received window for the frame containing `t`, the
/// same samples the realtime pipeline would deliver.
struct Synth {
    tables: Vec<(CellId, PilotTable)>,
    rate: f64,
    n: usize,
    noise_power: f64,
    rng: ChaCha8Rng,
    buf: Vec<Sample>,
}

impl Synth {
    fn new(s: &Scenario) -> Result<Self> {
        let tables = s
            .pilots()
            .into_iter()
            .map(|(id, spec)| Ok((id, PilotTable::new(spec)?)))
            .collect::<Result<Vec<_>>>()?;
        let n = tables[0].1.spec().fft_len;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        // keep the noise stream apart from the S1 jitter stream
        rng.set_stream(1);
        Ok(Self {
            tables,
            rate: s.sample_rate_hz()?,
            n,
            noise_power: s.drive.noise_power,
            rng,
            buf: Vec::new(),
        })
    }

    fn frame_start(&self, t: f64) -> u64 {
        (t * self.rate / self.n as f64).floor() as u64 * self.n as u64
    }

    fn window(&mut self, start: u64, gains: &BTreeMap<CellId, f64>) -> Result<IqFrame> {
        let mut acc = vec![Sample::new(0.0, 0.0); self.n];
        for (id, table) in &self.tables {
            let g = gains[id];
            self.buf.clear();
            table.extend_into(&mut self.buf, start, self.n);
            for (a, p) in acc.iter_mut().zip(&self.buf) {
                *a += p * g;
            }
        }
        let frame = IqFrame::new(start, self.rate, acc);
        if self.noise_power > 0.0 {
            return Ok(add_awgn(frame, self.noise_power, &mut self.rng)?);
        }
        Ok(frame)
    }
}

/// Executes a scenario on the virtual clock.
///
/// Only the frames that fall on measurement instants are synthesised: the
/// frame containing `t` is built with every link's gain evaluated at that
/// frame's start time.
pub fn run_virtual(s: &Scenario) -> Result<Trace> {
    s.validate()?;
    let live = LiveShared::new(s);
    run_virtual_with(s, live)
}

pub(crate) fn run_virtual_with(s: &Scenario, live: Arc<LiveShared>) -> Result<Trace> {
    let plan = GainPlan::new(s);
    let mut synth = Synth::new(s)?;
    let mut step = Stepper::new(s, live.clone())?;
    live.set_status(RunStatus::Running);
    let period = s.meas_period_s;
    let mut last_t = 0.0;
    for i in 0u64.. {
        let t = i as f64 * period;
        if t > s.duration_s + 1e-9 {
            break;
        }
        if live.stop_requested() {
            break;
        }
        let start = synth.frame_start(t);
        let t_frame = start as f64 / synth.rate;
        live.apply_plan(&plan, t_frame);
        let gains: BTreeMap<CellId, f64> = s
            .cells
            .iter()
            .map(|c| (c.cell_id, live.gain_linear(&dl_link(c.cell_id))))
            .collect();
        let window = synth.window(start, &gains)?;
        step.measure(&window, t)?;
        live.set_time(t);
        last_t = t;
    }
    // deliveries still in flight when the run ends
    step.advance(s.duration_s.max(last_t));
    Ok(step.trace)
}

/// Runs a scenario to completion on the clock it asks for.
pub fn run_scenario(s: &Scenario) -> Result<Trace> {
    s.validate()?;
    match s.clock {
        ClockMode::Virtual => run_virtual(s),
        ClockMode::Realtime => run_realtime(s, LiveShared::new(s)),
    }
}

/// Starts a scenario on its own thread and returns a handle for live
/// control.
pub fn spawn_scenario(s: Scenario) -> Result<RunHandle> {
    s.validate()?;
    let live = LiveShared::new(&s);
    let shared = live.clone();
    let thread = std::thread::Builder::new()
        .name("scenario".into())
        .spawn(move || {
            let result = match s.clock {
                ClockMode::Virtual => run_virtual_with(&s, shared.clone()),
                ClockMode::Realtime => run_realtime(&s, shared.clone()),
            };
            match &result {
                Ok(_) if shared.stop.load(Ordering::Acquire) => {
                    shared.set_status(RunStatus::Stopped)
                }
                Ok(_) => shared.set_status(RunStatus::Finished),
                Err(e) => shared.fail(e),
            }
            result
        })
        .map_err(ScenarioError::Io)?;
    Ok(RunHandle::new(live, thread))
}
