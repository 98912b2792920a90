use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::runner::Stepper;
use super::{dl_link, ul_link, GainPlan, Result, Scenario, ScenarioError, Trace};
use crate::iqcore::{
    CellId, Clock, GainCell, IqFrame, MeasurementSnapshot, Pacer, PilotSpec, PilotTable, WallClock,
};
use crate::ransim::{EventKind, NetEvent};
use crate::transport::{
    bridge_link, in_process_link, request_exact, AwgnStage, BridgeHandle, GainStage,
    InProcessConsumer, MixTap, PaceStage, PilotSource, Stage, TeeStage, TransportError,
};

/// Trajectory gains are pushed to the links at this interval.
pub const GAIN_TICK_S: f64 = 0.01;

const EVENT_BACKLOG: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Idle,
    Starting,
    Running,
    Finished,
    Stopped,
    Failed,
}

/// What a running scenario looks like right now.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveState {
    pub status: RunStatus,
    pub t_s: f64,
    pub rsrp_db: BTreeMap<CellId, f64>,
    pub snr_db: Option<f64>,
    pub serving: Option<CellId>,
    pub gains_db: BTreeMap<String, f64>,
    pub handovers: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LiveState {
    pub fn idle() -> Self {
        Self {
            status: RunStatus::Idle,
            t_s: 0.0,
            rsrp_db: BTreeMap::new(),
            snr_db: None,
            serving: None,
            gains_db: BTreeMap::new(),
            handovers: 0,
            error: None,
        }
    }
}

pub(crate) struct LiveShared {
    state: Mutex<LiveState>,
    events: Mutex<VecDeque<NetEvent>>,
    gains: BTreeMap<String, Arc<GainCell>>,
    pub stop: AtomicBool,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl LiveShared {
    pub fn new(s: &Scenario) -> Arc<Self> {
        let plan = GainPlan::new(s);
        let gains = plan
            .all_db(0.0)
            .into_iter()
            .map(|(link, db)| (link, Arc::new(GainCell::new(db))))
            .collect();
        let mut state = LiveState::idle();
        state.status = RunStatus::Starting;
        state.serving = Some(s.initial_serving());
        Arc::new(Self {
            state: Mutex::new(state),
            events: Mutex::new(VecDeque::new()),
            gains,
            stop: AtomicBool::new(false),
        })
    }

    pub fn gain_cell(&self, link: &str) -> Option<Arc<GainCell>> {
        self.gains.get(link).cloned()
    }

    pub fn gain_linear(&self, link: &str) -> f64 {
        self.gains.get(link).map_or(1.0, |g| g.linear())
    }

    pub fn apply_plan(&self, plan: &GainPlan, t: f64) {
        for (link, cell) in &self.gains {
            if let Some(db) = plan.gain_db(link, t) {
                cell.set_auto(db);
            }
        }
    }

    pub fn stop_requested(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    pub fn set_status(&self, status: RunStatus) {
        lock(&self.state).status = status;
    }

    pub fn set_time(&self, t: f64) {
        let mut st = lock(&self.state);
        st.t_s = st.t_s.max(t);
    }

    pub fn fail(&self, e: &ScenarioError) {
        let mut st = lock(&self.state);
        st.status = RunStatus::Failed;
        st.error = Some(e.to_string());
    }

    pub fn publish_measurement(&self, snap: &MeasurementSnapshot) {
        let mut st = lock(&self.state);
        st.t_s = st.t_s.max(snap.t_s);
        st.rsrp_db = snap.rsrp_db.clone();
        st.snr_db = Some(snap.snr_db);
        st.serving = Some(snap.serving);
    }

    pub fn publish_events(&self, events: &[NetEvent]) {
        {
            let mut st = lock(&self.state);
            for e in events {
                if let EventKind::Handover { to, .. } = e.event {
                    st.serving = Some(to);
                    st.handovers += 1;
                }
            }
        }
        let mut q = lock(&self.events);
        for e in events {
            if q.len() == EVENT_BACKLOG {
                q.pop_front();
            }
            q.push_back(e.clone());
        }
    }

    pub fn snapshot(&self) -> LiveState {
        let mut st = lock(&self.state).clone();
        st.gains_db = self
            .gains
            .iter()
            .map(|(l, g)| (l.clone(), g.gain_db()))
            .collect();
        st
    }
}

/// Control handle for a scenario running on its own thread. Dropping it
/// asks the run to stop.
pub struct RunHandle {
    live: Arc<LiveShared>,
    thread: Option<JoinHandle<Result<Trace>>>,
}

impl RunHandle {
    pub(crate) fn new(live: Arc<LiveShared>, thread: JoinHandle<Result<Trace>>) -> Self {
        Self {
            live,
            thread: Some(thread),
        }
    }

    pub fn state(&self) -> LiveState {
        self.live.snapshot()
    }

    pub fn link_ids(&self) -> Vec<String> {
        self.live.gains.keys().cloned().collect()
    }

    /// Pins a link's gain, overriding its trajectory from the next frame on.
    pub fn set_gain(&self, link: &str, gain_db: f64) -> std::result::Result<(), String> {
        if !gain_db.is_finite() {
            return Err(format!("gain_db must be finite, got {gain_db}"));
        }
        match self.live.gains.get(link) {
            Some(cell) => {
                cell.set_manual(gain_db);
                Ok(())
            }
            None => Err(format!(
                "unknown link {link:?}; valid links are {:?}",
                self.link_ids()
            )),
        }
    }

    /// Hands a pinned link back to its trajectory.
    pub fn release_gain(&self, link: &str) -> bool {
        self.live.gains.get(link).map(|c| c.release()).is_some()
    }

    /// Events recorded since the previous call.
    pub fn drain_events(&self) -> Vec<NetEvent> {
        lock(&self.live.events).drain(..).collect()
    }

    pub fn stop(&self) {
        self.live.stop.store(true, Ordering::Release);
    }

    pub fn is_finished(&self) -> bool {
        self.thread.as_ref().map_or(true, |t| t.is_finished())
    }

    pub fn join(mut self) -> Result<Trace> {
        let t = self.thread.take().expect("joined once");
        t.join()
            .unwrap_or_else(|_| Err(ScenarioError::Invalid("scenario thread panicked".into())))
    }
}

impl Drop for RunHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop();
        }
    }
}

/// Samples per second seen by a consumer, from its first frame to its last.
#[derive(Debug, Default, Clone, Copy)]
struct RateMeter {
    first: Option<(f64, u64)>,
    last: (f64, u64),
    total: u64,
}

impl RateMeter {
    fn tick(&mut self, now: f64, n: usize) {
        self.total += n as u64;
        if self.first.is_none() {
            self.first = Some((now, self.total));
        }
        self.last = (now, self.total);
    }

    fn rate(&self) -> Option<f64> {
        let (t0, c0) = self.first?;
        let (t1, c1) = self.last;
        (t1 > t0).then(|| (c1 - c0) as f64 / (t1 - t0))
    }
}

fn drain_thread(
    name: String,
    mut c: InProcessConsumer,
    n: usize,
    clock: Arc<dyn Clock>,
    stop: Arc<AtomicBool>,
    latest: Option<Arc<Mutex<Option<IqFrame>>>>,
) -> std::io::Result<JoinHandle<Option<f64>>> {
    std::thread::Builder::new().name(name).spawn(move || {
        let mut meter = RateMeter::default();
        while !stop.load(Ordering::Acquire) {
            match request_exact(&mut c, n) {
                Ok(f) if f.len() == n => {
                    meter.tick(clock.now_s(), n);
                    if let Some(slot) = &latest {
                        *lock(slot) = Some(f);
                    }
                }
                Err(TransportError::Timeout(_)) => continue,
                _ => break,
            }
        }
        meter.rate()
    })
}

/// Everything the realtime topology spawned.
struct Pipeline {
    stop: Arc<AtomicBool>,
    bridges: Vec<BridgeHandle>,
    drains: Vec<(String, JoinHandle<Option<f64>>)>,
    latest: Arc<Mutex<Option<IqFrame>>>,
}

impl Pipeline {
    /// Each eNB downlink goes pilot -> gain -> throttle, the downlinks are
    /// summed (plus noise) into the UE's receive link; the UE's uplink
    /// pilot is throttled, split, and sent through one gain per eNB.
    fn build(s: &Scenario, live: &LiveShared, clock: Arc<dyn Clock>) -> Result<Self> {
        let rate = s.sample_rate_hz()?;
        let pilots = s.pilots();
        let n = pilots[0].1.fft_len;
        let cap = 2 * n;
        let poll = Duration::from_millis(200);
        let stop = Arc::new(AtomicBool::new(false));
        let mut p = Pipeline {
            stop: stop.clone(),
            bridges: Vec::new(),
            drains: Vec::new(),
            latest: Arc::new(Mutex::new(None)),
        };
        let gain = |link: &str| -> Box<dyn Stage> {
            Box::new(GainStage::new(
                live.gain_cell(link).expect("every link has a gain cell"),
            ))
        };
        let pace = || -> Result<Box<dyn Stage>> {
            Ok(Box::new(PaceStage::new(Pacer::new(rate, clock.clone())?)))
        };

        let mut downlinks = Vec::new();
        for (id, spec) in &pilots {
            let link = dl_link(*id);
            let src = PilotSource::new(link.clone(), PilotTable::new(*spec)?, rate);
            let (w, c) = in_process_link(link.clone(), rate, cap);
            p.bridges.push(bridge_link(
                Box::new(src),
                vec![gain(&link), pace()?],
                w,
                n,
                stop.clone(),
            )?);
            downlinks.push(c.with_timeout(poll));
        }
        let first = downlinks.remove(0);
        let mut mix: Vec<Box<dyn Stage>> = downlinks
            .into_iter()
            .map(|c| Box::new(MixTap::new(Box::new(c))) as Box<dyn Stage>)
            .collect();
        if s.drive.noise_power > 0.0 {
            mix.push(Box::new(AwgnStage::new(s.drive.noise_power, s.seed)));
        }
        let (ue_w, ue_c) = in_process_link("ue_dl", rate, cap);
        p.bridges
            .push(bridge_link(Box::new(first), mix, ue_w, n, stop.clone())?);
        p.drains.push((
            "ue_dl".into(),
            drain_thread(
                "ue-rx".into(),
                ue_c.with_timeout(poll),
                n,
                clock.clone(),
                stop.clone(),
                Some(p.latest.clone()),
            )?,
        ));

        // the uplink carries the UE's own comb on the first unused offset
        let ue_offset = (0..pilots[0].1.comb_spacing)
            .find(|o| pilots.iter().all(|(_, sp)| sp.comb_offset != *o))
            .unwrap_or(0);
        let ue_spec = PilotSpec {
            comb_offset: ue_offset,
            ..pilots[0].1
        };
        let ue_src = PilotSource::new("ue_ul", PilotTable::new(ue_spec)?, rate);
        let mut split_stages = vec![pace()?];
        let mut split_consumers = Vec::new();
        let mut first_split = None;
        for (k, (id, _)) in pilots.iter().enumerate() {
            let (w, c) = in_process_link(format!("ue_ul_to_{}", id.0), rate, cap);
            if k == 0 {
                first_split = Some(w);
            } else {
                split_stages.push(Box::new(TeeStage::new(w)) as Box<dyn Stage>);
            }
            split_consumers.push((*id, c));
        }
        p.bridges.push(bridge_link(
            Box::new(ue_src),
            split_stages,
            first_split.expect("at least two cells"),
            n,
            stop.clone(),
        )?);
        for (id, c) in split_consumers {
            let link = ul_link(id);
            let (w, sink) = in_process_link(link.clone(), rate, cap);
            p.bridges.push(bridge_link(
                Box::new(c.with_timeout(poll)),
                vec![gain(&link)],
                w,
                n,
                stop.clone(),
            )?);
            p.drains.push((
                link.clone(),
                drain_thread(
                    format!("{link}-rx"),
                    sink.with_timeout(poll),
                    n,
                    clock.clone(),
                    stop.clone(),
                    None,
                )?,
            ));
        }
        Ok(p)
    }

    fn latest(&self) -> Option<IqFrame> {
        lock(&self.latest).clone()
    }

    fn shutdown(self) -> BTreeMap<String, f64> {
        self.stop.store(true, Ordering::Release);
        let mut rates = BTreeMap::new();
        for (link, t) in self.drains {
            if let Ok(Some(r)) = t.join() {
                rates.insert(link, r);
            }
        }
        for b in self.bridges {
            if let Err(e) = b.join() {
                tracing::warn!(error = %e, "bridge ended with an error");
            }
        }
        rates
    }
}

/// Executes a scenario in real time through the full sample pipeline.
///
/// Scenario time zero is the arrival of the UE's first complete window.
pub(crate) fn run_realtime(s: &Scenario, live: Arc<LiveShared>) -> Result<Trace> {
    let clock: Arc<dyn Clock> = Arc::new(WallClock::new());
    let plan = GainPlan::new(s);
    let mut step = Stepper::new(s, live.clone())?;
    let pipeline = Pipeline::build(s, &live, clock.clone())?;
    let result = drive_realtime(s, &live, &plan, &mut step, &pipeline, clock.as_ref());
    let rates = pipeline.shutdown();
    result?;
    let mut trace = step.trace;
    trace.link_rate_hz = rates;
    Ok(trace)
}

fn drive_realtime(
    s: &Scenario,
    live: &LiveShared,
    plan: &GainPlan,
    step: &mut Stepper,
    pipeline: &Pipeline,
    clock: &dyn Clock,
) -> Result<()> {
    let wait_until = clock.now_s() + 5.0;
    while pipeline.latest().is_none() {
        if clock.now_s() > wait_until || live.stop_requested() {
            return Err(TransportError::Timeout(Duration::from_secs(5)).into());
        }
        clock.sleep_until(clock.now_s() + 0.001);
    }
    let t0 = clock.now_s();
    live.set_status(super::RunStatus::Running);
    let mut next_tick = 0.0;
    let mut i = 0u64;
    loop {
        let tau = clock.now_s() - t0;
        if tau > s.duration_s || live.stop_requested() {
            break;
        }
        if tau >= next_tick {
            live.apply_plan(plan, tau);
            next_tick = (tau / GAIN_TICK_S).floor() * GAIN_TICK_S + GAIN_TICK_S;
        }
        step.advance(tau);
        let next_meas = i as f64 * s.meas_period_s;
        if tau >= next_meas {
            let window = pipeline.latest().expect("first window seen");
            step.measure(&window, tau)?;
            live.set_time(tau);
            i += 1;
        }
        let mut wake = next_tick
            .min(i as f64 * s.meas_period_s)
            .min(s.duration_s + 1e-3);
        if let Some(due) = step.net.next_due() {
            wake = wake.min(due);
        }
        clock.sleep_until(t0 + wake);
    }
    step.advance(s.duration_s);
    Ok(())
}
