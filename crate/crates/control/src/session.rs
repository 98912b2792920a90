//! The command loop that owns the running scenario.
//!
//! Every mutation goes through one task, so commands are totally ordered;
//! telemetry fans out over a broadcast ring where a slow subscriber loses
//! its oldest frames instead of holding anyone up.

use std::collections::VecDeque;
use std::time::Duration;

use hoemu_core::ransim::{EventKind, NetEvent};
use hoemu_core::scenario::{spawn_scenario, ClockMode, LiveState, RunHandle, RunStatus, Scenario};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::MissedTickBehavior;

use crate::protocol::{
    Command, CommandKind, ErrorCode, ErrorReply, EventMessage, Reply, ServerMessage, TelemetryFrame,
};

pub const DEFAULT_CADENCE: Duration = Duration::from_millis(100);
/// Frames a subscriber may fall behind by before it starts losing them.
pub const SUBSCRIBER_BACKLOG: usize = 64;

type Request = (Command, oneshot::Sender<Reply>);

/// Cheap, cloneable handle to the session task.
#[derive(Clone)]
pub struct Session {
    commands: mpsc::Sender<Request>,
    telemetry: broadcast::Sender<ServerMessage>,
}

impl Session {
    /// Starts the session task on the current tokio runtime.
    pub fn spawn(cadence: Duration) -> Self {
        let (commands, rx) = mpsc::channel(64);
        let (telemetry, _) = broadcast::channel(SUBSCRIBER_BACKLOG);
        let ctl = Controller {
            run: None,
            last: LiveState::idle(),
            pending: VecDeque::new(),
            out: telemetry.clone(),
        };
        tokio::spawn(ctl.run(rx, cadence));
        Self {
            commands,
            telemetry,
        }
    }

    pub async fn execute(&self, cmd: Command) -> Reply {
        let (tx, rx) = oneshot::channel();
        if self.commands.send((cmd, tx)).await.is_err() {
            return Reply::Error(ErrorReply::new(
                ErrorCode::Internal,
                "session has shut down",
            ));
        }
        rx.await.unwrap_or_else(|_| {
            Reply::Error(ErrorReply::new(
                ErrorCode::Internal,
                "session dropped the command",
            ))
        })
    }

    pub fn subscribe(&self) -> broadcast::Receiver<ServerMessage> {
        self.telemetry.subscribe()
    }
}

struct Controller {
    run: Option<RunHandle>,
    /// State of the last run once it has been reaped.
    last: LiveState,
    /// Handovers waiting for a telemetry frame to ride on.
    pending: VecDeque<EventKind>,
    out: broadcast::Sender<ServerMessage>,
}

impl Controller {
    async fn run(mut self, mut rx: mpsc::Receiver<Request>, cadence: Duration) {
        let mut tick = tokio::time::interval(cadence);
        tick.set_missed_tick_behavior(MissedTickBehavior::Skip);
        loop {
            tokio::select! {
                req = rx.recv() => match req {
                    Some((cmd, reply)) => {
                        let r = self.handle(cmd).await;
                        let _ = reply.send(r);
                    }
                    None => break,
                },
                _ = tick.tick() => self.tick(),
            }
        }
        if let Some(h) = self.run.take() {
            h.stop();
        }
    }

    fn state(&self) -> LiveState {
        self.run
            .as_ref()
            .map_or_else(|| self.last.clone(), |h| h.state())
    }

    fn active(&self) -> Option<&RunHandle> {
        self.run.as_ref().filter(|h| !h.is_finished())
    }

    async fn handle(&mut self, cmd: Command) -> Reply {
        match cmd {
            Command::GetState => Reply::State(self.state()),
            Command::SetGain { link, gain_db } => {
                let Some(h) = self.active() else {
                    return Reply::Error(ErrorReply::new(
                        ErrorCode::NoScenario,
                        "no scenario is running",
                    ));
                };
                match h.set_gain(&link, gain_db) {
                    Ok(()) => Reply::Ack {
                        cmd: CommandKind::SetGain,
                        t_s: h.state().t_s,
                    },
                    Err(reason) => Reply::Error(ErrorReply::new(ErrorCode::UnknownLink, reason)),
                }
            }
            Command::StartScenario(s) => self.start(*s),
            Command::StopScenario => self.stop().await,
        }
    }

    fn start(&mut self, mut s: Scenario) -> Reply {
        if self.active().is_some() {
            return Reply::Error(ErrorReply::new(
                ErrorCode::Busy,
                "a scenario is already running; stop it first",
            ));
        }
        self.tick();
        // a live session is steered by people, so it always runs on the wall clock
        s.clock = ClockMode::Realtime;
        match spawn_scenario(s) {
            Ok(h) => {
                tracing::info!(links = ?h.link_ids(), "scenario started");
                self.pending.clear();
                self.run = Some(h);
                Reply::Ack {
                    cmd: CommandKind::StartScenario,
                    t_s: 0.0,
                }
            }
            Err(e) => {
                let code = if e.is_validation() {
                    ErrorCode::Invalid
                } else {
                    ErrorCode::Internal
                };
                Reply::Error(ErrorReply::new(code, e.to_string()))
            }
        }
    }

    async fn stop(&mut self) -> Reply {
        if self.active().is_none() {
            return Reply::Error(ErrorReply::new(
                ErrorCode::NoScenario,
                "no scenario is running",
            ));
        }
        let h = self.run.take().expect("active run");
        h.stop();
        let waited = tokio::task::spawn_blocking(move || {
            while !h.is_finished() {
                std::thread::sleep(Duration::from_millis(2));
            }
            h
        })
        .await;
        match waited {
            Ok(h) => {
                self.run = Some(h);
                let t_s = self.state().t_s;
                self.tick();
                Reply::Ack {
                    cmd: CommandKind::StopScenario,
                    t_s,
                }
            }
            Err(e) => Reply::Error(ErrorReply::new(ErrorCode::Internal, e.to_string())),
        }
    }

    fn publish(&self, msg: ServerMessage) {
        // no subscribers is not an error
        let _ = self.out.send(msg);
    }

    fn frame(&mut self, st: &LiveState) {
        let event = self.pending.pop_front();
        self.publish(ServerMessage::Telemetry(TelemetryFrame::from_state(
            st, event,
        )));
    }

    /// One telemetry period: forward new events, emit a frame and reap a
    /// run that has ended.
    fn tick(&mut self) {
        let Some(h) = &self.run else { return };
        let finished = h.is_finished();
        let events: Vec<NetEvent> = h.drain_events();
        let st = h.state();
        for e in &events {
            self.publish(ServerMessage::Event(EventMessage::from(e)));
            if matches!(e.event, EventKind::Handover { .. }) {
                self.pending.push_back(e.event.clone());
            }
        }
        self.frame(&st);
        if finished {
            while !self.pending.is_empty() {
                self.frame(&st);
            }
            let h = self.run.take().expect("run present");
            match h.join() {
                Ok(trace) => {
                    tracing::info!(handovers = trace.handovers().count(), status = ?st.status, "scenario ended")
                }
                Err(e) => tracing::warn!(error = %e, "scenario failed"),
            }
            self.last = st;
            if self.last.status == RunStatus::Running {
                self.last.status = RunStatus::Finished;
            }
        }
    }
}
