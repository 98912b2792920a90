use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hoemu_core::bench::{pa_sweep, parse_drive_range, sweep_csv, PaParams, Stimulus};
use hoemu_core::iqcore::{base_rate, throttle_rate};
use hoemu_core::scenario::{run_scenario, ClockMode, Scenario, ScenarioError};

use crate::protocol::{Command, Reply};
use crate::server::router;
use crate::session::{Session, DEFAULT_CADENCE};

#[derive(Debug, Parser)]
#[command(
    name = "hoemu",
    version,
    about = "Virtual RF channel emulator and S1 handover harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a scenario to completion and write its trace.
    Run(RunArgs),
    /// Serve the control API and telemetry stream.
    Serve(ServeArgs),
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Print the base and throttled sample rates for a bandwidth.
    Rates {
        #[arg(long)]
        nrb: u32,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    /// Run on the wall clock through the full sample pipeline.
    #[arg(long)]
    pub realtime: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Scenario to start as soon as the server is up.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory of static dashboard assets served at `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Telemetry period in milliseconds.
    #[arg(long, default_value_t = DEFAULT_CADENCE.as_millis() as u64)]
    pub cadence_ms: u64,
}

#[derive(Debug, Subcommand)]
pub enum BenchCmd {
    /// Drive a Rapp PA across a range of levels and tabulate ACLR, EVM and
    /// throughput.
    PaSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Drive levels in dB as `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub drives: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Saturation headroom above the first drive level.
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    pub backoff_db: f64,
    /// Rapp smoothness.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Run(a) => run(a),
        Cmd::Serve(a) => serve(a),
        Cmd::Bench(BenchCmd::PaSweep(a)) => sweep(a),
        Cmd::Rates { nrb } => {
            let base = base_rate(nrb).map_err(|e| CliError::Validation(e.to_string()))?;
            let throttle = throttle_rate(nrb).map_err(|e| CliError::Validation(e.to_string()))?;
            println!("base {}", rate_label(base));
            println!("throttle {}", rate_label(throttle));
            Ok(())
        }
    }
}

/// `30.72e6` style, the way LTE rates are usually quoted.
pub fn rate_label(hz: f64) -> String {
    format!("{}e6", hz / 1e6)
}

fn load(path: &PathBuf) -> Result<Scenario, CliError> {
    Scenario::load(path).map_err(|e| match e {
        ScenarioError::Io(io) => {
            CliError::Validation(format!("cannot read {}: {io}", path.display()))
        }
        other => other.into(),
    })
}

fn run(a: RunArgs) -> Result<(), CliError> {
    let mut s = load(&a.scenario)?;
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    if a.realtime {
        s.clock = ClockMode::Realtime;
    }
    let trace = run_scenario(&s)?;
    let events = trace.write(&a.trace).map_err(runtime_err)?;
    println!(
        "{} measurements, {} handovers; wrote {} and {}",
        trace.measurements().count(),
        trace.handovers().count(),
        a.trace.display(),
        events.display()
    );
    for (link, rate) in &trace.link_rate_hz {
        println!("{link}: {rate:.0} samples/s");
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let drives = parse_drive_range(&a.drives).map_err(|e| CliError::Validation(e.to_string()))?;
    let pa = PaParams::with_backoff(drives[0], a.backoff_db, a.p)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let rows = pa_sweep(&drives, &pa, &Stimulus::standard(a.seed)).map_err(runtime_err)?;
    let csv = sweep_csv(&rows);
    std::fs::write(&a.out, &csv).map_err(runtime_err)?;
    print!("{csv}");
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Validation(format!("bad listen address: {e}")))?;
    let initial = a.scenario.as_ref().map(load).transpose()?;
    if let Some(s) = &initial {
        s.validate()?;
    }
    if a.cadence_ms == 0 {
        return Err(CliError::Validation("cadence must be > 0 ms".into()));
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime_err)?;
    rt.block_on(async move {
        let session = Session::spawn(Duration::from_millis(a.cadence_ms));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(runtime_err)?;
        println!(
            "listening on http://{}",
            listener.local_addr().map_err(runtime_err)?
        );
        if let Some(s) = initial {
            if let Reply::Error(e) = session.execute(Command::StartScenario(Box::new(s))).await {
                return Err(CliError::Runtime(e.reason));
            }
        }
        axum::serve(listener, router(session, a.assets))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(runtime_err)
    })
}
