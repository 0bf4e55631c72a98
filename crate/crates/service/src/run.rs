//! Headless sessions: every participant is scripted, an oracle, or a
//! remote adapter, and the loop runs to the end in-process.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use indigo_core::driver::Driver;
use indigo_core::journal::{FileSink, JournalSink};
use indigo_core::participants::{OracleConfig, OracleParticipant, ParticipantId, RemoteParticipant, Role};
use indigo_core::session::SystemClock;
use indigo_core::{Error, MemorySink, Phase, Result, Session, SessionId, SessionParams};

use crate::scripted::{HumanScript, ScriptedHuman};
use crate::transport::HttpTransport;

/// A scheduled weight change, applied when `iteration` opens for scoring.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reweight {
    pub iteration: u64,
    pub by: String,
    pub weights: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_id")]
    pub session_id: String,
    pub session: SessionParams,
    /// Scripted answers for human participants.
    #[serde(default)]
    pub humans: BTreeMap<String, HumanScript>,
    /// Oracles standing in for AI participants without an adapter.
    #[serde(default)]
    pub oracles: BTreeMap<String, OracleConfig>,
    #[serde(default)]
    pub reweights: Vec<Reweight>,
    /// Where to write the journal; kept in memory when absent.
    #[serde(default)]
    pub journal: Option<PathBuf>,
}

fn default_id() -> String {
    "headless".to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub session_id: String,
    pub phase: Phase,
    pub iterations: usize,
    pub aggregates: Vec<f64>,
    pub plan_revision: u64,
    pub plan: Vec<String>,
    pub events: usize,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::Validation(format!("run config: {}", e)))
}

fn driver_for(config: &RunConfig, session: &Session) -> Result<Driver> {
    let mut driver = Driver::new();
    for p in &session.state().participants {
        let pid = p.participant_id.as_str();
        let agent: Box<dyn indigo_core::participants::Participant> = match p.role {
            Role::Human => match config.humans.get(pid) {
                Some(script) => Box::new(ScriptedHuman::new(script.clone())),
                None => return Err(Error::Validation(format!("human `{}` has no script", pid))),
            },
            Role::Ai => match (config.oracles.get(pid), &p.adapter_config) {
                (Some(_), Some(_)) => {
                    return Err(Error::Validation(format!("`{}` has both an adapter and an oracle", pid)))
                }
                (Some(o), None) => Box::new(OracleParticipant::new(o.clone())),
                (None, Some(cfg)) => {
                    Box::new(RemoteParticipant::new(p.participant_id.clone(), cfg.clone(), HttpTransport))
                }
                (None, None) => return Err(Error::Validation(format!("AI `{}` needs an oracle or an adapter", pid))),
            },
        };
        driver.insert(p.participant_id.clone(), agent);
    }
    for name in config.humans.keys().chain(config.oracles.keys()) {
        if session.state().participant(&ParticipantId::new(name.clone())).is_none() {
            return Err(Error::Validation(format!("`{}` is not in the roster", name)));
        }
    }
    Ok(driver)
}

pub fn run(config: RunConfig) -> Result<(RunSummary, Session)> {
    let probe = Session::in_memory(SessionId::new(config.session_id.clone()), config.session.clone())?;
    let mut driver = driver_for(&config, &probe)?;
    let sink: Box<dyn JournalSink> = match &config.journal {
        Some(path) => {
            if path.exists() {
                return Err(Error::Validation(format!("{} already exists", path.display())));
            }
            Box::new(FileSink::open(path)?)
        }
        None => Box::new(MemorySink),
    };
    let mut session = Session::create(
        SessionId::new(config.session_id.clone()),
        config.session.clone(),
        sink,
        Arc::new(SystemClock),
    )?;
    let mut pending: Vec<Reweight> = config.reweights.clone();
    loop {
        let state = session.state();
        if state.phase == Phase::AwaitingScores {
            let index = state.current.as_ref().map_or(0, |c| c.index);
            for r in pending.iter().filter(|r| r.iteration == index) {
                session.update_weights(&ParticipantId::new(r.by.clone()), r.weights)?;
            }
            pending.retain(|r| r.iteration != index);
        }
        if session.phase().is_terminal() {
            break;
        }
        if !driver.step(&mut session)? && !session.phase().is_terminal() {
            let who = session.state().outstanding();
            return Err(Error::Validation(format!("session stalled waiting on {:?}", who)));
        }
    }
    let state = session.state();
    let summary = RunSummary {
        session_id: state.session_id.to_string(),
        phase: state.phase,
        iterations: state.iterations.len(),
        aggregates: state.iterations.iter().map(|r| r.aggregate.0).collect(),
        plan_revision: state.plan.revision,
        plan: state.plan.texts().iter().map(|s| s.to_string()).collect(),
        events: session.events().len(),
    };
    Ok((summary, session))
}
