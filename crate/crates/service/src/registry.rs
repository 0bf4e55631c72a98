//! Hosts live sessions for the HTTP API.
//!
//! Every session has one writer (an async mutex around the engine) and a
//! watch channel carrying immutable snapshots for readers. A supervisor
//! task per session lets engine-held AI participants act and expires
//! them when the phase timer runs out.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex, RwLock};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex};
use tokio::time::Instant;

use indigo_core::driver::{self, Action};
use indigo_core::journal::{journal_file_name, read_journal, FileSink, JournalSink};
use indigo_core::participants::{OracleConfig, OracleParticipant, Participant, ParticipantId, RemoteParticipant, Role};
use indigo_core::session::SystemClock;
use indigo_core::{Error, Event, MemorySink, Phase, Result, Session, SessionId, SessionParams, SessionState};

use crate::transport::HttpTransport;

/// What readers see: a consistent state and the journal prefix behind it.
#[derive(Debug)]
pub struct Snapshot {
    pub state: SessionState,
    pub events: Vec<Event>,
}

type Agent = Arc<StdMutex<Box<dyn Participant>>>;

pub struct Hosted {
    pub id: SessionId,
    writer: Mutex<Session>,
    snapshot: watch::Sender<Arc<Snapshot>>,
    tokens: HashMap<String, ParticipantId>,
    agents: BTreeMap<ParticipantId, Agent>,
}

impl Hosted {
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.borrow().clone()
    }

    pub fn subscribe(&self) -> watch::Receiver<Arc<Snapshot>> {
        self.snapshot.subscribe()
    }

    /// The participant a bearer token belongs to.
    pub fn authenticate(&self, token: Option<&str>) -> Result<ParticipantId> {
        token
            .and_then(|t| self.tokens.get(t))
            .cloned()
            .ok_or_else(|| Error::Authorization("missing or unknown session token".into()))
    }

    fn publish(&self, session: &Session) {
        self.snapshot
            .send_replace(Arc::new(Snapshot { state: session.state().clone(), events: session.events().to_vec() }));
    }

    /// Runs a command under the session's single writer, then lets any due
    /// automatic step happen and publishes the result.
    pub async fn command<T>(&self, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let mut session = self.writer.lock().await;
        let out = f(&mut session);
        let advanced = session.advance();
        self.publish(&session);
        let value = out?;
        advanced?;
        Ok(value)
    }
}

/// Request body for creating a session.
#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(flatten)]
    pub params: SessionParams,
    /// Scripted oracles standing in for AI participants, keyed by participant id.
    #[serde(default)]
    pub oracles: BTreeMap<String, OracleConfig>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Sidecar {
    tokens: BTreeMap<String, String>,
    #[serde(default)]
    oracles: BTreeMap<String, OracleConfig>,
}

#[derive(Default)]
pub struct Registry {
    sessions: RwLock<HashMap<String, Arc<Hosted>>>,
    data_dir: Option<PathBuf>,
}

fn new_token() -> String {
    let bytes: [u8; 16] = rand::rng().random();
    bytes.iter().map(|b| format!("{:02x}", b)).collect()
}

fn check_session_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Validation("session ids use 1 to 64 characters from [A-Za-z0-9_-]".into()))
    }
}

fn sidecar_path(dir: &Path, id: &SessionId) -> PathBuf {
    dir.join(format!("{}.server.json", id))
}

fn build_agents(
    state: &SessionState,
    oracles: &BTreeMap<String, OracleConfig>,
) -> Result<BTreeMap<ParticipantId, Agent>> {
    let mut agents: BTreeMap<ParticipantId, Agent> = BTreeMap::new();
    for (pid, cfg) in oracles {
        let pid = ParticipantId::new(pid.clone());
        match state.participant(&pid) {
            Some(p) if p.role == Role::Ai && p.adapter_config.is_none() => {}
            Some(p) if p.role == Role::Ai => {
                return Err(Error::Validation(format!("`{}` has both an adapter and an oracle", pid)))
            }
            Some(_) => return Err(Error::Validation(format!("oracle `{}` must be an AI participant", pid))),
            None => return Err(Error::Validation(format!("oracle `{}` is not in the roster", pid))),
        }
        agents.insert(pid, Arc::new(StdMutex::new(Box::new(OracleParticipant::new(cfg.clone())))));
    }
    for p in &state.participants {
        if let Some(cfg) = &p.adapter_config {
            let remote = RemoteParticipant::new(p.participant_id.clone(), cfg.clone(), HttpTransport);
            agents.insert(p.participant_id.clone(), Arc::new(StdMutex::new(Box::new(remote))));
        }
    }
    Ok(agents)
}

impl Registry {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Registry { sessions: RwLock::default(), data_dir }
    }

    pub fn get(&self, id: &str) -> Result<Arc<Hosted>> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("session `{}`", id)))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Opens a session and returns it with one token per participant.
    pub fn create(&self, req: CreateRequest) -> Result<(Arc<Hosted>, BTreeMap<String, String>)> {
        let id = match req.session_id {
            Some(id) => id,
            None => format!("s-{}", &new_token()[..12]),
        };
        check_session_id(&id)?;
        let id = SessionId::new(id);
        if self.sessions.read().expect("registry lock").contains_key(id.as_str()) {
            return Err(Error::Conflict(format!("session `{}` already exists", id)));
        }
        // validate the roster before anything touches disk
        let probe = Session::in_memory(id.clone(), req.params.clone())?;
        build_agents(probe.state(), &req.oracles)?;

        let sink: Box<dyn JournalSink> = match &self.data_dir {
            Some(dir) => {
                let path = dir.join(journal_file_name(&id));
                if path.exists() {
                    return Err(Error::Conflict(format!("session `{}` already exists", id)));
                }
                std::fs::create_dir_all(dir).map_err(|e| Error::Storage(e.to_string()))?;
                Box::new(FileSink::open(path)?)
            }
            None => Box::new(MemorySink),
        };
        let session = Session::create(id.clone(), req.params, sink, Arc::new(SystemClock))?;
        let tokens: BTreeMap<String, String> =
            session.state().participants.iter().map(|p| (p.participant_id.to_string(), new_token())).collect();
        if let Some(dir) = &self.data_dir {
            let sidecar = Sidecar { tokens: tokens.clone(), oracles: req.oracles.clone() };
            let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
            std::fs::write(sidecar_path(dir, &id), text).map_err(|e| Error::Storage(e.to_string()))?;
        }
        let hosted = self.host(session, &tokens, &req.oracles)?;
        Ok((hosted, tokens))
    }

    fn host(
        &self,
        session: Session,
        tokens: &BTreeMap<String, String>,
        oracles: &BTreeMap<String, OracleConfig>,
    ) -> Result<Arc<Hosted>> {
        let agents = build_agents(session.state(), oracles)?;
        let (tx, _) =
            watch::channel(Arc::new(Snapshot { state: session.state().clone(), events: session.events().to_vec() }));
        let hosted = Arc::new(Hosted {
            id: session.id().clone(),
            writer: Mutex::new(session),
            snapshot: tx,
            tokens: tokens.iter().map(|(pid, t)| (t.clone(), ParticipantId::new(pid.clone()))).collect(),
            agents,
        });
        self.sessions.write().expect("registry lock").insert(hosted.id.to_string(), hosted.clone());
        tokio::spawn(supervise(hosted.clone()));
        Ok(hosted)
    }

    /// Resumes every journal in the data directory. Journals that fail to
    /// replay are reported and skipped.
    pub fn load(&self) -> Vec<(PathBuf, Error)> {
        let mut failures = Vec::new();
        let Some(dir) = self.data_dir.clone() else { return failures };
        let Ok(entries) = std::fs::read_dir(&dir) else { return failures };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".journal.jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            if let Err(e) = self.load_one(&dir, &path) {
                failures.push((path, e));
            }
        }
        failures
    }

    fn load_one(&self, dir: &Path, path: &Path) -> Result<()> {
        let events = read_journal(path)?;
        let session = Session::resume(events, Box::new(FileSink::open(path)?), Arc::new(SystemClock))?;
        let sidecar: Sidecar = match std::fs::read_to_string(sidecar_path(dir, session.id())) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Storage(e.to_string()))?,
            Err(_) => Sidecar::default(),
        };
        self.host(session, &sidecar.tokens, &sidecar.oracles)?;
        Ok(())
    }
}

fn phase_key(state: &SessionState) -> (u64, Phase) {
    (state.current.as_ref().map_or(0, |c| c.index), state.phase)
}

async fn sleep_until(deadline: Option<Instant>) {
    match deadline {
        Some(d) => tokio::time::sleep_until(d).await,
        None => std::future::pending().await,
    }
}

/// Expires outstanding AI participants if the phase has not moved on.
async fn expire(hosted: &Hosted, key: (u64, Phase)) {
    let _ = hosted
        .command(|s| {
            if phase_key(s.state()) == key {
                s.expire_ai()?;
            }
            Ok(())
        })
        .await;
}

async fn supervise(hosted: Arc<Hosted>) {
    let mut rx = hosted.subscribe();
    let mut key = None;
    let mut deadline: Option<Instant> = None;
    loop {
        let snap = rx.borrow_and_update().clone();
        let state = &snap.state;
        if state.phase.is_terminal() {
            return;
        }
        let k = phase_key(state);
        let outstanding = state.outstanding();
        if key != Some(k) {
            key = Some(k);
            let waiting_on_ai = outstanding.iter().any(|p| state.participant(p).is_some_and(|d| d.role == Role::Ai));
            deadline = waiting_on_ai.then(|| Instant::now() + Duration::from_secs(state.ai_timeout_seconds));
        }

        let due = outstanding.into_iter().find(|p| hosted.agents.contains_key(p));
        if let Some(pid) = due {
            let agent = hosted.agents[&pid].clone();
            let view = state.clone();
            let job = tokio::task::spawn_blocking(move || {
                let mut agent = agent.lock().expect("agent lock");
                let action = driver::ask(agent.as_mut(), &view);
                (action, agent.take_exchanges())
            });
            tokio::select! {
                done = job => {
                    let Ok((action, exchanges)) = done else { continue };
                    let result = hosted.command(|s| {
                        if phase_key(s.state()) != k || !s.state().outstanding().contains(&pid) {
                            return Ok(());
                        }
                        for ex in exchanges {
                            s.record_exchange(ex)?;
                        }
                        driver::submit(s, &pid, action.unwrap_or(Action::Abstain))
                    }).await;
                    if let Err(e) = result {
                        eprintln!("session {}: {} could not act: {}", hosted.id, pid, e);
                        let _ = hosted.command(|s| s.abstain(&pid)).await;
                    }
                }
                _ = sleep_until(deadline) => {
                    expire(&hosted, k).await;
                    deadline = None;
                }
            }
            continue;
        }

        tokio::select! {
            changed = rx.changed() => {
                if changed.is_err() {
                    return;
                }
            }
            _ = sleep_until(deadline) => {
                expire(&hosted, k).await;
                deadline = None;
            }
        }
    }
}
