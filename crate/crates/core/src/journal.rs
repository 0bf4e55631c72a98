//! Append-only session journal and deterministic replay.
//!
//! On disk a journal is UTF-8 JSON lines, one event per line, named
//! `<session_id>.journal.jsonl`.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Goal, ScoreVector, ScoringSchema};
use crate::participants::{ParticipantDescriptor, ParticipantId};
use crate::plan::{Plan, Proposal};
use crate::scoring::MergeMode;
use crate::session::{Ballot, CandidateTally, Choice, Phase, SessionId, SessionState};
use crate::{Aggregate, Convergence, Weights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub session_id: SessionId,
    #[serde(with = "rfc3339")]
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub body: EventBody,
}

mod rfc3339 {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s).map(|t| t.with_timezone(&Utc)).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    SessionCreated {
        goal: Goal,
        participants: Vec<ParticipantDescriptor>,
        convergence: Convergence,
        merge_mode: MergeMode,
        ai_timeout_seconds: u64,
    },
    SchemaSet {
        schema: ScoringSchema,
    },
    WeightsSet {
        raw: [f64; 3],
        weights: Weights,
    },
    PlanDrafted {
        plan: Plan,
    },
    ScoresSubmitted {
        participant: ParticipantId,
        iteration: u64,
        scores: ScoreVector,
    },
    ScoresMerged {
        iteration: u64,
        merged: ScoreVector,
        aggregate: Aggregate,
        weights: Weights,
    },
    ProposalSubmitted {
        iteration: u64,
        proposal: Proposal,
    },
    ProposalRejected {
        participant: ParticipantId,
        iteration: u64,
        reason: String,
    },
    Abstained {
        participant: ParticipantId,
        iteration: u64,
        phase: Phase,
    },
    BallotCast {
        iteration: u64,
        ballot: Ballot,
    },
    TallyDecided {
        iteration: u64,
        winner: Choice,
        counts: Vec<CandidateTally>,
    },
    ProposalApplied {
        iteration: u64,
        winner: Choice,
        revision: u64,
        plan_hash: String,
    },
    WeightsUpdated {
        by: ParticipantId,
        raw: [f64; 3],
        weights: Weights,
    },
    WindowReset {
        from_iteration: u64,
    },
    ConvergenceDeclared {
        iteration: u64,
        deltas: Vec<f64>,
    },
    IterationCapped {
        iteration: u64,
    },
    Abandoned {
        by: ParticipantId,
        reason: String,
    },
    AdapterExchange {
        participant: ParticipantId,
        phase: Phase,
        attempt: u32,
        request: String,
        response: Option<String>,
        error: Option<String>,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionCreated { .. } => "SessionCreated",
            EventBody::SchemaSet { .. } => "SchemaSet",
            EventBody::WeightsSet { .. } => "WeightsSet",
            EventBody::PlanDrafted { .. } => "PlanDrafted",
            EventBody::ScoresSubmitted { .. } => "ScoresSubmitted",
            EventBody::ScoresMerged { .. } => "ScoresMerged",
            EventBody::ProposalSubmitted { .. } => "ProposalSubmitted",
            EventBody::ProposalRejected { .. } => "ProposalRejected",
            EventBody::Abstained { .. } => "Abstained",
            EventBody::BallotCast { .. } => "BallotCast",
            EventBody::TallyDecided { .. } => "TallyDecided",
            EventBody::ProposalApplied { .. } => "ProposalApplied",
            EventBody::WeightsUpdated { .. } => "WeightsUpdated",
            EventBody::WindowReset { .. } => "WindowReset",
            EventBody::ConvergenceDeclared { .. } => "ConvergenceDeclared",
            EventBody::IterationCapped { .. } => "IterationCapped",
            EventBody::Abandoned { .. } => "Abandoned",
            EventBody::AdapterExchange { .. } => "AdapterExchange",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            EventBody::ConvergenceDeclared { .. } | EventBody::IterationCapped { .. } | EventBody::Abandoned { .. }
        )
    }
}

/// One request/response round trip with a remote participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub participant: ParticipantId,
    pub phase: Phase,
    pub attempt: u32,
    pub request: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

/// The ordered event list with its structural invariants: dense seq from
/// zero, SessionCreated first, nothing after a terminal event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Journal {
    events: Vec<Event>,
}

impl Journal {
    pub fn new() -> Self {
        Journal::default()
    }

    pub fn from_events(events: Vec<Event>) -> Result<Self> {
        let mut journal = Journal::new();
        for e in events {
            let seq = e.seq;
            journal.append(e).map_err(|err| match err {
                Error::Terminated => Error::corruption(seq, "event after terminal phase"),
                other => other,
            })?;
        }
        Ok(journal)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn is_terminated(&self) -> bool {
        self.events.last().is_some_and(|e| e.body.is_terminal())
    }

    pub fn check_next(&self, event: &Event) -> Result<()> {
        if self.is_terminated() {
            return Err(Error::Terminated);
        }
        if event.seq != self.next_seq() {
            return Err(Error::corruption(event.seq, format!("expected seq {}, got {}", self.next_seq(), event.seq)));
        }
        match (self.events.first(), &event.body) {
            (None, EventBody::SessionCreated { .. }) => Ok(()),
            (None, _) => Err(Error::corruption(event.seq, "journal must start with SessionCreated")),
            (Some(first), _) if first.session_id != event.session_id => {
                Err(Error::corruption(event.seq, "event belongs to another session"))
            }
            (Some(_), EventBody::SessionCreated { .. }) => {
                Err(Error::corruption(event.seq, "duplicate SessionCreated"))
            }
            (Some(_), _) => Ok(()),
        }
    }

    pub(crate) fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn append(&mut self, event: Event) -> Result<()> {
        self.check_next(&event)?;
        self.events.push(event);
        Ok(())
    }
}

/// Reconstructs session state from a journal.
pub fn replay(events: &[Event]) -> Result<SessionState> {
    let first = events.first().ok_or_else(|| Error::corruption(None, "empty journal: missing SessionCreated"))?;
    Journal::from_events(events.to_vec())?;
    let mut state = SessionState::from_created(first)?;
    for event in &events[1..] {
        state.apply(event)?;
    }
    Ok(state)
}

/// Where events go to become durable.
pub trait JournalSink: Send {
    fn append(&mut self, event: &Event) -> Result<()>;
}

/// Keeps nothing beyond the session's own in-memory journal.
#[derive(Debug, Default, Clone, Copy)]
pub struct MemorySink;

impl JournalSink for MemorySink {
    fn append(&mut self, _event: &Event) -> Result<()> {
        Ok(())
    }
}

/// Appends JSON lines to a file and syncs after every event.
#[derive(Debug)]
pub struct FileSink {
    path: PathBuf,
    file: File,
}

impl FileSink {
    pub fn open(path: impl AsRef<Path>) -> Result<FileSink> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::Storage(format!("{}: {}", path.display(), e)))?;
        Ok(FileSink { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl JournalSink for FileSink {
    fn append(&mut self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_string(event).map_err(|e| Error::Storage(e.to_string()))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::Storage(format!("{}: {}", self.path.display(), e)))
    }
}

pub fn journal_file_name(session_id: &SessionId) -> String {
    format!("{}.journal.jsonl", session_id)
}

pub fn to_jsonl(events: &[Event]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("event serializes") + "\n").collect()
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::corruption(None, format!("line {}: {}", i + 1, e)))
        })
        .collect()
}

pub fn read_journal(path: impl AsRef<Path>) -> Result<Vec<Event>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Storage(format!("{}: {}", path.display(), e)))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Storage(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let event =
            serde_json::from_str(&line).map_err(|e| Error::corruption(None, format!("line {}: {}", i + 1, e)))?;
        events.push(event);
    }
    Ok(events)
}
