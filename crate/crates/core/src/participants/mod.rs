//! Who takes part in a session and how automated participants decide.

mod adapter;
mod grammar;
mod oracle;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::journal::Exchange;
use crate::model::ScoreVector;
use crate::plan::ProposalDraft;
use crate::session::{Choice, SessionState};

pub use adapter::{AdapterConfig, RemoteParticipant, Transport};
pub use grammar::{parse_response, render_ballot, render_proposal, render_scores, ParsedResponse};
pub use oracle::{oracle_propose, oracle_score, OracleConfig, OracleParticipant, ProposalPolicy};
pub use prompt::build_prompt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(s: impl Into<String>) -> Self {
        ParticipantId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Human,
    Ai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Scorer,
    Proposer,
    Voter,
}

impl Capability {
    pub const ALL: [Capability; 3] = [Capability::Scorer, Capability::Proposer, Capability::Voter];
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Capability::Scorer => "scorer",
            Capability::Proposer => "proposer",
            Capability::Voter => "voter",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantDescriptor {
    pub participant_id: ParticipantId,
    pub role: Role,
    pub capabilities: Vec<Capability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter_config: Option<AdapterConfig>,
}

impl ParticipantDescriptor {
    pub fn human(id: &str, capabilities: &[Capability]) -> Self {
        ParticipantDescriptor {
            participant_id: ParticipantId::new(id),
            role: Role::Human,
            capabilities: capabilities.to_vec(),
            adapter_config: None,
        }
    }

    pub fn ai(id: &str, capabilities: &[Capability]) -> Self {
        ParticipantDescriptor {
            participant_id: ParticipantId::new(id),
            role: Role::Ai,
            capabilities: capabilities.to_vec(),
            adapter_config: None,
        }
    }

    pub fn with_adapter(mut self, config: AdapterConfig) -> Self {
        self.adapter_config = Some(config);
        self
    }

    pub fn has(&self, cap: Capability) -> bool {
        self.capabilities.contains(&cap)
    }

    pub fn validate(&self) -> Result<()> {
        if self.participant_id.0.trim().is_empty() || self.participant_id.0.contains(char::is_whitespace) {
            return Err(Error::validation("participant ids must be nonempty and contain no whitespace"));
        }
        if self.capabilities.is_empty() {
            return Err(Error::validation(format!("`{}` has no capabilities", self.participant_id)));
        }
        if self.role == Role::Human && self.adapter_config.is_some() {
            return Err(Error::validation(format!("human `{}` cannot carry an adapter config", self.participant_id)));
        }
        if let Some(cfg) = &self.adapter_config {
            cfg.validate()?;
        }
        Ok(())
    }
}

/// What an automated participant chose to do in a phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision<T> {
    Act(T),
    Abstain,
}

/// The score / propose / vote contract. Implementations read the session
/// snapshot and never mutate it; the driver feeds their decisions back
/// through the session's commands.
pub trait Participant: Send {
    fn score(&mut self, state: &SessionState) -> Decision<ScoreVector>;
    fn propose(&mut self, state: &SessionState) -> Decision<ProposalDraft>;
    fn vote(&mut self, state: &SessionState) -> Decision<Choice>;

    /// Remote round trips made since the last call, for the audit log.
    fn take_exchanges(&mut self) -> Vec<Exchange> {
        Vec::new()
    }
}
