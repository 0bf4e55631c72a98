//! Vendor-neutral adapter for a remote text model.
//!
//! The model sees a prompt built from the session snapshot and must reply
//! in the response grammar. Unparseable replies are retried with a
//! corrective preamble up to `max_retries` times; after that the
//! participant abstains for the phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::journal::Exchange;
use crate::model::ScoreVector;
use crate::plan::ProposalDraft;
use crate::session::{Choice, Phase, SessionState};

use super::grammar::{parse_response, ParsedResponse};
use super::prompt::build_prompt;
use super::{Decision, Participant, ParticipantId};

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub endpoint_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
}

impl AdapterConfig {
    pub fn new(endpoint_url: impl Into<String>) -> Self {
        AdapterConfig {
            endpoint_url: endpoint_url.into(),
            auth_header: None,
            model_name: String::new(),
            max_retries: default_retries(),
            timeout_seconds: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.trim().is_empty() {
            return Err(Error::validation("adapter endpoint_url must not be empty"));
        }
        Ok(())
    }
}

/// One request/response round trip. Implementations apply the configured
/// auth header verbatim and honor `timeout_seconds`.
pub trait Transport: Send {
    fn send(&self, config: &AdapterConfig, body: &str) -> Result<String>;
}

impl<F> Transport for F
where
    F: Fn(&AdapterConfig, &str) -> Result<String> + Send,
{
    fn send(&self, config: &AdapterConfig, body: &str) -> Result<String> {
        self(config, body)
    }
}

pub struct RemoteParticipant<T> {
    id: ParticipantId,
    config: AdapterConfig,
    transport: T,
    exchanges: Vec<Exchange>,
}

impl<T: Transport> RemoteParticipant<T> {
    pub fn new(id: ParticipantId, config: AdapterConfig, transport: T) -> Self {
        RemoteParticipant { id, config, transport, exchanges: Vec::new() }
    }

    /// Asks the model until a reply parses or retries run out.
    fn ask(&mut self, state: &SessionState) -> Option<ParsedResponse> {
        let phase = state.phase;
        let proposals = state.current_iteration().map(|c| c.proposals.as_slice()).unwrap_or(&[]);
        let prompt = build_prompt(&state.goal, state.schema(), state.weights(), &state.plan, phase, proposals);
        let mut request = prompt.clone();
        for attempt in 0..=self.config.max_retries {
            let outcome = self.transport.send(&self.config, &request);
            let (response, parsed) = match outcome {
                Ok(text) => {
                    let parsed = parse_response(&text, phase, &state.plan);
                    (Some(text), parsed)
                }
                Err(e) => (None, Err(e)),
            };
            self.exchanges.push(Exchange {
                participant: self.id.clone(),
                phase,
                attempt,
                request: request.clone(),
                response,
                error: parsed.as_ref().err().map(|e| e.to_string()),
            });
            match parsed {
                Ok(p) => return Some(p),
                Err(e) => {
                    request = corrective(&e, &prompt);
                }
            }
        }
        None
    }
}

fn corrective(error: &Error, prompt: &str) -> String {
    format!(
        "Your previous reply could not be used ({}). Reply again using only the lines described below.\n\n{}",
        error, prompt
    )
}

impl<T: Transport> Participant for RemoteParticipant<T> {
    fn score(&mut self, state: &SessionState) -> Decision<ScoreVector> {
        match self.ask(state) {
            Some(ParsedResponse::Scores(s)) if state.phase == Phase::AwaitingScores => Decision::Act(s),
            _ => Decision::Abstain,
        }
    }

    fn propose(&mut self, state: &SessionState) -> Decision<ProposalDraft> {
        match self.ask(state) {
            Some(ParsedResponse::Proposal(p)) => Decision::Act(p),
            _ => Decision::Abstain,
        }
    }

    fn vote(&mut self, state: &SessionState) -> Decision<Choice> {
        match self.ask(state) {
            Some(ParsedResponse::Ballot(c)) => Decision::Act(c),
            _ => Decision::Abstain,
        }
    }

    fn take_exchanges(&mut self) -> Vec<Exchange> {
        std::mem::take(&mut self.exchanges)
    }
}
