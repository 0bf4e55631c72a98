//! The optimization loop as an event-sourced state machine.
//!
//! Each iteration moves through `awaiting_scores -> awaiting_proposals ->
//! awaiting_votes -> applying` and then either starts the next iteration or
//! ends the session. [`SessionState`] changes only by folding journal
//! events through [`SessionState::apply`]; [`Session`] validates commands
//! and turns them into events.

mod engine;
mod tally;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::journal::{Event, EventBody};
use crate::model::{Goal, ScoreVector, ScoringSchema};
use crate::participants::{Capability, ParticipantDescriptor, ParticipantId, Role};
use crate::plan::{apply_proposal, Plan, Proposal, ProposalId};
use crate::scoring::{aggregate_score, check_convergence, merge_participant_scores, ConvergenceStatus, MergeMode};
use crate::{Aggregate, Convergence, Weights};

pub use engine::{Clock, FixedClock, Session, SessionParams, SystemClock};
pub use tally::{gain_key, tally, tally_counts, CandidateTally};

pub const HOLD_STEADY: &str = "HOLD_STEADY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Drafting,
    AwaitingScores,
    AwaitingProposals,
    AwaitingVotes,
    Applying,
    Converged,
    IterationCapped,
    Abandoned,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Drafting,
        Phase::AwaitingScores,
        Phase::AwaitingProposals,
        Phase::AwaitingVotes,
        Phase::Applying,
        Phase::Converged,
        Phase::IterationCapped,
        Phase::Abandoned,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Converged | Phase::IterationCapped | Phase::Abandoned)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Drafting => "drafting",
            Phase::AwaitingScores => "awaiting_scores",
            Phase::AwaitingProposals => "awaiting_proposals",
            Phase::AwaitingVotes => "awaiting_votes",
            Phase::Applying => "applying",
            Phase::Converged => "converged",
            Phase::IterationCapped => "iteration_capped",
            Phase::Abandoned => "abandoned",
        }
    }

    /// The capability a participant needs to act in this phase, if any.
    pub fn required_capability(self) -> Option<Capability> {
        match self {
            Phase::AwaitingScores => Some(Capability::Scorer),
            Phase::AwaitingProposals => Some(Capability::Proposer),
            Phase::AwaitingVotes => Some(Capability::Voter),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    HoldSteady,
    Proposal(ProposalId),
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::HoldSteady => f.write_str(HOLD_STEADY),
            Choice::Proposal(id) => f.write_str(id.as_str()),
        }
    }
}

impl FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.contains(char::is_whitespace) {
            return Err(Error::validation(format!("`{}` is not a ballot choice", s)));
        }
        Ok(if s == HOLD_STEADY { Choice::HoldSteady } else { Choice::Proposal(ProposalId(s.to_string())) })
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: ParticipantId,
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSubmission {
    pub participant: ParticipantId,
    pub scores: ScoreVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abstention {
    pub participant: ParticipantId,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub participant: ParticipantId,
    pub reason: String,
}

/// The iteration currently being worked through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationProgress {
    pub index: u64,
    pub plan_revision: u64,
    pub submissions: Vec<ScoreSubmission>,
    pub merged_scores: Option<ScoreVector>,
    pub aggregate: Option<Aggregate>,
    pub weights_in_effect: Option<Weights>,
    pub proposals: Vec<Proposal>,
    pub rejections: Vec<Rejection>,
    pub ballots: Vec<Ballot>,
    pub abstentions: Vec<Abstention>,
    pub winner: Option<Choice>,
}

impl IterationProgress {
    fn open(index: u64, plan_revision: u64) -> Self {
        IterationProgress {
            index,
            plan_revision,
            submissions: Vec::new(),
            merged_scores: None,
            aggregate: None,
            weights_in_effect: None,
            proposals: Vec::new(),
            rejections: Vec::new(),
            ballots: Vec::new(),
            abstentions: Vec::new(),
            winner: None,
        }
    }

    fn abstained(&self, pid: &ParticipantId, phase: Phase) -> bool {
        self.abstentions.iter().any(|a| &a.participant == pid && a.phase == phase)
    }

    pub fn proposal(&self, id: &ProposalId) -> Option<&Proposal> {
        self.proposals.iter().find(|p| &p.proposal_id == id)
    }
}

/// One finished score -> propose -> vote -> apply cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u64,
    /// Revision of the plan that was scored.
    pub plan_revision: u64,
    pub submissions: Vec<ScoreSubmission>,
    pub merged_scores: ScoreVector,
    pub aggregate: Aggregate,
    pub weights_in_effect: Weights,
    /// `None` when HOLD_STEADY won.
    pub winning_proposal: Option<ProposalId>,
    pub proposals: Vec<Proposal>,
    pub ballots: Vec<Ballot>,
    pub abstentions: Vec<Abstention>,
    /// Revision after the winning move was applied.
    pub resulting_revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn new(s: impl Into<String>) -> Self {
        SessionId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: SessionId,
    pub created_at: DateTime<Utc>,
    pub goal: Goal,
    pub schema: Option<ScoringSchema>,
    pub weights: Option<Weights>,
    pub plan: Plan,
    pub phase: Phase,
    pub iterations: Vec<IterationRecord>,
    pub current: Option<IterationProgress>,
    pub convergence: Convergence,
    pub merge_mode: MergeMode,
    pub participants: Vec<ParticipantDescriptor>,
    pub ai_timeout_seconds: u64,
    /// First iteration index whose aggregate counts toward convergence.
    pub window_start: u64,
    pub last_status: Option<ConvergenceStatus<f64>>,
    pub abandon_reason: Option<String>,
    pub last_seq: u64,
}

impl SessionState {
    pub fn schema(&self) -> &ScoringSchema {
        self.schema.as_ref().expect("schema is set before the loop starts")
    }

    pub fn weights(&self) -> &Weights {
        self.weights.as_ref().expect("weights are set before the loop starts")
    }

    pub fn participant(&self, pid: &ParticipantId) -> Option<&ParticipantDescriptor> {
        self.participants.iter().find(|p| &p.participant_id == pid)
    }

    pub fn current_iteration(&self) -> Option<&IterationProgress> {
        self.current.as_ref()
    }

    /// Aggregates in the current convergence window, oldest first.
    pub fn window_history(&self) -> Vec<Aggregate> {
        self.iterations.iter().filter(|r| r.index >= self.window_start).map(|r| r.aggregate).collect()
    }

    /// Participants still expected to act in the current phase.
    pub fn outstanding(&self) -> Vec<ParticipantId> {
        let (Some(cur), Some(cap)) = (&self.current, self.phase.required_capability()) else {
            return Vec::new();
        };
        self.participants
            .iter()
            .filter(|p| p.has(cap))
            .map(|p| &p.participant_id)
            .filter(|pid| !cur.abstained(pid, self.phase))
            .filter(|pid| match self.phase {
                Phase::AwaitingScores => !cur.submissions.iter().any(|s| &s.participant == *pid),
                Phase::AwaitingProposals => !cur.proposals.iter().any(|p| &p.author == *pid),
                Phase::AwaitingVotes => !cur.ballots.iter().any(|b| &b.voter == *pid),
                _ => false,
            })
            .cloned()
            .collect()
    }

    fn current_mut(&mut self) -> Result<&mut IterationProgress> {
        self.current.as_mut().ok_or_else(|| Error::corruption(None, "no iteration in progress"))
    }

    fn expect_iteration(&self, iteration: u64) -> Result<()> {
        match &self.current {
            Some(c) if c.index == iteration => Ok(()),
            _ => Err(Error::validation(format!("iteration {} is not in progress", iteration))),
        }
    }

    fn require_phase(&self, op: &'static str, allowed: &[Phase]) -> Result<()> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            Err(Error::Phase { op, phase: self.phase })
        }
    }

    fn require_capability(&self, pid: &ParticipantId, cap: Capability) -> Result<&ParticipantDescriptor> {
        let p = self.participant(pid).ok_or_else(|| Error::Authorization(format!("`{}` is not a participant", pid)))?;
        if !p.has(cap) {
            return Err(Error::Authorization(format!("`{}` lacks the {} capability", pid, cap)));
        }
        Ok(p)
    }

    fn require_human(&self, pid: &ParticipantId, what: &str) -> Result<()> {
        match self.participant(pid) {
            Some(p) if p.role == Role::Human => Ok(()),
            Some(_) => Err(Error::Authorization(format!("only a human participant may {}", what))),
            None => Err(Error::Authorization(format!("`{}` is not a participant", pid))),
        }
    }

    pub(crate) fn check_scores(&self, pid: &ParticipantId) -> Result<()> {
        self.require_phase("submit_scores", &[Phase::AwaitingScores])?;
        self.require_capability(pid, Capability::Scorer)?;
        let cur = self.current.as_ref().expect("iteration open while awaiting scores");
        if cur.submissions.iter().any(|s| &s.participant == pid) || cur.abstained(pid, self.phase) {
            return Err(Error::Conflict(format!("`{}` already scored this iteration", pid)));
        }
        Ok(())
    }

    pub(crate) fn check_proposal(&self, pid: &ParticipantId) -> Result<()> {
        self.require_phase("submit_proposal", &[Phase::AwaitingProposals])?;
        self.require_capability(pid, Capability::Proposer)?;
        let cur = self.current.as_ref().expect("iteration open while awaiting proposals");
        if cur.proposals.iter().any(|p| &p.author == pid) || cur.abstained(pid, self.phase) {
            return Err(Error::Conflict(format!("`{}` already proposed this iteration", pid)));
        }
        Ok(())
    }

    pub(crate) fn check_ballot(&self, pid: &ParticipantId, choice: &Choice) -> Result<()> {
        self.require_phase("cast_ballot", &[Phase::AwaitingVotes])?;
        self.require_capability(pid, Capability::Voter)?;
        let cur = self.current.as_ref().expect("iteration open while awaiting votes");
        if cur.ballots.iter().any(|b| &b.voter == pid) || cur.abstained(pid, self.phase) {
            return Err(Error::Conflict(format!("`{}` already voted this iteration", pid)));
        }
        if let Choice::Proposal(id) = choice {
            if cur.proposal(id).is_none() {
                return Err(Error::validation(format!("no proposal `{}` in this iteration", id)));
            }
        }
        Ok(())
    }

    pub(crate) fn check_abstain(&self, pid: &ParticipantId) -> Result<()> {
        self.require_phase("abstain", &[Phase::AwaitingScores, Phase::AwaitingProposals, Phase::AwaitingVotes])?;
        let cap = self.phase.required_capability().expect("acting phase");
        let p = self.require_capability(pid, cap)?;
        if p.role == Role::Human && self.phase != Phase::AwaitingProposals {
            return Err(Error::Authorization(format!("a human participant cannot abstain in {}", self.phase)));
        }
        if !self.outstanding().contains(pid) {
            return Err(Error::Conflict(format!("`{}` has already acted in {}", pid, self.phase)));
        }
        Ok(())
    }

    pub(crate) fn check_update_weights(&self, pid: &ParticipantId) -> Result<()> {
        self.require_phase("update_weights", &[Phase::AwaitingScores, Phase::AwaitingProposals])?;
        self.require_human(pid, "update weights")
    }

    pub(crate) fn check_abandon(&self, pid: &ParticipantId) -> Result<()> {
        if self.phase.is_terminal() {
            return Err(Error::Phase { op: "abandon", phase: self.phase });
        }
        self.require_human(pid, "abandon the session")
    }

    pub(crate) fn check_apply(&self) -> Result<()> {
        self.require_phase("apply_winning", &[Phase::Applying])
    }

    /// Score submissions that feed the merge under the session's merge mode.
    pub(crate) fn merge_inputs(&self) -> Vec<ScoreVector> {
        let Some(cur) = &self.current else { return Vec::new() };
        let human: Vec<ScoreVector> = cur
            .submissions
            .iter()
            .filter(|s| self.participant(&s.participant).is_some_and(|p| p.role == Role::Human))
            .map(|s| s.scores)
            .collect();
        match self.merge_mode {
            MergeMode::HumanOverride if !human.is_empty() => human,
            _ => cur.submissions.iter().map(|s| s.scores).collect(),
        }
    }

    pub(crate) fn from_created(event: &Event) -> Result<SessionState> {
        let EventBody::SessionCreated { goal, participants, convergence, merge_mode, ai_timeout_seconds } = &event.body
        else {
            return Err(Error::corruption(event.seq, "first event must be SessionCreated"));
        };
        if event.seq != 0 {
            return Err(Error::corruption(event.seq, "SessionCreated must have seq 0"));
        }
        Ok(SessionState {
            session_id: event.session_id.clone(),
            created_at: event.ts,
            goal: goal.clone(),
            schema: None,
            weights: None,
            plan: Plan::draft::<&str>(&[])?,
            phase: Phase::Drafting,
            iterations: Vec::new(),
            current: None,
            convergence: *convergence,
            merge_mode: *merge_mode,
            participants: participants.clone(),
            ai_timeout_seconds: *ai_timeout_seconds,
            window_start: 1,
            last_status: None,
            abandon_reason: None,
            last_seq: 0,
        })
    }

    /// Folds one event into the state. Any event that could not have been
    /// produced by a valid command is reported as corruption at its seq.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        if event.session_id != self.session_id {
            return Err(Error::corruption(event.seq, "event belongs to another session"));
        }
        if event.seq != self.last_seq + 1 {
            return Err(Error::corruption(event.seq, format!("expected seq {}", self.last_seq + 1)));
        }
        if self.phase.is_terminal() {
            return Err(Error::corruption(event.seq, "event after terminal phase"));
        }
        self.apply_body(&event.body).map_err(|e| match e {
            Error::Corruption { message, .. } => Error::corruption(event.seq, message),
            other => Error::corruption(event.seq, other.to_string()),
        })?;
        self.last_seq = event.seq;
        Ok(())
    }

    fn apply_body(&mut self, body: &EventBody) -> Result<()> {
        match body {
            EventBody::SessionCreated { .. } => {
                return Err(Error::corruption(None, "duplicate SessionCreated"));
            }
            EventBody::SchemaSet { schema } => {
                self.require_phase("set_schema", &[Phase::Drafting])?;
                self.schema = Some(schema.clone());
            }
            EventBody::WeightsSet { weights, .. } => {
                self.require_phase("set_weights", &[Phase::Drafting])?;
                self.weights = Some(*weights);
            }
            EventBody::PlanDrafted { plan } => {
                self.require_phase("draft_plan", &[Phase::Drafting])?;
                if self.schema.is_none() || self.weights.is_none() {
                    return Err(Error::corruption(None, "plan drafted before schema and weights"));
                }
                if plan.revision != 0 || plan.items.is_empty() {
                    return Err(Error::corruption(None, "initial plan must be a nonempty revision 0"));
                }
                self.plan = plan.clone();
                self.phase = Phase::AwaitingScores;
                self.current = Some(IterationProgress::open(1, 0));
            }
            EventBody::ScoresSubmitted { participant, iteration, scores } => {
                self.expect_iteration(*iteration)?;
                self.check_scores(participant)?;
                let cur = self.current_mut()?;
                cur.submissions.push(ScoreSubmission { participant: participant.clone(), scores: *scores });
            }
            EventBody::ScoresMerged { iteration, merged, aggregate, weights } => {
                self.expect_iteration(*iteration)?;
                self.require_phase("merge_scores", &[Phase::AwaitingScores])?;
                if !self.outstanding().is_empty() {
                    return Err(Error::corruption(None, "scores merged with scorers outstanding"));
                }
                let expected = merge_participant_scores(&self.merge_inputs())?;
                if &expected != merged || weights != self.weights() {
                    return Err(Error::corruption(None, "merged scores disagree with submissions"));
                }
                if aggregate_score(merged, weights) != *aggregate {
                    return Err(Error::corruption(None, "aggregate disagrees with merged scores"));
                }
                let cur = self.current_mut()?;
                cur.merged_scores = Some(*merged);
                cur.aggregate = Some(*aggregate);
                cur.weights_in_effect = Some(*weights);
                self.phase = Phase::AwaitingProposals;
            }
            EventBody::ProposalSubmitted { iteration, proposal } => {
                self.expect_iteration(*iteration)?;
                self.check_proposal(&proposal.author)?;
                apply_proposal(&self.plan, &proposal.edits)?;
                let cur = self.current_mut()?;
                if cur.proposal(&proposal.proposal_id).is_some() {
                    return Err(Error::corruption(None, "duplicate proposal id"));
                }
                cur.proposals.push(proposal.clone());
                self.maybe_open_voting();
            }
            EventBody::ProposalRejected { participant, iteration, reason } => {
                self.expect_iteration(*iteration)?;
                self.check_proposal(participant)?;
                self.current_mut()?
                    .rejections
                    .push(Rejection { participant: participant.clone(), reason: reason.clone() });
            }
            EventBody::Abstained { participant, iteration, phase } => {
                self.expect_iteration(*iteration)?;
                if *phase != self.phase {
                    return Err(Error::corruption(None, "abstention recorded for another phase"));
                }
                self.check_abstain(participant)?;
                let phase = self.phase;
                self.current_mut()?.abstentions.push(Abstention { participant: participant.clone(), phase });
                if phase == Phase::AwaitingProposals {
                    self.maybe_open_voting();
                }
            }
            EventBody::BallotCast { iteration, ballot } => {
                self.expect_iteration(*iteration)?;
                self.check_ballot(&ballot.voter, &ballot.choice)?;
                self.current_mut()?.ballots.push(ballot.clone());
            }
            EventBody::TallyDecided { iteration, winner, .. } => {
                self.expect_iteration(*iteration)?;
                let cur = self.current.as_ref().expect("iteration checked");
                let expected = match self.phase {
                    Phase::AwaitingProposals if cur.proposals.is_empty() && self.outstanding().is_empty() => {
                        Choice::HoldSteady
                    }
                    Phase::AwaitingVotes if self.outstanding().is_empty() => {
                        tally(&cur.proposals, &cur.ballots, self.weights())
                    }
                    _ => return Err(Error::corruption(None, format!("tally not due in {}", self.phase))),
                };
                if &expected != winner {
                    return Err(Error::corruption(None, "recorded winner disagrees with the ballots"));
                }
                self.current_mut()?.winner = Some(winner.clone());
                self.phase = Phase::Applying;
            }
            EventBody::ProposalApplied { iteration, winner, revision, plan_hash } => {
                self.expect_iteration(*iteration)?;
                self.check_apply()?;
                let cur = self.current.take().expect("iteration checked");
                if cur.winner.as_ref() != Some(winner) {
                    return Err(Error::corruption(None, "applied move is not the tally winner"));
                }
                let plan = match winner {
                    Choice::HoldSteady => self.plan.clone(),
                    Choice::Proposal(id) => {
                        let p = cur.proposal(id).ok_or_else(|| Error::corruption(None, "unknown winner"))?;
                        apply_proposal(&self.plan, &p.edits)?
                    }
                };
                if plan.revision != *revision || &plan.content_hash() != plan_hash {
                    return Err(Error::corruption(None, "plan revision hash mismatch"));
                }
                let record = IterationRecord {
                    index: cur.index,
                    plan_revision: cur.plan_revision,
                    submissions: cur.submissions,
                    merged_scores: cur.merged_scores.expect("merged before applying"),
                    aggregate: cur.aggregate.expect("aggregate before applying"),
                    weights_in_effect: cur.weights_in_effect.expect("weights before applying"),
                    winning_proposal: match winner {
                        Choice::HoldSteady => None,
                        Choice::Proposal(id) => Some(id.clone()),
                    },
                    proposals: cur.proposals,
                    ballots: cur.ballots,
                    abstentions: cur.abstentions,
                    resulting_revision: plan.revision,
                };
                self.iterations.push(record);
                self.plan = plan;
                self.last_status = Some(check_convergence(&self.window_history(), &self.convergence));
                self.current = Some(IterationProgress::open(cur.index + 1, self.plan.revision));
                self.phase = Phase::AwaitingScores;
            }
            EventBody::WeightsUpdated { by, weights, .. } => {
                self.check_update_weights(by)?;
                self.weights = Some(*weights);
                if let Some(cur) = self.current.as_mut() {
                    if let Some(merged) = cur.merged_scores {
                        cur.aggregate = Some(aggregate_score(&merged, weights));
                        cur.weights_in_effect = Some(*weights);
                    }
                }
            }
            EventBody::WindowReset { from_iteration } => {
                let index = self.current.as_ref().map(|c| c.index);
                if index != Some(*from_iteration) {
                    return Err(Error::corruption(None, "window reset must start at the current iteration"));
                }
                self.window_start = *from_iteration;
            }
            EventBody::ConvergenceDeclared { iteration, .. } => {
                self.require_finished(*iteration)?;
                if !self.last_status.as_ref().is_some_and(|s| s.is_converged()) {
                    return Err(Error::corruption(None, "convergence declared without converged history"));
                }
                self.current = None;
                self.phase = Phase::Converged;
            }
            EventBody::IterationCapped { iteration } => {
                self.require_finished(*iteration)?;
                if (*iteration as usize) < self.convergence.max_iterations {
                    return Err(Error::corruption(None, "iteration cap declared early"));
                }
                self.current = None;
                self.phase = Phase::IterationCapped;
            }
            EventBody::Abandoned { by, reason } => {
                self.check_abandon(by)?;
                self.abandon_reason = Some(reason.clone());
                self.current = None;
                self.phase = Phase::Abandoned;
            }
            EventBody::AdapterExchange { participant, .. } => {
                if self.participant(participant).is_none() {
                    return Err(Error::corruption(None, "adapter exchange for unknown participant"));
                }
            }
        }
        Ok(())
    }

    fn require_finished(&self, iteration: u64) -> Result<()> {
        let last = self.iterations.last().map(|r| r.index);
        let fresh = self.current.as_ref().is_some_and(|c| c.submissions.is_empty() && c.index == iteration + 1);
        if last != Some(iteration) || !fresh || self.phase != Phase::AwaitingScores {
            return Err(Error::corruption(None, "terminal event must directly follow the final iteration"));
        }
        Ok(())
    }

    fn maybe_open_voting(&mut self) {
        let has_proposals = self.current.as_ref().is_some_and(|c| !c.proposals.is_empty());
        if self.phase == Phase::AwaitingProposals && has_proposals && self.outstanding().is_empty() {
            self.phase = Phase::AwaitingVotes;
        }
    }
}
