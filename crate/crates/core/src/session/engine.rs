use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::journal::{Event, EventBody, Exchange, Journal, JournalSink, MemorySink};
use crate::model::{normalize_weights, Goal, ScoreVector, ScoringSchema};
use crate::participants::{Capability, ParticipantDescriptor, ParticipantId, Role};
use crate::plan::{apply_proposal, Plan, Proposal, ProposalDraft, ProposalId};
use crate::scoring::{aggregate_score, merge_participant_scores, MergeMode};
use crate::Convergence;

use super::{tally, tally_counts, Ballot, Choice, Phase, SessionId, SessionState};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant. Useful for byte-stable journals.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

fn default_ai_timeout() -> u64 {
    60
}

/// Everything needed to open a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionParams {
    pub goal: Goal,
    pub schema: ScoringSchema,
    /// Raw importances, normalized on creation.
    pub weights: [f64; 3],
    pub plan: Vec<String>,
    pub participants: Vec<ParticipantDescriptor>,
    #[serde(default)]
    pub convergence: Convergence,
    #[serde(default)]
    pub merge_mode: MergeMode,
    #[serde(default = "default_ai_timeout")]
    pub ai_timeout_seconds: u64,
}

impl SessionParams {
    fn validate_roster(&self) -> Result<()> {
        let roster = &self.participants;
        for (i, p) in roster.iter().enumerate() {
            p.validate()?;
            if roster[..i].iter().any(|q| q.participant_id == p.participant_id) {
                return Err(Error::validation(format!("duplicate participant `{}`", p.participant_id)));
            }
        }
        if !roster.iter().any(|p| p.role == Role::Human) {
            return Err(Error::validation("the roster needs at least one human participant"));
        }
        if !roster.iter().any(|p| p.role == Role::Ai) {
            return Err(Error::validation("the roster needs at least one AI participant"));
        }
        if !roster.iter().any(|p| p.has(Capability::Scorer)) {
            return Err(Error::validation("the roster needs at least one scorer"));
        }
        Ok(())
    }
}

/// A live session: current state, its journal, and the sink that makes
/// each event durable before the state moves.
pub struct Session {
    state: SessionState,
    journal: Journal,
    sink: Box<dyn JournalSink>,
    clock: Arc<dyn Clock>,
    halted: Option<String>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("state", &self.state).field("events", &self.journal.len()).finish()
    }
}

impl Session {
    pub fn create(
        session_id: SessionId,
        params: SessionParams,
        sink: Box<dyn JournalSink>,
        clock: Arc<dyn Clock>,
    ) -> Result<Session> {
        if params.plan.is_empty() {
            return Err(Error::validation("the initial plan needs at least one item"));
        }
        let plan = Plan::draft(&params.plan)?;
        let weights = normalize_weights(params.weights)?;
        params.validate_roster()?;

        let created = Event {
            seq: 0,
            session_id: session_id.clone(),
            ts: clock.now(),
            body: EventBody::SessionCreated {
                goal: params.goal.clone(),
                participants: params.participants.clone(),
                convergence: params.convergence,
                merge_mode: params.merge_mode,
                ai_timeout_seconds: params.ai_timeout_seconds,
            },
        };
        let state = SessionState::from_created(&created)?;
        let mut session = Session { state, journal: Journal::new(), sink, clock, halted: None };
        session.persist(created)?;
        session.emit(EventBody::SchemaSet { schema: params.schema })?;
        session.emit(EventBody::WeightsSet { raw: params.weights, weights })?;
        session.emit(EventBody::PlanDrafted { plan })?;
        Ok(session)
    }

    /// Creates a session that journals only in memory.
    pub fn in_memory(session_id: SessionId, params: SessionParams) -> Result<Session> {
        Session::create(session_id, params, Box::new(MemorySink), Arc::new(SystemClock))
    }

    /// Rebuilds a live session from its journal, continuing to append to `sink`.
    pub fn resume(events: Vec<Event>, sink: Box<dyn JournalSink>, clock: Arc<dyn Clock>) -> Result<Session> {
        let state = crate::journal::replay(&events)?;
        let journal = Journal::from_events(events)?;
        Ok(Session { state, journal, sink, clock, halted: None })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn id(&self) -> &SessionId {
        &self.state.session_id
    }

    pub fn events(&self) -> &[Event] {
        self.journal.events()
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    fn persist(&mut self, event: Event) -> Result<()> {
        if let Some(why) = &self.halted {
            return Err(Error::Storage(format!("session halted: {}", why)));
        }
        self.journal.check_next(&event)?;
        if let Err(e) = self.sink.append(&event) {
            self.halted = Some(e.to_string());
            return Err(e);
        }
        self.journal.push(event);
        Ok(())
    }

    fn emit(&mut self, body: EventBody) -> Result<()> {
        let event = Event {
            seq: self.journal.next_seq(),
            session_id: self.state.session_id.clone(),
            ts: self.clock.now(),
            body,
        };
        let mut next = self.state.clone();
        next.apply(&event)?;
        self.persist(event)?;
        self.state = next;
        Ok(())
    }

    fn iteration(&self) -> u64 {
        self.state.current.as_ref().map(|c| c.index).unwrap_or(0)
    }

    fn guard(&self) -> Result<()> {
        match &self.halted {
            Some(why) => Err(Error::Storage(format!("session halted: {}", why))),
            None => Ok(()),
        }
    }

    pub fn submit_scores(&mut self, participant: &ParticipantId, scores: ScoreVector) -> Result<()> {
        self.guard()?;
        self.state.check_scores(participant)?;
        let iteration = self.iteration();
        self.emit(EventBody::ScoresSubmitted { participant: participant.clone(), iteration, scores })?;
        self.settle()
    }

    /// Records a proposal and returns its engine-assigned id. Edits that
    /// target unknown items are journaled as a rejection and reported as
    /// stale; the proposer may try again in the same phase.
    pub fn submit_proposal(&mut self, participant: &ParticipantId, draft: ProposalDraft) -> Result<ProposalId> {
        self.guard()?;
        self.state.check_proposal(participant)?;
        let iteration = self.iteration();
        if let Err(e) = apply_proposal(&self.state.plan, &draft.edits) {
            self.emit(EventBody::ProposalRejected {
                participant: participant.clone(),
                iteration,
                reason: e.to_string(),
            })?;
            return Err(e);
        }
        let ordinal = self.state.current.as_ref().map_or(0, |c| c.proposals.len()) + 1;
        let id = ProposalId(format!("p{}-{}", iteration, ordinal));
        let proposal = Proposal::from_draft(id.clone(), participant.clone(), draft);
        self.emit(EventBody::ProposalSubmitted { iteration, proposal })?;
        self.settle()?;
        Ok(id)
    }

    pub fn cast_ballot(&mut self, participant: &ParticipantId, choice: Choice) -> Result<()> {
        self.guard()?;
        self.state.check_ballot(participant, &choice)?;
        let iteration = self.iteration();
        let ballot = Ballot { voter: participant.clone(), choice };
        self.emit(EventBody::BallotCast { iteration, ballot })?;
        self.settle()
    }

    /// Records that `participant` sits out the current phase. AI participants
    /// may abstain in any acting phase; humans only from proposing.
    pub fn abstain(&mut self, participant: &ParticipantId) -> Result<()> {
        self.guard()?;
        self.state.check_abstain(participant)?;
        let iteration = self.iteration();
        let phase = self.state.phase;
        self.emit(EventBody::Abstained { participant: participant.clone(), iteration, phase })?;
        self.settle()
    }

    /// Abstains every outstanding AI participant, as when the phase timer expires.
    pub fn expire_ai(&mut self) -> Result<Vec<ParticipantId>> {
        let late: Vec<ParticipantId> = self
            .state
            .outstanding()
            .into_iter()
            .filter(|pid| self.state.participant(pid).is_some_and(|p| p.role == Role::Ai))
            .collect();
        for pid in &late {
            self.abstain(pid)?;
        }
        Ok(late)
    }

    /// Emits whatever follow-up events the current phase is due.
    fn settle(&mut self) -> Result<()> {
        if !self.state.outstanding().is_empty() {
            return Ok(());
        }
        let iteration = self.iteration();
        match self.state.phase {
            Phase::AwaitingScores => {
                let merged = merge_participant_scores(&self.state.merge_inputs())?;
                let weights = *self.state.weights();
                let aggregate = aggregate_score(&merged, &weights);
                self.emit(EventBody::ScoresMerged { iteration, merged, aggregate, weights })?;
                self.settle()
            }
            Phase::AwaitingProposals => {
                // voting opens on its own once proposals exist; an empty round holds steady
                self.emit(EventBody::TallyDecided { iteration, winner: Choice::HoldSteady, counts: Vec::new() })
            }
            Phase::AwaitingVotes => {
                let cur = self.state.current.as_ref().expect("iteration open");
                let weights = self.state.weights();
                let winner = tally(&cur.proposals, &cur.ballots, weights);
                let counts = tally_counts(&cur.proposals, &cur.ballots, weights);
                self.emit(EventBody::TallyDecided { iteration, winner, counts })
            }
            _ => Ok(()),
        }
    }

    /// Applies the tally winner, closes the iteration and checks convergence.
    pub fn apply_winning(&mut self) -> Result<()> {
        self.guard()?;
        self.state.check_apply()?;
        let cur = self.state.current.as_ref().expect("iteration open while applying");
        let iteration = cur.index;
        let winner = cur.winner.clone().expect("winner decided before applying");
        let plan = match &winner {
            Choice::HoldSteady => self.state.plan.clone(),
            Choice::Proposal(id) => {
                let p = cur.proposal(id).expect("winner is a recorded proposal");
                apply_proposal(&self.state.plan, &p.edits)?
            }
        };
        self.emit(EventBody::ProposalApplied {
            iteration,
            winner,
            revision: plan.revision,
            plan_hash: plan.content_hash(),
        })?;
        let status = self.state.last_status.clone().expect("status computed on apply");
        if status.is_converged() {
            self.emit(EventBody::ConvergenceDeclared { iteration, deltas: status.deltas_considered })
        } else if iteration as usize >= self.state.convergence.max_iterations {
            self.emit(EventBody::IterationCapped { iteration })
        } else {
            Ok(())
        }
    }

    /// Runs any automatic step that is due. Currently that is applying the
    /// tally winner.
    pub fn advance(&mut self) -> Result<()> {
        if self.state.phase == Phase::Applying {
            self.apply_winning()?;
        }
        Ok(())
    }

    pub fn update_weights(&mut self, participant: &ParticipantId, raw: [f64; 3]) -> Result<()> {
        self.guard()?;
        self.state.check_update_weights(participant)?;
        let weights = normalize_weights(raw)?;
        let from_iteration = self.iteration();
        self.emit(EventBody::WeightsUpdated { by: participant.clone(), raw, weights })?;
        self.emit(EventBody::WindowReset { from_iteration })
    }

    pub fn abandon(&mut self, participant: &ParticipantId, reason: &str) -> Result<()> {
        self.guard()?;
        self.state.check_abandon(participant)?;
        self.emit(EventBody::Abandoned { by: participant.clone(), reason: reason.to_string() })
    }

    pub fn record_exchange(&mut self, exchange: Exchange) -> Result<()> {
        self.guard()?;
        if self.state.phase.is_terminal() {
            return Err(Error::Terminated);
        }
        if self.state.participant(&exchange.participant).is_none() {
            return Err(Error::NotFound(format!("participant `{}`", exchange.participant)));
        }
        self.emit(EventBody::AdapterExchange {
            participant: exchange.participant,
            phase: exchange.phase,
            attempt: exchange.attempt,
            request: exchange.request,
            response: exchange.response,
            error: exchange.error,
        })
    }
}
