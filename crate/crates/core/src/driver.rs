//! Lets automated participants act on a session until a human is needed
//! or the session ends.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ScoreVector;
use crate::participants::{Decision, Participant, ParticipantId};
use crate::plan::ProposalDraft;
use crate::session::{Choice, Phase, Session, SessionState};

/// What a participant decided to do in the current phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Scores(ScoreVector),
    Proposal(ProposalDraft),
    Ballot(Choice),
    Abstain,
}

impl<T: Into<Action>> From<Decision<T>> for Action {
    fn from(d: Decision<T>) -> Action {
        match d {
            Decision::Act(x) => x.into(),
            Decision::Abstain => Action::Abstain,
        }
    }
}

impl From<ScoreVector> for Action {
    fn from(s: ScoreVector) -> Action {
        Action::Scores(s)
    }
}

impl From<ProposalDraft> for Action {
    fn from(d: ProposalDraft) -> Action {
        Action::Proposal(d)
    }
}

impl From<Choice> for Action {
    fn from(c: Choice) -> Action {
        Action::Ballot(c)
    }
}

/// Asks `agent` for its move in the snapshot's phase. `None` outside the
/// acting phases.
pub fn ask(agent: &mut dyn Participant, state: &SessionState) -> Option<Action> {
    Some(match state.phase {
        Phase::AwaitingScores => agent.score(state).into(),
        Phase::AwaitingProposals => agent.propose(state).into(),
        Phase::AwaitingVotes => agent.vote(state).into(),
        _ => return None,
    })
}

/// Feeds an automated participant's action into the session. A submission
/// the engine refuses costs the participant its turn.
pub fn submit(session: &mut Session, pid: &ParticipantId, action: Action) -> Result<()> {
    let submitted = match action {
        Action::Scores(s) => session.submit_scores(pid, s),
        Action::Proposal(d) => session.submit_proposal(pid, d).map(|_| ()),
        Action::Ballot(c) => session.cast_ballot(pid, c),
        Action::Abstain => session.abstain(pid),
    };
    match submitted {
        Ok(()) => {}
        Err(Error::StaleTarget(_) | Error::Validation(_) | Error::Conflict(_)) => session.abstain(pid)?,
        Err(e) => return Err(e),
    }
    session.advance()
}

#[derive(Default)]
pub struct Driver {
    agents: BTreeMap<ParticipantId, Box<dyn Participant>>,
}

/// Why [`Driver::run`] returned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    Finished(Phase),
    /// Outstanding participants have no automated agent.
    WaitingOn(Vec<ParticipantId>),
}

impl Driver {
    pub fn new() -> Self {
        Driver::default()
    }

    pub fn with(mut self, id: ParticipantId, agent: Box<dyn Participant>) -> Self {
        self.insert(id, agent);
        self
    }

    pub fn insert(&mut self, id: ParticipantId, agent: Box<dyn Participant>) {
        self.agents.insert(id, agent);
    }

    pub fn has_agent(&self, id: &ParticipantId) -> bool {
        self.agents.contains_key(id)
    }

    /// Lets one automated participant act. Returns false when none is due.
    pub fn step(&mut self, session: &mut Session) -> Result<bool> {
        session.advance()?;
        let Some(pid) = session.state().outstanding().into_iter().find(|p| self.agents.contains_key(p)) else {
            return Ok(false);
        };
        let agent = self.agents.get_mut(&pid).expect("agent present");
        let Some(action) = ask(agent.as_mut(), session.state()) else {
            return Ok(false);
        };
        for exchange in agent.take_exchanges() {
            session.record_exchange(exchange)?;
        }
        submit(session, &pid, action)?;
        Ok(true)
    }

    /// Steps until the session ends or waits on someone without an agent.
    pub fn run(&mut self, session: &mut Session) -> Result<Halt> {
        loop {
            if session.phase().is_terminal() {
                return Ok(Halt::Finished(session.phase()));
            }
            if !self.step(session)? {
                if session.phase().is_terminal() {
                    return Ok(Halt::Finished(session.phase()));
                }
                return Ok(Halt::WaitingOn(session.state().outstanding()));
            }
        }
    }
}
