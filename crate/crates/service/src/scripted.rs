//! A human participant whose answers come from a config file.

use serde::Deserialize;

use indigo_core::participants::{Decision, Participant};
use indigo_core::{Choice, ProposalDraft, ScoreVector, SessionState};

/// How a scripted human votes when its list of explicit choices runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotePolicy {
    /// The proposal with the largest claimed weighted gain, if positive.
    #[default]
    BestClaimed,
    FirstProposal,
    HoldSteady,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanScript {
    /// Scores per iteration; the last entry repeats.
    #[serde(default)]
    pub scores: Vec<ScoreVector>,
    /// Proposals per iteration; missing entries abstain.
    #[serde(default)]
    pub proposals: Vec<Option<ProposalDraft>>,
    /// Explicit ballots per iteration, before falling back to `vote_policy`.
    #[serde(default)]
    pub votes: Vec<Choice>,
    #[serde(default)]
    pub vote_policy: VotePolicy,
}

pub struct ScriptedHuman {
    script: HumanScript,
}

impl ScriptedHuman {
    pub fn new(script: HumanScript) -> Self {
        ScriptedHuman { script }
    }
}

fn iteration_slot(state: &SessionState) -> usize {
    state.current_iteration().map(|c| c.index as usize).unwrap_or(1).saturating_sub(1)
}

impl Participant for ScriptedHuman {
    fn score(&mut self, state: &SessionState) -> Decision<ScoreVector> {
        let i = iteration_slot(state);
        match self.script.scores.get(i).or(self.script.scores.last()) {
            Some(s) => Decision::Act(*s),
            None => Decision::Abstain,
        }
    }

    fn propose(&mut self, state: &SessionState) -> Decision<ProposalDraft> {
        match self.script.proposals.get(iteration_slot(state)) {
            Some(Some(d)) => Decision::Act(d.clone()),
            _ => Decision::Abstain,
        }
    }

    fn vote(&mut self, state: &SessionState) -> Decision<Choice> {
        if let Some(c) = self.script.votes.get(iteration_slot(state)) {
            return Decision::Act(c.clone());
        }
        let Some(cur) = state.current_iteration() else { return Decision::Act(Choice::HoldSteady) };
        let choice = match self.script.vote_policy {
            VotePolicy::HoldSteady => Choice::HoldSteady,
            VotePolicy::FirstProposal => {
                cur.proposals.first().map_or(Choice::HoldSteady, |p| Choice::Proposal(p.proposal_id.clone()))
            }
            VotePolicy::BestClaimed => {
                let weights = state.weights();
                let mut best: Option<(i64, Choice)> = None;
                for p in &cur.proposals {
                    let gain = indigo_core::session::gain_key(weights.weighted_gain(&p.claimed_deltas));
                    if gain > 0 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                        best = Some((gain, Choice::Proposal(p.proposal_id.clone())));
                    }
                }
                best.map_or(Choice::HoldSteady, |(_, c)| c)
            }
        };
        Decision::Act(choice)
    }
}
