use serde::{Deserialize, Serialize};

use crate::model::WeightVector;
use crate::plan::Proposal;
use crate::scalar::Scalar;

use super::{Ballot, Choice};

/// Claimed gains are compared on a 1e-9 grid so floating-point noise in
/// the weighted sum cannot break a genuine tie.
pub fn gain_key<T: Scalar>(gain: T) -> i64 {
    (gain.to_f64().unwrap() * 1e9).round() as i64
}

/// Ballot count and claimed gain for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTally {
    pub choice: Choice,
    pub votes: u32,
    pub claimed_gain: f64,
}

/// Counts per candidate, HOLD_STEADY first, then proposals in submission order.
pub fn tally_counts<T: Scalar>(
    proposals: &[Proposal],
    ballots: &[Ballot],
    weights: &WeightVector<T>,
) -> Vec<CandidateTally> {
    let mut candidates = Vec::with_capacity(proposals.len() + 1);
    candidates.push(CandidateTally { choice: Choice::HoldSteady, votes: 0, claimed_gain: 0.0 });
    for p in proposals {
        candidates.push(CandidateTally {
            choice: Choice::Proposal(p.proposal_id.clone()),
            votes: 0,
            claimed_gain: weights.weighted_gain(&p.claimed_deltas).to_f64().unwrap(),
        });
    }
    for ballot in ballots {
        if let Some(c) = candidates.iter_mut().find(|c| c.choice == ballot.choice) {
            c.votes += 1;
        }
    }
    candidates
}

/// Plurality winner. Ties go to the larger claimed weighted gain, then to
/// the earlier submission; HOLD_STEADY counts as gain 0 submitted first.
pub fn tally<T: Scalar>(proposals: &[Proposal], ballots: &[Ballot], weights: &WeightVector<T>) -> Choice {
    let candidates = tally_counts(proposals, ballots, weights);
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        let better = (c.votes, gain_key(c.claimed_gain)) > (best.votes, gain_key(best.claimed_gain));
        if better {
            best = c;
        }
    }
    best.choice.clone()
}
