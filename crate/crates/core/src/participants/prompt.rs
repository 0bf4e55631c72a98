use std::fmt::Write;

use crate::model::{Goal, ScoringSchema};
use crate::plan::{Plan, Proposal};
use crate::session::Phase;
use crate::Weights;

use super::grammar::render_proposal;

const SCORE_GRAMMAR: &str = "SCORES: <s1> <s2> <s3>\n\
    (each score between 0.0 and 10.0 in steps of 0.5, one per criterion in the order listed)\n";

const PROPOSAL_GRAMMAR: &str = "EDIT 1: INSERT_AFTER <item-id> :: <text>\n\
    EDIT 1: INSERT_AT_START :: <text>\n\
    EDIT 1: REPLACE <item-id> :: <text>\n\
    EDIT 1: DELETE <item-id>\n\
    RATIONALE 1: <one line explaining why the edits raise the scores>\n\
    DELTAS 1: <d1> <d2> <d3>\n\
    (one or more EDIT lines applied in order, then exactly one RATIONALE and one DELTAS line; \
    deltas are signed steps of 0.5 such as +1.5, 0.0, -0.5)\n";

const VOTE_GRAMMAR: &str = "VOTE: <proposal-id>\n\
    VOTE: HOLD_STEADY\n\
    (exactly one VOTE line; HOLD_STEADY keeps the plan unchanged)\n";

/// Renders the session snapshot and the phase instruction as one prompt.
/// Output is byte-stable for identical inputs.
pub fn build_prompt(
    goal: &Goal,
    schema: &ScoringSchema,
    weights: &Weights,
    plan: &Plan,
    phase: Phase,
    proposals: &[Proposal],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "GOAL: {}", goal.title);
    let _ = writeln!(out, "{}", goal.statement);
    if !goal.success_criteria.trim().is_empty() {
        let _ = writeln!(out, "Success looks like: {}", goal.success_criteria);
    }
    out.push('\n');

    let _ = writeln!(out, "SCORING CRITERIA (0 to 10, higher is better):");
    for (i, (c, w)) in schema.criteria().iter().zip(weights.weights()).enumerate() {
        let _ = write!(out, "{}. {} (weight {:.4})", i + 1, c.name, w);
        if !c.description.is_empty() {
            let _ = write!(out, ": {}", c.description);
        }
        out.push('\n');
    }
    out.push('\n');

    let _ = writeln!(out, "CURRENT PLAN (revision {}):", plan.revision);
    for item in &plan.items {
        let _ = writeln!(out, "[{}] {}", item.item_id, item.text);
    }
    out.push('\n');

    let (task, grammar) = match phase {
        Phase::AwaitingScores => ("Rate the current plan against each criterion.", SCORE_GRAMMAR),
        Phase::AwaitingProposals => (
            "Suggest concrete edits to the plan that raise its weighted score, and explain why they help.",
            PROPOSAL_GRAMMAR,
        ),
        Phase::AwaitingVotes => ("Vote for the proposal that should be applied next.", VOTE_GRAMMAR),
        _ => ("No action is required in this phase.", ""),
    };
    if phase == Phase::AwaitingVotes {
        let _ = writeln!(out, "PROPOSALS:");
        for p in proposals {
            let _ = writeln!(out, "--- {} by {}", p.proposal_id, p.author);
            out.push_str(&render_proposal(&p.draft()));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "TASK: {}", task);
    let _ = writeln!(out, "Reply with only the following lines, or the single line ABSTAIN:");
    out.push_str(grammar);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_schema;

    fn fixture() -> (Goal, ScoringSchema, Weights, Plan) {
        (
            Goal::new("Launch", "Ship the beta by June", "100 active users").unwrap(),
            preset_schema("iron_triangle", None).unwrap(),
            Weights::equal(),
            Plan::draft(&["Hire a designer", "Write the landing page", "Set up analytics"]).unwrap(),
        )
    }

    #[test]
    fn deterministic() {
        let (g, s, w, p) = fixture();
        let a = build_prompt(&g, &s, &w, &p, Phase::AwaitingScores, &[]);
        let b = build_prompt(&g, &s, &w, &p, Phase::AwaitingScores, &[]);
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn lists_every_item_once() {
        let (g, s, w, p) = fixture();
        let text = build_prompt(&g, &s, &w, &p, Phase::AwaitingProposals, &[]);
        for item in &p.items {
            assert_eq!(text.matches(&format!("[{}]", item.item_id)).count(), 1);
        }
        for name in s.names() {
            assert!(text.contains(name));
        }
        assert!(text.contains("Ship the beta by June"));
    }

    #[test]
    fn phase_gating() {
        let (g, s, w, p) = fixture();
        let scores = build_prompt(&g, &s, &w, &p, Phase::AwaitingScores, &[]);
        assert!(scores.contains("SCORES:"));
        assert!(!scores.contains("EDIT"));
        let edits = build_prompt(&g, &s, &w, &p, Phase::AwaitingProposals, &[]);
        assert!(edits.contains("EDIT 1:") && !edits.contains("SCORES:"));
        let votes = build_prompt(&g, &s, &w, &p, Phase::AwaitingVotes, &[]);
        assert!(votes.contains("VOTE:") && !votes.contains("SCORES:"));
    }
}
