use indigo_core::journal::replay;
use indigo_core::participants::{Capability, ParticipantDescriptor, ParticipantId, Role};
use indigo_core::session::HOLD_STEADY;
use indigo_core::{
    aggregate_score, preset_schema, Choice, Convergence, Edit, ErrorCode, Goal, Phase, ProposalDraft, ScoreDelta,
    ScoreVector, Session, SessionId, SessionParams,
};

fn h() -> ParticipantId {
    ParticipantId::new("h")
}

fn a() -> ParticipantId {
    ParticipantId::new("a")
}

fn params(human_caps: &[Capability], convergence: Convergence) -> SessionParams {
    SessionParams {
        goal: Goal::new("Launch", "Ship the beta", "").unwrap(),
        schema: preset_schema("iron_triangle", None).unwrap(),
        weights: [1.0, 1.0, 1.0],
        plan: vec!["Write the brief".into(), "Book a venue".into()],
        participants: vec![
            ParticipantDescriptor::human("h", human_caps),
            ParticipantDescriptor::ai("a", &Capability::ALL),
        ],
        convergence,
        merge_mode: Default::default(),
        ai_timeout_seconds: 60,
    }
}

fn session() -> Session {
    Session::in_memory(SessionId::new("s1"), params(&[Capability::Scorer, Capability::Voter], Convergence::default()))
        .unwrap()
}

fn sv(v: [f64; 3]) -> ScoreVector {
    ScoreVector::from_values(v).unwrap()
}

fn draft(s: &Session, text: &str, claim: [i32; 3]) -> ProposalDraft {
    let last = s.state().plan.items.last().unwrap().item_id.clone();
    ProposalDraft::new(
        vec![Edit::insert_after(&last, text).unwrap()],
        "adds a step",
        claim.map(|u| ScoreDelta::from_half_units(u).unwrap()),
    )
    .unwrap()
}

/// Both scorers submit `scores`; the AI abstains from proposing, so the
/// iteration holds steady and is applied.
fn hold_iteration(s: &mut Session, scores: [f64; 3]) {
    s.submit_scores(&h(), sv(scores)).unwrap();
    s.submit_scores(&a(), sv(scores)).unwrap();
    s.abstain(&a()).unwrap();
    assert_eq!(s.phase(), Phase::Applying);
    s.advance().unwrap();
}

fn to_votes(s: &mut Session) {
    s.submit_scores(&h(), sv([5.0, 5.0, 5.0])).unwrap();
    s.submit_scores(&a(), sv([5.0, 5.0, 5.0])).unwrap();
    s.submit_proposal(&a(), draft(s, "Hire a caterer", [2, 0, 0])).unwrap();
}

#[test]
fn create_normalizes_and_opens_scoring() {
    let mut p = params(&[Capability::Scorer], Convergence::default());
    p.weights = [2.0, 1.0, 1.0];
    let s = Session::in_memory(SessionId::new("x"), p).unwrap();
    assert_eq!(s.phase(), Phase::AwaitingScores);
    assert_eq!(s.state().plan.revision, 0);
    assert_eq!(s.state().weights().weights(), &[0.5, 0.25, 0.25]);
    let kinds: Vec<_> = s.events().iter().map(|e| e.body.kind()).collect();
    assert!(kinds.contains(&"SessionCreated") && kinds.contains(&"PlanDrafted"));
}

#[test]
fn create_rejects_bad_inputs() {
    let mut p = params(&[Capability::Scorer], Convergence::default());
    p.plan.clear();
    assert_eq!(Session::in_memory(SessionId::new("x"), p).unwrap_err().code(), ErrorCode::Validation);

    let mut p = params(&[Capability::Scorer], Convergence::default());
    p.participants.retain(|d| d.role != Role::Human);
    assert_eq!(Session::in_memory(SessionId::new("x"), p).unwrap_err().code(), ErrorCode::Validation);

    let mut p = params(&[Capability::Scorer], Convergence::default());
    p.weights = [0.0, 0.0, 0.0];
    assert_eq!(Session::in_memory(SessionId::new("x"), p).unwrap_err().code(), ErrorCode::Validation);
}

#[test]
fn scores_merge_and_advance() {
    let mut s = session();
    s.submit_scores(&h(), sv([7.0, 6.0, 8.0])).unwrap();
    assert_eq!(s.phase(), Phase::AwaitingScores);
    assert_eq!(s.submit_scores(&h(), sv([1.0, 1.0, 1.0])).unwrap_err().code(), ErrorCode::Conflict);
    s.submit_scores(&a(), sv([8.0, 6.0, 8.0])).unwrap();
    assert_eq!(s.phase(), Phase::AwaitingProposals);
    let cur = s.state().current_iteration().unwrap();
    assert_eq!(cur.merged_scores, Some(sv([7.5, 6.0, 8.0])));
}

#[test]
fn non_scorer_is_refused() {
    let mut s = Session::in_memory(SessionId::new("x"), params(&[Capability::Voter], Convergence::default())).unwrap();
    assert_eq!(s.submit_scores(&h(), sv([5.0; 3])).unwrap_err().code(), ErrorCode::Authorization);
    let stranger = ParticipantId::new("z");
    assert_eq!(s.submit_scores(&stranger, sv([5.0; 3])).unwrap_err().code(), ErrorCode::Authorization);
}

#[test]
fn empty_rationale_is_invalid() {
    let e = ProposalDraft::new(vec![Edit::insert_at_start("x").unwrap()], "  ", [ScoreDelta::default(); 3]);
    assert_eq!(e.unwrap_err().code(), ErrorCode::Validation);
}

#[test]
fn all_proposers_abstain_holds_steady() {
    let mut s = session();
    let before = s.state().plan.clone();
    hold_iteration(&mut s, [5.0; 3]);
    let rec = &s.state().iterations[0];
    assert_eq!(rec.winning_proposal, None);
    assert_eq!(s.state().plan, before);
    assert_eq!(s.phase(), Phase::AwaitingScores);
}

#[test]
fn stale_proposal_is_rejected_and_retryable() {
    let mut s = session();
    s.submit_scores(&h(), sv([5.0; 3])).unwrap();
    s.submit_scores(&a(), sv([5.0; 3])).unwrap();
    let bad = ProposalDraft::new(
        vec![Edit::delete(&indigo_core::ItemId::new("i99"))],
        "remove it",
        [ScoreDelta::default(); 3],
    )
    .unwrap();
    assert_eq!(s.submit_proposal(&a(), bad).unwrap_err().code(), ErrorCode::StaleTarget);
    assert_eq!(s.events().last().unwrap().body.kind(), "ProposalRejected");
    assert_eq!(s.phase(), Phase::AwaitingProposals);
    let id = s.submit_proposal(&a(), draft(&s, "Hire a caterer", [1, 0, 0])).unwrap();
    assert_eq!(id.as_str(), "p1-1");
    assert_eq!(s.phase(), Phase::AwaitingVotes);
    assert_eq!(s.state().current_iteration().unwrap().proposals.len(), 1);
}

#[test]
fn ballots_and_winner_applied() {
    let mut s = session();
    to_votes(&mut s);
    assert_eq!(
        s.cast_ballot(&h(), Choice::Proposal(indigo_core::ProposalId("p1-9".into()))).unwrap_err().code(),
        ErrorCode::Validation
    );
    s.cast_ballot(&h(), Choice::Proposal(indigo_core::ProposalId("p1-1".into()))).unwrap();
    assert_eq!(s.cast_ballot(&h(), Choice::HoldSteady).unwrap_err().code(), ErrorCode::Conflict);
    s.cast_ballot(&a(), Choice::HoldSteady).unwrap();
    assert_eq!(s.phase(), Phase::Applying);
    assert_eq!(s.cast_ballot(&a(), Choice::HoldSteady).unwrap_err().code(), ErrorCode::Phase);
    s.advance().unwrap();
    // tie on votes; the proposal claims a positive gain over HOLD_STEADY's zero
    let rec = &s.state().iterations[0];
    assert_eq!(rec.winning_proposal.as_ref().map(|p| p.as_str()), Some("p1-1"));
    assert_eq!(s.state().plan.revision, 1);
    assert_eq!(s.state().plan.texts().last(), Some(&"Hire a caterer"));
}

#[test]
fn stalemate_defaults_to_hold_steady() {
    let mut s = session();
    s.submit_scores(&h(), sv([5.0; 3])).unwrap();
    s.submit_scores(&a(), sv([5.0; 3])).unwrap();
    s.submit_proposal(&a(), draft(&s, "Hire a caterer", [0, 0, 0])).unwrap();
    s.cast_ballot(&h(), Choice::Proposal(indigo_core::ProposalId("p1-1".into()))).unwrap();
    s.cast_ballot(&a(), Choice::HoldSteady).unwrap();
    s.advance().unwrap();
    assert_eq!(s.state().iterations[0].winning_proposal, None);
    assert_eq!(s.state().plan.revision, 0);
    assert_eq!(HOLD_STEADY, Choice::HoldSteady.to_string());
}

#[test]
fn hold_steady_twice_gives_zero_deltas() {
    let mut s = session();
    hold_iteration(&mut s, [6.0; 3]);
    hold_iteration(&mut s, [6.0; 3]);
    let hist: Vec<f64> = s.state().iterations.iter().map(|r| r.aggregate.0).collect();
    assert_eq!(hist[1] - hist[0], 0.0);
}

#[test]
fn converges_on_flat_history() {
    let cfg = Convergence::new(0.5, 3, 50).unwrap();
    let mut s = Session::in_memory(SessionId::new("c"), params(&[Capability::Scorer, Capability::Voter], cfg)).unwrap();
    // aggregates 6.0, 6.0, 6.5, 6.5 is two deltas of 0 and one of exactly 0.5: not yet
    for v in [6.0, 6.0, 6.5, 6.5] {
        hold_iteration(&mut s, [v; 3]);
    }
    assert_eq!(s.phase(), Phase::AwaitingScores);
    for v in [6.5, 6.5] {
        hold_iteration(&mut s, [v; 3]);
    }
    assert_eq!(s.phase(), Phase::Converged);
    assert_eq!(s.events().last().unwrap().body.kind(), "ConvergenceDeclared");
}

#[test]
fn iteration_cap_ends_session() {
    let cfg = Convergence::new(0.5, 1, 2).unwrap();
    let mut s = Session::in_memory(SessionId::new("c"), params(&[Capability::Scorer], cfg)).unwrap();
    hold_iteration(&mut s, [1.0; 3]);
    hold_iteration(&mut s, [9.0; 3]);
    assert_eq!(s.phase(), Phase::IterationCapped);
    assert_eq!(s.state().iterations.len(), 2);
}

#[test]
fn weight_update_rules() {
    let mut s = session();
    assert_eq!(s.update_weights(&a(), [1.0, 1.0, 1.0]).unwrap_err().code(), ErrorCode::Authorization);
    assert_eq!(s.update_weights(&h(), [-1.0, 1.0, 1.0]).unwrap_err().code(), ErrorCode::Validation);
    s.update_weights(&h(), [4.0, 1.0, 1.0]).unwrap();
    let w = s.state().weights().weights();
    let expect = [4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    for i in 0..3 {
        assert!((w[i] - expect[i]).abs() < 1e-12);
    }
    let kinds: Vec<_> = s.events().iter().rev().take(2).map(|e| e.body.kind()).collect();
    assert_eq!(kinds, ["WindowReset", "WeightsUpdated"]);
    to_votes(&mut s);
    assert_eq!(s.update_weights(&h(), [1.0, 1.0, 1.0]).unwrap_err().code(), ErrorCode::Phase);
}

#[test]
fn reweight_in_proposals_recomputes_aggregate() {
    let mut s = session();
    s.submit_scores(&h(), sv([10.0, 0.0, 0.0])).unwrap();
    s.submit_scores(&a(), sv([10.0, 0.0, 0.0])).unwrap();
    s.update_weights(&h(), [1.0, 0.0, 0.0]).unwrap();
    assert_eq!(s.state().current_iteration().unwrap().aggregate.map(|x| x.0), Some(10.0));
}

fn window_trace(reweight: bool) -> Phase {
    let cfg = Convergence::new(0.5, 3, 50).unwrap();
    let mut s = Session::in_memory(SessionId::new("w"), params(&[Capability::Scorer, Capability::Voter], cfg)).unwrap();
    // aggregates 5.0, 5.1667, 5.3333: two sub-threshold deltas
    hold_iteration(&mut s, [5.0, 5.0, 5.0]);
    hold_iteration(&mut s, [5.0, 5.0, 5.5]);
    hold_iteration(&mut s, [5.0, 5.5, 5.5]);
    if reweight {
        s.update_weights(&h(), [1.0, 1.0, 1.0]).unwrap();
    }
    // one more sub-threshold delta
    hold_iteration(&mut s, [5.5, 5.5, 5.5]);
    s.phase()
}

#[test]
fn window_reset_trace() {
    assert_eq!(window_trace(false), Phase::Converged);
    assert_eq!(window_trace(true), Phase::AwaitingScores);
}

#[test]
fn abandon_rules() {
    let mut s = session();
    assert_eq!(s.abandon(&a(), "bored").unwrap_err().code(), ErrorCode::Authorization);
    s.abandon(&h(), "budget cut, see memo").unwrap();
    assert_eq!(s.phase(), Phase::Abandoned);
    assert_eq!(s.state().abandon_reason.as_deref(), Some("budget cut, see memo"));
    assert_eq!(s.abandon(&h(), "again").unwrap_err().code(), ErrorCode::Phase);
}

#[test]
fn abstention_rules() {
    let mut s = session();
    assert_eq!(s.abstain(&h()).unwrap_err().code(), ErrorCode::Authorization);
    assert_eq!(s.expire_ai().unwrap(), vec![a()]);
    s.submit_scores(&h(), sv([4.0; 3])).unwrap();
    assert_eq!(s.phase(), Phase::AwaitingProposals);
    assert_eq!(s.state().current_iteration().unwrap().merged_scores, Some(sv([4.0; 3])));
}

/// Builds sessions sitting in every phase.
fn in_each_phase() -> Vec<(Phase, Session)> {
    let mut out = Vec::new();

    let s = session();
    let prefix = s.events()[..1].to_vec();
    let drafting = Session::resume(
        prefix,
        Box::new(indigo_core::MemorySink),
        std::sync::Arc::new(indigo_core::session::SystemClock),
    )
    .unwrap();
    out.push((Phase::Drafting, drafting));

    out.push((Phase::AwaitingScores, session()));

    let mut s = session();
    s.submit_scores(&h(), sv([5.0; 3])).unwrap();
    s.submit_scores(&a(), sv([5.0; 3])).unwrap();
    out.push((Phase::AwaitingProposals, s));

    let mut s = session();
    to_votes(&mut s);
    out.push((Phase::AwaitingVotes, s));

    let mut s = session();
    to_votes(&mut s);
    s.cast_ballot(&h(), Choice::HoldSteady).unwrap();
    s.cast_ballot(&a(), Choice::HoldSteady).unwrap();
    out.push((Phase::Applying, s));

    let cfg = Convergence::new(0.5, 1, 50).unwrap();
    let mut s = Session::in_memory(SessionId::new("c"), params(&[Capability::Scorer, Capability::Voter], cfg)).unwrap();
    hold_iteration(&mut s, [5.0; 3]);
    hold_iteration(&mut s, [5.0; 3]);
    out.push((Phase::Converged, s));

    let cfg = Convergence::new(0.5, 1, 2).unwrap();
    let mut s = Session::in_memory(SessionId::new("c"), params(&[Capability::Scorer, Capability::Voter], cfg)).unwrap();
    hold_iteration(&mut s, [1.0; 3]);
    hold_iteration(&mut s, [9.0; 3]);
    out.push((Phase::IterationCapped, s));

    let mut s = session();
    s.abandon(&h(), "stop").unwrap();
    out.push((Phase::Abandoned, s));

    out
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Scores,
    Propose,
    Ballot,
    Abstain,
    Apply,
    Reweight,
    Abandon,
}

impl Op {
    const ALL: [Op; 7] = [Op::Scores, Op::Propose, Op::Ballot, Op::Abstain, Op::Apply, Op::Reweight, Op::Abandon];

    fn legal_in(self, phase: Phase) -> bool {
        use Phase::*;
        match self {
            Op::Scores => phase == AwaitingScores,
            Op::Propose => phase == AwaitingProposals,
            Op::Ballot => phase == AwaitingVotes,
            Op::Abstain => matches!(phase, AwaitingScores | AwaitingProposals | AwaitingVotes),
            Op::Apply => phase == Applying,
            Op::Reweight => matches!(phase, AwaitingScores | AwaitingProposals),
            Op::Abandon => !phase.is_terminal(),
        }
    }

    fn run(self, s: &mut Session) -> indigo_core::Result<()> {
        match self {
            Op::Scores => s.submit_scores(&a(), sv([5.0; 3])),
            Op::Propose => {
                let d =
                    ProposalDraft::new(vec![Edit::insert_at_start("Start early").unwrap()], "r", Default::default())
                        .unwrap();
                s.submit_proposal(&a(), d).map(|_| ())
            }
            Op::Ballot => s.cast_ballot(&a(), Choice::HoldSteady),
            Op::Abstain => s.abstain(&a()),
            Op::Apply => s.apply_winning(),
            Op::Reweight => s.update_weights(&h(), [1.0, 2.0, 3.0]),
            Op::Abandon => s.abandon(&h(), "done"),
        }
    }
}

#[test]
fn phase_legality_is_exhaustive() {
    for phase_idx in 0..Phase::ALL.len() {
        for op in Op::ALL {
            let (phase, mut s) = in_each_phase().swap_remove(phase_idx);
            assert_eq!(s.phase(), phase);
            let before = s.state().clone();
            let len = s.events().len();
            let result = op.run(&mut s);
            if op.legal_in(phase) {
                assert!(result.is_ok(), "{:?} in {} failed: {:?}", op, phase, result);
            } else {
                let err = result.expect_err(&format!("{:?} in {} should fail", op, phase));
                assert_eq!(err.code(), ErrorCode::Phase, "{:?} in {}", op, phase);
                assert_eq!(s.state(), &before);
                assert_eq!(s.events().len(), len);
            }
        }
    }
}

#[test]
fn records_are_consistent_and_replayable() {
    let mut s = session();
    hold_iteration(&mut s, [3.0, 4.5, 6.0]);
    to_votes(&mut s);
    s.cast_ballot(&h(), Choice::Proposal(indigo_core::ProposalId("p2-1".into()))).unwrap();
    s.cast_ballot(&a(), Choice::Proposal(indigo_core::ProposalId("p2-1".into()))).unwrap();
    s.advance().unwrap();
    for (i, rec) in s.state().iterations.iter().enumerate() {
        assert_eq!(rec.index, i as u64 + 1);
        assert_eq!(rec.aggregate, aggregate_score(&rec.merged_scores, &rec.weights_in_effect));
        let manual: f64 =
            rec.merged_scores.iter().zip(rec.weights_in_effect.weights()).map(|(s, w)| s.value::<f64>() * w).sum();
        assert!((rec.aggregate.0 - manual).abs() < 1e-12);
    }
    assert_eq!(&replay(s.events()).unwrap(), s.state());
}
