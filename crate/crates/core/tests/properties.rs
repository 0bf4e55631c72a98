use std::collections::HashSet;

use proptest::prelude::*;

use indigo_core::participants::{parse_response, render_ballot, render_proposal, render_scores, ParsedResponse};
use indigo_core::{
    aggregate_score, apply_edit, apply_proposal, inverse_edit, merge_participant_scores, normalize_weights, quantize,
    Choice, Edit, ItemId, Phase, Plan, ProposalDraft, ProposalId, ScoreDelta, ScoreVector, WeightVector,
};

/// Nearest lattice point by exhaustive search, ties to the larger value.
fn nearest_lattice(x: f64) -> f64 {
    let mut best = 0.0_f64;
    for k in 0..=20 {
        let v = k as f64 * 0.5;
        let d = (v - x).abs();
        let bd = (best - x).abs();
        if d <= bd {
            best = v;
        }
    }
    best
}

fn score_vec() -> impl Strategy<Value = ScoreVector> {
    prop::array::uniform3(0u8..=20).prop_map(|u| ScoreVector::from_half_units(u).unwrap())
}

fn raw_weights() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(0.0f64..100.0).prop_filter("positive total", |w| w.iter().sum::<f64>() > 1e-6)
}

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ,.'-]{0,30}[A-Za-z0-9.]".prop_map(|s| s)
}

/// A plan of 1..6 items and a random sequence of edit choices to apply to it.
fn plan_and_ops() -> impl Strategy<Value = (Vec<String>, Vec<(u8, usize, String)>)> {
    (prop::collection::vec(text(), 1..6), prop::collection::vec((0u8..4, 0usize..16, text()), 0..24))
}

fn pick_edit(plan: &Plan, op: u8, at: usize, text: &str) -> Edit {
    if plan.items.is_empty() {
        return Edit::insert_at_start(text).unwrap();
    }
    let target = &plan.items[at % plan.items.len()].item_id;
    match op {
        0 => Edit::insert_after(target, text).unwrap(),
        1 => Edit::insert_at_start(text).unwrap(),
        2 => Edit::replace(target, text).unwrap(),
        _ => Edit::delete(target),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn quantize_matches_nearest_lattice(x in 0.0f64..=10.0) {
        let q = quantize(x).unwrap();
        prop_assert_eq!(q.value::<f64>(), nearest_lattice(x));
        prop_assert!((q.value::<f64>() - x).abs() <= 0.25);
    }

    #[test]
    fn quantize_rejects_out_of_range(x in prop_oneof![-1e6f64..-1e-9, 10.000001f64..1e6]) {
        prop_assert!(quantize(x).is_err());
    }

    #[test]
    fn normalized_weights_sum_to_one(raw in raw_weights()) {
        let w: WeightVector<f64> = normalize_weights(raw).unwrap();
        let total: f64 = raw.iter().sum();
        prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for (i, r) in raw.iter().enumerate() {
            prop_assert!((w.get(i) - r / total).abs() <= 1e-12);
        }
    }

    #[test]
    fn f32_weights_normalize_too(raw in prop::array::uniform3(0.01f32..50.0)) {
        let w: WeightVector<f32> = normalize_weights(raw).unwrap();
        prop_assert!((w.weights().iter().sum::<f32>() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn aggregate_within_score_bounds(s in score_vec(), raw in raw_weights()) {
        let w = normalize_weights(raw).unwrap();
        let agg = aggregate_score(&s, &w).0;
        let vals: Vec<f64> = s.iter().map(|v| v.value()).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(agg >= lo - 1e-9 && agg <= hi + 1e-9);
    }

    #[test]
    fn merge_is_rounded_mean(subs in prop::collection::vec(score_vec(), 1..7)) {
        let merged = merge_participant_scores(&subs).unwrap();
        for i in 0..3 {
            let vals: Vec<f64> = subs.iter().map(|s| s.0[i].value()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let got = merged.0[i].value::<f64>();
            prop_assert_eq!(got, nearest_lattice(mean));
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(got >= lo && got <= hi);
        }
    }

    #[test]
    fn item_ids_never_repeat((texts, ops) in plan_and_ops()) {
        let mut plan = Plan::draft(&texts).unwrap();
        let mut seen: HashSet<ItemId> = plan.items.iter().map(|i| i.item_id.clone()).collect();
        for (op, at, t) in ops {
            let edit = pick_edit(&plan, op, at, &t);
            let next = apply_proposal(&plan, &[edit]).unwrap();
            prop_assert_eq!(next.revision, plan.revision + 1);
            let ids: HashSet<_> = next.items.iter().map(|i| i.item_id.clone()).collect();
            prop_assert_eq!(ids.len(), next.items.len());
            for id in &ids {
                if plan.position(id).is_none() {
                    prop_assert!(seen.insert(id.clone()), "id {} reused", id);
                }
            }
            plan = next;
        }
    }

    #[test]
    fn proposals_are_atomic((texts, ops) in plan_and_ops()) {
        let plan = Plan::draft(&texts).unwrap();
        let mut edits: Vec<Edit> = Vec::new();
        let mut scratch = plan.clone();
        for (op, at, t) in ops.iter().take(4) {
            let e = pick_edit(&scratch, *op, *at, t);
            scratch = apply_edit(&scratch, &e).unwrap();
            edits.push(e);
        }
        edits.push(Edit::delete(&ItemId::new("missing")));
        let snapshot = plan.clone();
        prop_assert!(apply_proposal(&plan, &edits).is_err());
        prop_assert_eq!(plan, snapshot);
    }

    #[test]
    fn inverse_restores_text((texts, ops) in plan_and_ops()) {
        let mut plan = Plan::draft(&texts).unwrap();
        for (op, at, t) in ops {
            let edit = pick_edit(&plan, op, at, &t);
            let undo = inverse_edit(&plan, &edit).unwrap();
            let after = apply_edit(&plan, &edit).unwrap();
            let back = apply_edit(&after, &undo).unwrap();
            prop_assert_eq!(back.texts(), plan.texts());
            plan = after;
        }
    }

    #[test]
    fn grammar_round_trips((texts, ops) in plan_and_ops(), rationale in text(), deltas in prop::array::uniform3(-20i32..=20)) {
        let plan = Plan::draft(&texts).unwrap();
        let mut scratch = plan.clone();
        let mut edits = Vec::new();
        for (op, at, t) in ops.iter().take(5) {
            let e = pick_edit(&scratch, *op, *at, t);
            scratch = apply_edit(&scratch, &e).unwrap();
            edits.push(e);
        }
        if edits.is_empty() {
            edits.push(Edit::insert_at_start("Kick off").unwrap());
        }
        let draft = ProposalDraft::new(edits, rationale, deltas.map(|d| ScoreDelta::from_half_units(d).unwrap())).unwrap();
        let parsed = parse_response(&render_proposal(&draft), Phase::AwaitingProposals, &plan).unwrap();
        prop_assert_eq!(parsed, ParsedResponse::Proposal(draft));
    }

    #[test]
    fn scores_and_ballots_round_trip(s in score_vec(), n in 1u32..9, hold in any::<bool>()) {
        let plan = Plan::draft(&["x"]).unwrap();
        let parsed = parse_response(&render_scores(&s), Phase::AwaitingScores, &plan).unwrap();
        prop_assert_eq!(parsed, ParsedResponse::Scores(s));
        let choice = if hold { Choice::HoldSteady } else { Choice::Proposal(ProposalId(format!("p3-{}", n))) };
        let parsed = parse_response(&render_ballot(&choice), Phase::AwaitingVotes, &plan).unwrap();
        prop_assert_eq!(parsed, ParsedResponse::Ballot(choice));
    }

    #[test]
    fn parser_never_panics(raw in "\\PC{0,200}", phase_idx in 0usize..8) {
        let plan = Plan::draft(&["alpha", "beta"]).unwrap();
        let _ = parse_response(&raw, Phase::ALL[phase_idx], &plan);
    }

    #[test]
    fn parser_survives_near_miss_lines(
        lines in prop::collection::vec(
            prop_oneof![
                Just("SCORES:".to_string()),
                Just("EDIT 1:".to_string()),
                Just("RATIONALE 1:".to_string()),
                Just("DELTAS 1:".to_string()),
                Just("VOTE:".to_string()),
                Just("ABSTAIN".to_string()),
                Just("INSERT_AFTER".to_string()),
                Just("::".to_string()),
                Just("i1".to_string()),
                Just("10.5".to_string()),
                Just("+0.5".to_string()),
                Just("-".to_string()),
                "[ -~]{0,12}",
            ],
            0..12,
        ),
        phase_idx in 1usize..4,
    ) {
        let plan = Plan::draft(&["alpha", "beta"]).unwrap();
        let raw = lines.join(" ").replace("  ", "\n");
        let _ = parse_response(&raw, Phase::ALL[phase_idx], &plan);
    }
}

#[test]
fn non_lattice_scores_and_unknown_ids_rejected() {
    let plan = Plan::draft(&["alpha"]).unwrap();
    for bad in ["SCORES: 7.3 5 5", "SCORES: 10.5 1 1", "SCORES: -0.5 1 1", "SCORES: 1 2"] {
        assert!(parse_response(bad, Phase::AwaitingScores, &plan).is_err(), "{}", bad);
    }
    let stale = "EDIT 1: DELETE i42\nRATIONALE 1: gone\nDELTAS 1: 0.0 0.0 0.0";
    assert!(parse_response(stale, Phase::AwaitingProposals, &plan).is_err());
}
