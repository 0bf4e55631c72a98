//! A scripted participant with a hidden keyword target.
//!
//! Coverage of criterion `i` is the fraction of its target keywords that
//! appear (case-insensitively) somewhere in the plan text. The optimum is
//! known in advance: every keyword present, every score 10.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{quantize, ScoreDelta, ScoreValue, ScoreVector, CRITERIA, MAX_HALF_UNITS};
use crate::plan::{Edit, Plan, ProposalDraft};
use crate::session::{gain_key, Choice, SessionState};
use crate::Weights;

use super::{Decision, Participant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalPolicy {
    #[default]
    Greedy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleConfig {
    pub hidden_target: [Vec<String>; CRITERIA],
    pub noise_half_units: u32,
    pub proposal_policy: ProposalPolicy,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(
        hidden_target: [Vec<String>; CRITERIA],
        noise_half_units: u32,
        proposal_policy: ProposalPolicy,
        seed: u64,
    ) -> Result<Self> {
        if hidden_target.iter().any(|kw| kw.is_empty()) {
            return Err(Error::validation("every criterion needs at least one target keyword"));
        }
        if hidden_target.iter().flatten().any(|k| k.trim().is_empty() || k.contains('\n')) {
            return Err(Error::validation("target keywords must be nonempty single-line text"));
        }
        Ok(OracleConfig { hidden_target, noise_half_units, proposal_policy, seed })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OracleConfig { seed, ..self.clone() }
    }

    fn missing<'a>(&'a self, plan: &Plan) -> Vec<(usize, &'a str)> {
        let text = plan.full_text().to_lowercase();
        self.hidden_target
            .iter()
            .enumerate()
            .flat_map(|(i, kws)| kws.iter().map(move |k| (i, k.as_str())))
            .filter(|(_, k)| !text.contains(&k.to_lowercase()))
            .collect()
    }
}

impl<'de> Deserialize<'de> for OracleConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            hidden_target: [Vec<String>; CRITERIA],
            #[serde(default)]
            noise_half_units: u32,
            #[serde(default)]
            proposal_policy: ProposalPolicy,
            #[serde(default)]
            seed: u64,
        }
        let r = Raw::deserialize(d)?;
        OracleConfig::new(r.hidden_target, r.noise_half_units, r.proposal_policy, r.seed)
            .map_err(serde::de::Error::custom)
    }
}

/// Seeds an RNG from the config seed, a purpose tag and the plan contents.
fn plan_rng(seed: u64, purpose: &[u8], plan: &Plan) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose);
    h.update(plan.content_hash().as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

fn coverage_scores(config: &OracleConfig, plan: &Plan) -> [ScoreValue; CRITERIA] {
    let text = plan.full_text().to_lowercase();
    std::array::from_fn(|i| {
        let kws = &config.hidden_target[i];
        let hit = kws.iter().filter(|k| text.contains(&k.to_lowercase())).count();
        quantize(10.0 * hit as f64 / kws.len() as f64).expect("coverage lies in [0, 10]")
    })
}

/// Coverage scores, perturbed by seeded noise and clamped to the lattice.
pub fn oracle_score(config: &OracleConfig, plan: &Plan) -> ScoreVector {
    let clean = coverage_scores(config, plan);
    if config.noise_half_units == 0 {
        return ScoreVector(clean);
    }
    let mut rng = plan_rng(config.seed, b"score", plan);
    let n = config.noise_half_units as i32;
    ScoreVector(clean.map(|s| {
        let jitter = rng.random_range(-n..=n);
        let units = (s.half_units() as i32 + jitter).clamp(0, MAX_HALF_UNITS as i32);
        ScoreValue::from_half_units(units as u8).expect("clamped")
    }))
}

fn append_edit(plan: &Plan, text: &str) -> Edit {
    let text = text.to_string();
    match plan.items.last() {
        Some(last) => Edit::InsertAfter { target_id: last.item_id.clone(), new_text: text },
        None => Edit::InsertAtStart { new_text: text },
    }
}

/// Noise-free change in scores if `edits` were applied to `plan`.
fn exact_deltas(config: &OracleConfig, plan: &Plan, edits: &[Edit]) -> Option<[ScoreDelta; CRITERIA]> {
    let after = crate::plan::apply_proposal(plan, edits).ok()?;
    let before = coverage_scores(config, plan);
    let after = coverage_scores(config, &after);
    Some(std::array::from_fn(|i| ScoreDelta::between(before[i], after[i])))
}

/// Appends one item naming a missing keyword, or abstains when none is missing.
pub fn oracle_propose(config: &OracleConfig, plan: &Plan, weights: &Weights) -> Decision<ProposalDraft> {
    let missing = config.missing(plan);
    if missing.is_empty() {
        return Decision::Abstain;
    }
    let candidates: Vec<(Edit, [ScoreDelta; CRITERIA], &str)> = missing
        .iter()
        .map(|(_, kw)| {
            let edit = append_edit(plan, kw);
            let deltas = exact_deltas(config, plan, std::slice::from_ref(&edit)).expect("append is always valid");
            (edit, deltas, *kw)
        })
        .collect();
    let pick = match config.proposal_policy {
        ProposalPolicy::Greedy => {
            let mut best = 0;
            for (i, c) in candidates.iter().enumerate() {
                if gain_key(weights.weighted_gain(&c.1)) > gain_key(weights.weighted_gain(&candidates[best].1)) {
                    best = i;
                }
            }
            best
        }
        ProposalPolicy::Random => plan_rng(config.seed, b"propose", plan).random_range(0..candidates.len()),
    };
    let (edit, deltas, kw) = candidates.into_iter().nth(pick).expect("index in range");
    let rationale = format!("Adds \"{}\", which the plan does not yet address.", kw);
    Decision::Act(ProposalDraft::new(vec![edit], rationale, deltas).expect("oracle drafts are well formed"))
}

/// Votes for the proposal with the largest true weighted gain, or holds
/// steady when nothing on the table helps.
fn oracle_vote(config: &OracleConfig, state: &SessionState) -> Choice {
    let Some(cur) = state.current_iteration() else { return Choice::HoldSteady };
    let weights = state.weights();
    let mut best: Option<(i64, &crate::plan::Proposal)> = None;
    for p in &cur.proposals {
        let Some(deltas) = exact_deltas(config, &state.plan, &p.edits) else { continue };
        let gain = gain_key(weights.weighted_gain(&deltas));
        if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, p));
        }
    }
    match best {
        Some((_, p)) => Choice::Proposal(p.proposal_id.clone()),
        None => Choice::HoldSteady,
    }
}

/// [`OracleConfig`] wrapped as a session participant.
#[derive(Debug, Clone)]
pub struct OracleParticipant {
    pub config: OracleConfig,
}

impl OracleParticipant {
    pub fn new(config: OracleConfig) -> Self {
        OracleParticipant { config }
    }
}

impl Participant for OracleParticipant {
    fn score(&mut self, state: &SessionState) -> Decision<ScoreVector> {
        Decision::Act(oracle_score(&self.config, &state.plan))
    }

    fn propose(&mut self, state: &SessionState) -> Decision<ProposalDraft> {
        oracle_propose(&self.config, &state.plan, state.weights())
    }

    fn vote(&mut self, state: &SessionState) -> Decision<Choice> {
        Decision::Act(oracle_vote(&self.config, state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_weights;

    fn config(target: [&[&str]; 3], noise: u32) -> OracleConfig {
        let target = target.map(|kws| kws.iter().map(|s| s.to_string()).collect());
        OracleConfig::new(target, noise, ProposalPolicy::Greedy, 7).unwrap()
    }

    fn values(s: ScoreVector) -> [f64; 3] {
        s.0.map(|v| v.value())
    }

    #[test]
    fn full_and_zero_coverage() {
        let cfg = config([&["alpha"], &["beta"], &["gamma"]], 0);
        let all = Plan::draft(&["Alpha and BETA", "gamma"]).unwrap();
        assert_eq!(values(oracle_score(&cfg, &all)), [10.0; 3]);
        let none = Plan::draft(&["nothing relevant"]).unwrap();
        assert_eq!(values(oracle_score(&cfg, &none)), [0.0; 3]);
    }

    #[test]
    fn partial_coverage_on_lattice() {
        let cfg = config([&["a1", "a2", "a3", "a4"], &["b"], &["c"]], 0);
        let plan = Plan::draft(&["a1 a2", "a3"]).unwrap();
        assert_eq!(values(oracle_score(&cfg, &plan))[0], 7.5);
        // 1 of 3 -> 3.333 -> 3.5
        let cfg = config([&["x", "y", "z"], &["b"], &["c"]], 0);
        let plan = Plan::draft(&["x"]).unwrap();
        assert_eq!(values(oracle_score(&cfg, &plan))[0], 3.5);
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let cfg = config([&["a", "b"], &["c", "d"], &["e", "f"]], 2);
        let plan = Plan::draft(&["a", "c"]).unwrap();
        let first = oracle_score(&cfg, &plan);
        assert_eq!(first, oracle_score(&cfg, &plan));
        for (noisy, clean) in first.0.iter().zip(coverage_scores(&cfg, &plan)) {
            assert!((noisy.half_units() as i32 - clean.half_units() as i32).abs() <= 2);
        }
    }

    #[test]
    fn abstains_when_nothing_missing() {
        let cfg = config([&["a"], &["b"], &["c"]], 0);
        let plan = Plan::draft(&["a b c"]).unwrap();
        assert_eq!(oracle_propose(&cfg, &plan, &Weights::equal()), Decision::Abstain);
    }

    #[test]
    fn greedy_claims_exact_change() {
        let cfg = config([&["k1", "k2"], &["m1", "m2", "m3", "m4"], &["n1", "n2", "n3", "n4"]], 0);
        let plan = Plan::draft(&["k1", "m1 m2 m3 m4", "n1 n2 n3 n4"]).unwrap();
        let w = normalize_weights([2.0, 1.0, 1.0]).unwrap();
        let Decision::Act(draft) = oracle_propose(&cfg, &plan, &w) else { panic!("expected a proposal") };
        assert_eq!(draft.claimed_deltas.map(|d| d.value::<f64>()), [5.0, 0.0, 0.0]);
        assert_eq!(w.weighted_gain(&draft.claimed_deltas), 2.5);
        let after = crate::plan::apply_proposal(&plan, &draft.edits).unwrap();
        let (b, a) = (oracle_score(&cfg, &plan), oracle_score(&cfg, &after));
        assert_eq!(values(a)[0] - values(b)[0], 5.0);
    }

    #[test]
    fn greedy_prefers_heavier_criterion() {
        let cfg = config([&["a1", "a2", "a3", "a4"], &["b1", "b2", "b3", "b4"], &["c"]], 0);
        let plan = Plan::draft(&["start"]).unwrap();
        let w = normalize_weights([1.0, 3.0, 0.0]).unwrap();
        let Decision::Act(draft) = oracle_propose(&cfg, &plan, &w) else { panic!() };
        assert_eq!(draft.edits, vec![Edit::insert_after(&plan.items[0].item_id, "b1").unwrap()]);
    }

    #[test]
    fn random_policy_is_seeded() {
        let mut cfg = config([&["a1", "a2", "a3", "a4"], &["b1", "b2"], &["c1", "c2"]], 0);
        cfg.proposal_policy = ProposalPolicy::Random;
        let plan = Plan::draft(&["start"]).unwrap();
        let w = Weights::equal();
        assert_eq!(oracle_propose(&cfg, &plan, &w), oracle_propose(&cfg, &plan, &w));
    }

    #[test]
    fn rejects_empty_partition() {
        let target = [vec!["a".to_string()], vec![], vec!["c".to_string()]];
        assert!(OracleConfig::new(target, 0, ProposalPolicy::Greedy, 0).is_err());
    }
}
