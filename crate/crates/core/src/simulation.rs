//! Batch sessions driven entirely by oracle participants.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::driver::{Driver, Halt};
use crate::error::{Error, Result};
use crate::journal::{JournalSink, MemorySink};
use crate::model::{preset_schema, Goal, CRITERIA};
use crate::participants::{
    Capability, OracleConfig, OracleParticipant, ParticipantDescriptor, ParticipantId, ProposalPolicy,
};
use crate::session::{FixedClock, Phase, Session, SessionId, SessionParams};
use crate::Convergence;

pub const HUMAN_ID: &str = "expert";
pub const AI_ID: &str = "assistant";

fn default_weights() -> [f64; CRITERIA] {
    [1.0; CRITERIA]
}

fn default_plan() -> Vec<String> {
    vec!["Draft the outline".to_string()]
}

/// One oracle session, minus the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub hidden_target: [Vec<String>; CRITERIA],
    #[serde(default)]
    pub noise_half_units: u32,
    #[serde(default)]
    pub proposal_policy: ProposalPolicy,
    #[serde(default = "default_weights")]
    pub weights: [f64; CRITERIA],
    #[serde(default = "default_plan")]
    pub initial_plan: Vec<String>,
    #[serde(default)]
    pub convergence: Convergence,
}

impl SimulationConfig {
    pub fn new(hidden_target: [Vec<String>; CRITERIA], noise_half_units: u32, proposal_policy: ProposalPolicy) -> Self {
        SimulationConfig {
            hidden_target,
            noise_half_units,
            proposal_policy,
            weights: default_weights(),
            initial_plan: default_plan(),
            convergence: Convergence::default(),
        }
    }

    fn oracle(&self, seed: u64) -> Result<OracleConfig> {
        OracleConfig::new(self.hidden_target.clone(), self.noise_half_units, self.proposal_policy, seed)
    }

    /// Session parameters with an oracle expert and an oracle assistant.
    pub fn params(&self) -> Result<SessionParams> {
        Ok(SessionParams {
            goal: Goal::new("Cover the target", "Reach full coverage of the hidden keyword target", "")?,
            schema: preset_schema("iron_triangle", None)?,
            weights: self.weights,
            plan: self.initial_plan.clone(),
            participants: vec![
                ParticipantDescriptor::human(HUMAN_ID, &[Capability::Scorer, Capability::Voter]),
                ParticipantDescriptor::ai(AI_ID, &Capability::ALL),
            ],
            convergence: self.convergence,
            merge_mode: Default::default(),
            ai_timeout_seconds: 60,
        })
    }

    /// Oracles for both roster members. The expert's seed is derived from
    /// the run seed so the two scorers draw independent noise.
    pub fn driver(&self, seed: u64) -> Result<Driver> {
        let expert_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        Ok(Driver::new()
            .with(ParticipantId::new(HUMAN_ID), Box::new(OracleParticipant::new(self.oracle(expert_seed)?)))
            .with(ParticipantId::new(AI_ID), Box::new(OracleParticipant::new(self.oracle(seed)?))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutcome {
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub initial_aggregate: f64,
    pub final_aggregate: f64,
    #[serde(skip)]
    pub history: Vec<f64>,
    #[serde(skip)]
    pub phase: Phase,
}

/// Fixed timestamp for simulated journals so reruns are byte-identical.
pub fn simulation_epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-01-01T00:00:00Z").expect("valid timestamp").with_timezone(&Utc)
}

pub fn session_id(seed: u64) -> SessionId {
    SessionId::new(format!("sim-{}", seed))
}

/// Runs one seeded oracle session to its end and returns it with a summary.
pub fn run_simulation(
    config: &SimulationConfig,
    seed: u64,
    sink: Option<Box<dyn JournalSink>>,
) -> Result<(SimulationOutcome, Session)> {
    let sink = sink.unwrap_or_else(|| Box::new(MemorySink));
    let clock = Arc::new(FixedClock(simulation_epoch()));
    let mut session = Session::create(session_id(seed), config.params()?, sink, clock)?;
    let mut driver = config.driver(seed)?;
    match driver.run(&mut session)? {
        Halt::Finished(_) => {}
        Halt::WaitingOn(who) => {
            return Err(Error::Validation(format!("simulation stalled waiting on {:?}", who)));
        }
    }
    let history: Vec<f64> = session.state().iterations.iter().map(|r| r.aggregate.0).collect();
    let outcome = SimulationOutcome {
        seed,
        iterations: history.len(),
        converged: session.phase() == Phase::Converged,
        initial_aggregate: history.first().copied().unwrap_or(0.0),
        final_aggregate: history.last().copied().unwrap_or(0.0),
        history,
        phase: session.phase(),
    };
    Ok((outcome, session))
}
