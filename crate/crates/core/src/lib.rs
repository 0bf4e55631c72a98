//! Session engine for a human and AI optimization loop over a plan.
//!
//! A plan is scored against three weighted criteria, participants propose
//! edits, a plurality vote picks one, and the loop repeats until the
//! weighted aggregate stops moving. Everything that happens is an event in
//! an append-only journal, and replaying the journal rebuilds the session.

pub mod driver;
pub mod error;
pub mod journal;
pub mod model;
pub mod participants;
pub mod plan;
pub mod scalar;
pub mod scoring;
pub mod session;
pub mod simulation;

pub use error::{Error, ErrorCode, Result};
pub use journal::{replay, Event, EventBody, Exchange, FileSink, Journal, JournalSink, MemorySink};
pub use model::{
    normalize_weights, preset_schema, quantize, Criterion, Goal, SchemaPreset, ScoreDelta, ScoreValue, ScoreVector,
    ScoringSchema, WeightVector,
};
pub use plan::{
    apply_edit, apply_proposal, inverse_edit, Edit, ItemId, Plan, PlanItem, Proposal, ProposalDraft, ProposalId,
};
pub use scalar::Scalar;
pub use scoring::{
    aggregate_score, check_convergence, merge_participant_scores, score_delta, AggregateScore, ConvergenceConfig,
    ConvergenceState, ConvergenceStatus, MergeMode,
};
pub use session::{Choice, Phase, Session, SessionId, SessionParams, SessionState};

pub type Weights = WeightVector<f64>;
pub type Aggregate = AggregateScore<f64>;
pub type Convergence = ConvergenceConfig<f64>;
