//! HTTP routes.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use indigo_core::model::SchemaPreset;
use indigo_core::participants::ParticipantId;
use indigo_core::{Choice, Error, ErrorCode, Event, ProposalDraft, ScoreVector, SessionState};

use crate::registry::{CreateRequest, Hosted, Registry};

pub const MAX_WAIT_SECONDS: u64 = 30;

pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_for(code: ErrorCode) -> StatusCode {
    match code {
        ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorCode::Phase | ErrorCode::Conflict | ErrorCode::StaleTarget => StatusCode::CONFLICT,
        ErrorCode::Authorization => StatusCode::FORBIDDEN,
        ErrorCode::NotFound => StatusCode::NOT_FOUND,
        ErrorCode::Corruption => StatusCode::INTERNAL_SERVER_ERROR,
        ErrorCode::UpstreamAdapter => StatusCode::BAD_GATEWAY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.code();
        let mut body = json!({ "code": code.as_str(), "message": self.0.to_string() });
        if let Error::Parse { line, .. } = &self.0 {
            body["details"] = json!({ "line": line });
        }
        (status_for(code), Json(body)).into_response()
    }
}

/// JSON body whose rejections come back as validation errors.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError(Error::Validation(rejection_text(e)))),
        }
    }
}

fn rejection_text(e: JsonRejection) -> String {
    e.body_text()
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<Registry>;

pub fn router(registry: Shared) -> Router {
    Router::new()
        .route("/v1/presets", get(presets))
        .route("/v1/sessions", post(create).get(list))
        .route("/v1/sessions/{id}", get(snapshot))
        .route("/v1/sessions/{id}/events", get(events))
        .route("/v1/sessions/{id}/scores", post(scores))
        .route("/v1/sessions/{id}/proposals", post(proposals))
        .route("/v1/sessions/{id}/ballots", post(ballots))
        .route("/v1/sessions/{id}/weights", post(weights))
        .route("/v1/sessions/{id}/abandon", post(abandon))
        .with_state(registry)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
}

fn caller(registry: &Registry, id: &str, headers: &HeaderMap) -> ApiResult<(Arc<Hosted>, ParticipantId)> {
    let hosted = registry.get(id)?;
    let pid = hosted.authenticate(bearer(headers))?;
    Ok((hosted, pid))
}

#[derive(Serialize)]
struct PresetInfo {
    id: &'static str,
    criteria: Vec<indigo_core::Criterion>,
    needs_third_criterion: bool,
}

pub fn preset_list() -> Vec<Value> {
    SchemaPreset::ALL
        .iter()
        .map(|p| {
            serde_json::to_value(PresetInfo {
                id: p.id(),
                criteria: p.fixed_criteria(),
                needs_third_criterion: p.needs_third_criterion(),
            })
            .expect("preset serializes")
        })
        .collect()
}

async fn presets() -> Json<Vec<Value>> {
    Json(preset_list())
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    tokens: BTreeMap<String, String>,
    state: SessionState,
}

async fn create(State(reg): State<Shared>, Body(req): Body<CreateRequest>) -> ApiResult<impl IntoResponse> {
    let (hosted, tokens) = reg.create(req)?;
    let state = hosted.snapshot().state.clone();
    Ok((StatusCode::CREATED, Json(Created { session_id: hosted.id.to_string(), tokens, state })))
}

async fn list(State(reg): State<Shared>) -> Json<Vec<String>> {
    Json(reg.ids())
}

async fn snapshot(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<SessionState>> {
    let (hosted, _) = caller(&reg, &id, &headers)?;
    Ok(Json(hosted.snapshot().state.clone()))
}

#[derive(Deserialize)]
struct EventsQuery {
    after: Option<u64>,
    /// Long-poll budget in seconds, capped at 30.
    wait: Option<u64>,
}

#[derive(Serialize)]
struct EventPage {
    events: Vec<Event>,
    phase: indigo_core::Phase,
    last_seq: u64,
}

async fn events(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> ApiResult<Json<EventPage>> {
    let (hosted, _) = caller(&reg, &id, &headers)?;
    let wait = Duration::from_secs(q.wait.unwrap_or(MAX_WAIT_SECONDS).min(MAX_WAIT_SECONDS));
    let deadline = tokio::time::Instant::now() + wait;
    let mut rx = hosted.subscribe();
    loop {
        let snap = rx.borrow_and_update().clone();
        let fresh: Vec<Event> = snap.events.iter().filter(|e| q.after.is_none_or(|a| e.seq > a)).cloned().collect();
        let done = !fresh.is_empty() || snap.state.phase.is_terminal();
        if done || tokio::time::timeout_at(deadline, rx.changed()).await.is_err() {
            return Ok(Json(EventPage { events: fresh, phase: snap.state.phase, last_seq: snap.state.last_seq }));
        }
    }
}

#[derive(Deserialize)]
struct ScoresBody {
    scores: ScoreVector,
}

async fn scores(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(body): Body<ScoresBody>,
) -> ApiResult<Json<SessionState>> {
    let (hosted, pid) = caller(&reg, &id, &headers)?;
    hosted.command(|s| s.submit_scores(&pid, body.scores)).await?;
    Ok(Json(hosted.snapshot().state.clone()))
}

#[derive(Serialize)]
struct ProposalAccepted {
    proposal_id: Option<String>,
    state: SessionState,
}

/// Either a proposal draft or `{"abstain": true}`.
async fn proposals(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(body): Body<Value>,
) -> ApiResult<Json<ProposalAccepted>> {
    let (hosted, pid) = caller(&reg, &id, &headers)?;
    let proposal_id = if body.get("abstain").and_then(Value::as_bool) == Some(true) {
        hosted.command(|s| s.abstain(&pid)).await?;
        None
    } else {
        let draft: ProposalDraft = serde_json::from_value(body).map_err(|e| Error::Validation(e.to_string()))?;
        Some(hosted.command(|s| s.submit_proposal(&pid, draft)).await?.to_string())
    };
    Ok(Json(ProposalAccepted { proposal_id, state: hosted.snapshot().state.clone() }))
}

#[derive(Deserialize)]
struct BallotBody {
    choice: Choice,
}

async fn ballots(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(body): Body<BallotBody>,
) -> ApiResult<Json<SessionState>> {
    let (hosted, pid) = caller(&reg, &id, &headers)?;
    hosted.command(|s| s.cast_ballot(&pid, body.choice)).await?;
    Ok(Json(hosted.snapshot().state.clone()))
}

#[derive(Deserialize)]
struct WeightsBody {
    weights: [f64; 3],
}

async fn weights(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(body): Body<WeightsBody>,
) -> ApiResult<Json<SessionState>> {
    let (hosted, pid) = caller(&reg, &id, &headers)?;
    hosted.command(|s| s.update_weights(&pid, body.weights)).await?;
    Ok(Json(hosted.snapshot().state.clone()))
}

#[derive(Deserialize)]
struct AbandonBody {
    #[serde(default)]
    reason: String,
}

async fn abandon(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(body): Body<AbandonBody>,
) -> ApiResult<Json<SessionState>> {
    let (hosted, pid) = caller(&reg, &id, &headers)?;
    hosted.command(|s| s.abandon(&pid, &body.reason)).await?;
    Ok(Json(hosted.snapshot().state.clone()))
}
