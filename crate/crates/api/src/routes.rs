//! Endpoint handlers.
//!
//! Public: status, notices, panel, route. Logger token: events. Signed in
//! (either role): analytics, logs, manual mode changes. Admin only: sign-in
//! history. Authorisation is checked before any parameter validation.

use std::collections::BTreeSet;
use std::str::FromStr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use vt_core::analytics::{Aggregate, Analytics, LogKind};
use vt_core::planner::{plan_route, RouteQuery};
use vt_core::status::TransitionSource;
use vt_core::store::{SignInOutcome, SignInRecord};
use vt_core::wire::WireEvent;
use vt_core::{LiftId, Location, OperationMode, QueryScope, TimeWindow, Timestamp};

use crate::auth::{Role, Session};
use crate::error::ApiError;
use crate::service::AppState;

pub const LOGGER_ID_HEADER: &str = "x-logger-id";
pub const LOGGER_TOKEN_HEADER: &str = "x-logger-token";
pub const SENT_AT_HEADER: &str = "x-sent-at";

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/status", get(status))
        .route("/api/v1/notices", get(notices))
        .route("/api/v1/panel/{building}/{level}", get(panel))
        .route("/api/v1/route", post(route))
        .route("/api/v1/events", post(events))
        .route("/api/v1/analytics/wait-times", get(wait_times))
        .route("/api/v1/analytics/hall-calls", get(hall_calls))
        .route("/api/v1/analytics/direction-split", get(direction_split))
        .route("/api/v1/analytics/mode-split", get(mode_split))
        .route("/api/v1/logs/{kind}", get(logs))
        .route("/api/v1/signin-history", get(signin_history))
        .route("/api/v1/lifts/{id}/mode", post(set_mode))
        .route("/api/v1/session", post(sign_in).delete(sign_out))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed here")
        })
        .with_state(state)
}

type ApiResult<T> = Result<T, ApiError>;
type Params = Query<Vec<(String, String)>>;

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get("authorization")?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

fn session(state: &AppState, headers: &HeaderMap) -> Option<Session> {
    state.sessions.lookup(bearer(headers)?, state.clock.now())
}

fn signed_in(state: &AppState, headers: &HeaderMap) -> ApiResult<Session> {
    session(state, headers).ok_or_else(ApiError::unauthenticated)
}

fn admin(state: &AppState, headers: &HeaderMap) -> ApiResult<Session> {
    let s = signed_in(state, headers)?;
    if s.role == Role::Admin {
        Ok(s)
    } else {
        Err(ApiError::forbidden())
    }
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

struct QueryView<'a>(&'a [(String, String)]);

impl<'a> QueryView<'a> {
    /// Rejects unknown and repeated parameters.
    fn check(params: &'a [(String, String)], allowed: &[&str]) -> ApiResult<Self> {
        let mut seen = BTreeSet::new();
        for (k, _) in params {
            if !allowed.contains(&k.as_str()) {
                return Err(ApiError::bad_request("unknown_parameter", format!("unknown query parameter {k:?}")));
            }
            if !seen.insert(k.as_str()) {
                return Err(ApiError::bad_request("duplicate_parameter", format!("query parameter {k:?} given twice")));
            }
        }
        Ok(QueryView(params))
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn scope_of(state: &AppState, q: &QueryView) -> ApiResult<QueryScope> {
    let scope = match (q.get("lift"), q.get("building")) {
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request("conflicting_scope", "give either lift or building, not both"));
        }
        (Some(l), None) => QueryScope::SingleLift(LiftId::from_str(l)?),
        (None, Some(b)) => QueryScope::Building(b.to_string()),
        (None, None) => QueryScope::AllLifts,
    };
    Ok(scope.checked(&state.site)?)
}

/// Defaults to the trailing 24 hours; a lone bound extends 24 hours the other way
/// (or to now, for a lone start).
fn window_of(now: Timestamp, q: &QueryView) -> ApiResult<TimeWindow> {
    let parse = |k: &str| q.get(k).map(Timestamp::parse).transpose();
    let (start, end) = (parse("start")?, parse("end")?);
    Ok(match (start, end) {
        (None, None) => TimeWindow::trailing_day(now),
        (Some(s), None) => TimeWindow::new(s, now)?,
        (None, Some(e)) => TimeWindow::new(e.plus_secs(-86_400), e)?,
        (Some(s), Some(e)) => TimeWindow::new(s, e)?,
    })
}

#[derive(Serialize)]
struct Envelope<T> {
    scope: QueryScope,
    window: TimeWindow,
    result: T,
}

fn analytics_request(
    state: &AppState,
    headers: &HeaderMap,
    params: &[(String, String)],
    extra: &[&str],
) -> ApiResult<(QueryScope, TimeWindow)> {
    signed_in(state, headers)?;
    let mut allowed = vec!["lift", "building", "start", "end"];
    allowed.extend_from_slice(extra);
    let q = QueryView::check(params, &allowed)?;
    Ok((scope_of(state, &q)?, window_of(state.clock.now(), &q)?))
}

#[derive(Serialize)]
struct StatusBody {
    as_of: Timestamp,
    lifts: Vec<vt_core::status::LiftStatus>,
}

async fn status(State(state): State<AppState>) -> Json<StatusBody> {
    let now = state.clock.now();
    Json(StatusBody { as_of: now, lifts: state.ingest.current_statuses(now) })
}

#[derive(Serialize)]
struct NoticesBody {
    as_of: Timestamp,
    notices: Vec<vt_core::status::NoticeEntry>,
}

async fn notices(State(state): State<AppState>) -> Json<NoticesBody> {
    Json(NoticesBody { as_of: state.clock.now(), notices: state.ingest.status().notice_board() })
}

#[derive(Serialize)]
struct PanelEstimate {
    to_level: i32,
    estimate_s: Aggregate<f64>,
}

#[derive(Serialize)]
struct PanelBody {
    building: String,
    from_level: i32,
    window: TimeWindow,
    estimates: Vec<PanelEstimate>,
}

async fn panel(
    State(state): State<AppState>,
    Path((building, level)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult<Json<PanelBody>> {
    let q = QueryView::check(&params, &["start", "end"])?;
    let window = window_of(state.clock.now(), &q)?;
    let from_level: i32 =
        level.parse().map_err(|_| ApiError::bad_request("invalid_level", format!("{level:?} is not a level number")))?;
    let estimates = Analytics::new(&state.store, &state.site)
        .panel_estimates(&building, from_level, &window)?
        .into_iter()
        .map(|(to_level, estimate_s)| PanelEstimate { to_level, estimate_s })
        .collect();
    Ok(Json(PanelBody { building, from_level, window, estimates }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LocationInput {
    Text(String),
    Fields(Location),
}

impl LocationInput {
    fn resolve(self) -> ApiResult<Location> {
        match self {
            LocationInput::Fields(l) => Ok(l),
            LocationInput::Text(s) => Location::from_str(&s)
                .map_err(|_| ApiError::bad_request("invalid_location", format!("{s:?} is not BUILDING:LEVEL"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteRequest {
    origin: LocationInput,
    destination: LocationInput,
    #[serde(default)]
    at: Option<Timestamp>,
}

async fn route(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<vt_core::planner::RoutePlan>> {
    let req: RouteRequest = json_body(&body)?;
    let query = RouteQuery::new(req.origin.resolve()?, req.destination.resolve()?, req.at.unwrap_or(state.clock.now()));
    let waits = Analytics::new(&state.store, &state.site);
    let board = state.ingest.status();
    Ok(Json(plan_route(&query, &state.graph, &waits, board.as_ref())?))
}

#[derive(Serialize)]
struct Appended {
    appended: usize,
}

async fn events(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let header = |name: &str| headers.get(name).and_then(|v| v.to_str().ok());
    let (Some(id), Some(token)) = (header(LOGGER_ID_HEADER), header(LOGGER_TOKEN_HEADER)) else {
        return Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized_logger",
            "X-Logger-Id and X-Logger-Token are required",
        ));
    };
    state.ingest.authenticate(id, token)?;
    let sent_at = header(SENT_AT_HEADER).map(Timestamp::parse).transpose()?;
    let frame = state.ingest.decode(&body, id, sent_at)?;
    let appended = state.ingest.ingest_frame(frame, state.clock.now())?;
    Ok((StatusCode::ACCEPTED, Json(Appended { appended })).into_response())
}

#[derive(Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum Stat {
    Mean,
    Max,
    Min,
}

#[derive(Serialize)]
struct WaitBody {
    scope: QueryScope,
    window: TimeWindow,
    #[serde(skip_serializing_if = "Option::is_none")]
    stat: Option<Stat>,
    result: serde_json::Value,
}

async fn wait_times(State(state): State<AppState>, headers: HeaderMap, Query(params): Params) -> ApiResult<Json<WaitBody>> {
    let (scope, window) = analytics_request(&state, &headers, &params, &["stat"])?;
    let stat = match params.iter().find(|(k, _)| k == "stat").map(|(_, v)| v.as_str()) {
        None => None,
        Some("mean") => Some(Stat::Mean),
        Some("max") => Some(Stat::Max),
        Some("min") => Some(Stat::Min),
        Some(other) => {
            return Err(ApiError::bad_request("invalid_stat", format!("stat {other:?} is not mean, max or min")));
        }
    };
    let stats = Analytics::new(&state.store, &state.site).wait_time_stats(&scope, &window);
    let result = match stat {
        None => serde_json::to_value(stats),
        Some(stat) => {
            let pick = |a: Aggregate<vt_core::analytics::DirectionStats>| {
                a.map(|d| match stat {
                    Stat::Mean => d.mean_s,
                    Stat::Max => f64::from(d.max_s),
                    Stat::Min => f64::from(d.min_s),
                })
            };
            serde_json::to_value(serde_json::json!({ "up": pick(stats.up), "down": pick(stats.down) }))
        }
    }
    .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(WaitBody { scope, window, stat, result }))
}

async fn hall_calls(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(params): Params,
) -> ApiResult<Json<Envelope<Aggregate<vt_core::analytics::HallCallCounts>>>> {
    let (scope, window) = analytics_request(&state, &headers, &params, &[])?;
    let result = Analytics::new(&state.store, &state.site).hall_call_count(&scope, &window);
    Ok(Json(Envelope { scope, window, result }))
}

async fn direction_split(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(params): Params,
) -> ApiResult<Json<Envelope<Aggregate<vt_core::analytics::DirectionSplit>>>> {
    let (scope, window) = analytics_request(&state, &headers, &params, &[])?;
    let result = Analytics::new(&state.store, &state.site).direction_percentages(&scope, &window);
    Ok(Json(Envelope { scope, window, result }))
}

async fn mode_split(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(params): Params,
) -> ApiResult<Json<Envelope<Aggregate<vt_core::analytics::ModeSplit>>>> {
    let (scope, window) = analytics_request(&state, &headers, &params, &[])?;
    let result = Analytics::new(&state.store, &state.site).mode_percentages(&scope, &window);
    Ok(Json(Envelope { scope, window, result }))
}

#[derive(Serialize)]
struct LogBody {
    kind: String,
    scope: QueryScope,
    window: TimeWindow,
    count: usize,
    rows: Vec<WireEvent>,
}

async fn logs(
    State(state): State<AppState>,
    Path(kind): Path<String>,
    headers: HeaderMap,
    Query(params): Params,
) -> ApiResult<Json<LogBody>> {
    let (scope, window) = analytics_request(&state, &headers, &params, &[])?;
    let log_kind = match kind.as_str() {
        "general" => LogKind::General,
        "hall" => LogKind::HallCall,
        "emergency" => LogKind::Emergency,
        _ => return Err(ApiError::not_found("unknown_log_kind", format!("no {kind:?} log (general, hall, emergency)"))),
    };
    let rows: Vec<WireEvent> =
        Analytics::new(&state.store, &state.site).event_log(log_kind, &scope, &window).iter().map(WireEvent::from).collect();
    Ok(Json(LogBody { kind, scope, window, count: rows.len(), rows }))
}

#[derive(Serialize)]
struct SignInHistory {
    window: TimeWindow,
    records: Vec<SignInRecord>,
}

async fn signin_history(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(params): Params,
) -> ApiResult<Json<SignInHistory>> {
    admin(&state, &headers)?;
    let q = QueryView::check(&params, &["start", "end"])?;
    let window = window_of(state.clock.now(), &q)?;
    Ok(Json(SignInHistory { window, records: state.store.query_signin_history(&window) }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeRequest {
    mode: OperationMode,
}

#[derive(Serialize)]
struct ModeResponse {
    changed: bool,
    transition: Option<vt_core::status::StatusTransition>,
}

async fn set_mode(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<ModeResponse>> {
    let who = signed_in(&state, &headers)?;
    let lift = LiftId::from_str(&id)?;
    let req: ModeRequest = json_body(&body)?;
    let transition =
        state.ingest.status().apply_mode_change(&lift, req.mode, state.clock.now(), TransitionSource::Manual)?;
    tracing::info!(%lift, mode = %req.mode, by = %who.user_id, changed = transition.is_some(), "manual mode change");
    Ok(Json(ModeResponse { changed: transition.is_some(), transition }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignInRequest {
    user_id: String,
    password: String,
    #[serde(default)]
    note: String,
}

#[derive(Serialize)]
struct SignInResponse {
    token: String,
    #[serde(flatten)]
    session: Session,
}

async fn sign_in(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let now = state.clock.now();
    let record = |user_id: String, outcome, note: String| {
        state.store.record_signin(SignInRecord { user_id, at: now, outcome, note })
    };
    let req: SignInRequest = match json_body(&body) {
        Ok(r) => r,
        Err(e) => {
            record(String::new(), SignInOutcome::Failure, "malformed sign-in request".into())?;
            return Err(e);
        }
    };
    match state.users.get(&req.user_id).filter(|u| u.verify(&req.password)) {
        Some(user) => {
            record(req.user_id, SignInOutcome::Success, req.note)?;
            let (token, session) = state.sessions.create(&user, now);
            Ok((StatusCode::CREATED, Json(SignInResponse { token, session })).into_response())
        }
        None => {
            record(req.user_id, SignInOutcome::Failure, req.note)?;
            Err(ApiError::new(StatusCode::UNAUTHORIZED, "invalid_credentials", "unknown user or wrong password"))
        }
    }
}

async fn sign_out(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<StatusCode> {
    signed_in(&state, &headers)?;
    let token = bearer(&headers).unwrap_or_default();
    state.sessions.revoke(token);
    Ok(StatusCode::NO_CONTENT)
}
