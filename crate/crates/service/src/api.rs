//! REST handlers.

use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use subtle::ConstantTimeEq;

use crate::pilot_log::LoggedRecord;
use crate::pool::PoolItem;
use crate::session::{Token, VerifyError};
use crate::AppState;
use spatial_captcha::difficulty::{fit_difficulty_model, write_pilot_csv, FitOptions, PilotRecord, DEFAULT_ALPHA};
use spatial_captcha::manifest::{Bin, FamilyType, Manifest, ParamDomain, ParamValue};
use spatial_captcha::pipeline::check_overrides;

/// Shortest response time logged, seconds.
const MIN_RESPONSE_TIME: f64 = 1e-3;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/challenge", post(issue))
        .route("/v1/challenge/{token}/answer", post(answer))
        .route("/v1/panels/{file}", get(panel))
        .route("/v1/admin/pilot.csv", get(pilot_csv))
        .route("/v1/admin/calibration/fit", post(fit))
        .route("/v1/admin/stats", get(stats))
        .route("/v1/admin/manifests", get(manifests))
        .route("/v1/admin/preview", post(preview))
        .with_state(state)
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body; an empty body reads as `{}`.
fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> ApiResult<T> {
    let text = if bytes.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { &bytes[..] };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn parse_family(s: Option<&str>) -> ApiResult<Option<FamilyType>> {
    s.map(|f| f.parse::<FamilyType>().map_err(ApiError::bad_request)).transpose()
}

fn parse_bin(s: Option<&str>) -> ApiResult<Option<Bin>> {
    s.map(|b| b.parse::<Bin>().map_err(|_| ApiError::bad_request(format!("unknown bin {b:?}")))).transpose()
}

fn random_index(n: usize) -> usize {
    let mut b = [0u8; 8];
    getrandom::fill(&mut b).expect("operating system RNG");
    (u64::from_le_bytes(b) % n.max(1) as u64) as usize
}

fn panel_urls(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| format!("/v1/panels/{}.png", t.as_str())).collect()
}

async fn health(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "pool": s.pool.len()}))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChallengeRequest {
    family: Option<String>,
    bin: Option<String>,
}

/// Everything a client sees before answering.
#[derive(Debug, Serialize)]
struct ChallengeResponse {
    token: String,
    family: FamilyType,
    prompt: String,
    candidates: Vec<String>,
    /// Stimulus first, then one panel per candidate in candidate order.
    panels: Vec<String>,
    issued_at: f64,
    expires_at: f64,
    bin: Option<Bin>,
}

async fn pick_or_generate(
    s: &Arc<AppState>,
    family: Option<FamilyType>,
    bin: Option<Bin>,
) -> ApiResult<(Arc<PoolItem>, Option<Bin>)> {
    if let Some(hit) = s.pool.choose(family, bin, random_index) {
        return Ok(hit);
    }
    let model = s.model();
    if bin.is_some() && model.is_none() {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", "no instance in that bin and no difficulty model"));
    }
    let state = s.clone();
    let made = tokio::task::spawn_blocking(move || state.pool.generate_one(family, bin, model.as_deref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match made {
        Ok(hit) => {
            s.counters.generated.fetch_add(1, Ordering::Relaxed);
            Ok(hit)
        }
        Err(e) => {
            tracing::warn!(error = %e, "on-demand generation failed");
            Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", "no instance available for this filter"))
        }
    }
}

async fn issue(State(s): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<Json<ChallengeResponse>> {
    let req: ChallengeRequest = body(&bytes)?;
    let family = parse_family(req.family.as_deref())?;
    let bin = parse_bin(req.bin.as_deref())?;
    let now = s.now();
    s.sessions.sweep(now, s.ttl());
    let (item, item_bin) = pick_or_generate(&s, family, bin).await?;
    let (token, panels) = s.sessions.open(item.clone(), item_bin, now, s.ttl());
    s.counters.issued.fetch_add(1, Ordering::Relaxed);
    let i = &item.instance;
    Ok(Json(ChallengeResponse {
        token: token.as_str().to_owned(),
        family: i.family,
        prompt: i.prompt.clone(),
        candidates: i.labels().into_iter().map(str::to_owned).collect(),
        panels: panel_urls(&panels),
        issued_at: now,
        expires_at: now + s.ttl(),
        bin: item_bin,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    label: String,
    /// Opaque client id; hashed with the server salt before logging.
    respondent: Option<String>,
}

async fn answer(State(s): State<Arc<AppState>>, Path(token): Path<String>, bytes: Bytes) -> ApiResult<Json<Value>> {
    let req: AnswerRequest = body(&bytes)?;
    let unknown = || ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no such session");
    let token = Token::parse(&token).ok_or_else(unknown)?;
    let now = s.now();
    let result = s.sessions.verify(&token, &req.label, now, s.ttl());
    let (verdict, session) = result.map_err(|e| {
        s.counters.rejected.fetch_add(1, Ordering::Relaxed);
        match e {
            VerifyError::Unknown => unknown(),
            VerifyError::Repeated => ApiError::new(StatusCode::CONFLICT, "already_answered", e.to_string()),
            VerifyError::Expired => ApiError::new(StatusCode::GONE, "expired", e.to_string()),
        }
    })?;
    s.counters.verified.fetch_add(1, Ordering::Relaxed);
    let who = req.respondent.as_deref().unwrap_or(&session.fallback_respondent);
    let row = LoggedRecord {
        at: now,
        record: PilotRecord {
            instance_id: session.item.instance.instance_id.clone(),
            respondent_id: s.respondent(who),
            response_time_s: verdict.response_time_s.max(MIN_RESPONSE_TIME),
            correct: verdict.correct,
        },
    };
    if let Err(e) = s.pilot.append(row) {
        tracing::error!(error = %e, "pilot log append failed");
    }
    Ok(Json(json!({
        "correct": verdict.correct,
        "response_time_s": verdict.response_time_s,
        "bin": verdict.bin,
    })))
}

async fn panel(State(s): State<Arc<AppState>>, Path(file): Path<String>) -> Response {
    let token = file.strip_suffix(".png").and_then(Token::parse);
    match token.and_then(|t| s.sessions.panel(&t, s.now())) {
        Some(bytes) => (
            [(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "no-store")],
            bytes,
        )
            .into_response(),
        None => ApiError::new(StatusCode::NOT_FOUND, "unknown_panel", "no such panel").into_response(),
    }
}

fn admin(s: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    let Some(expected) = s.config.admin_token.as_deref() else {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "not_found", "admin endpoints are disabled"));
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .unwrap_or("");
    if bool::from(given.as_bytes().ct_eq(expected.as_bytes())) {
        Ok(())
    } else {
        Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "admin token required"))
    }
}

#[derive(Debug, Deserialize)]
struct SinceQuery {
    since: Option<f64>,
}

async fn pilot_csv(State(s): State<Arc<AppState>>, headers: HeaderMap, Query(q): Query<SinceQuery>) -> ApiResult<Response> {
    admin(&s, &headers)?;
    let rows = s.pilot.since(q.since.unwrap_or(f64::NEG_INFINITY));
    let mut buf = Vec::new();
    write_pilot_csv(&rows, &mut buf).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitRequest {
    alpha: Option<f64>,
    smooth: Option<bool>,
}

async fn fit(State(s): State<Arc<AppState>>, headers: HeaderMap, bytes: Bytes) -> ApiResult<Json<Value>> {
    admin(&s, &headers)?;
    let req: FitRequest = body(&bytes)?;
    let opts = FitOptions {
        alpha: req.alpha.unwrap_or(DEFAULT_ALPHA),
        smooth: req.smooth.unwrap_or(false),
    };
    let state = s.clone();
    let result = tokio::task::spawn_blocking(move || {
        let instances = state.pool.instances();
        let known: std::collections::HashSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
        let all = state.pilot.since(f64::NEG_INFINITY);
        let total = all.len();
        let records: Vec<PilotRecord> = all.into_iter().filter(|r| known.contains(r.instance_id.as_str())).collect();
        let used = records.len();
        fit_difficulty_model(&records, &instances, state.pool.manifests(), opts).map(|m| (m, used, total - used))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let (model, used, dropped) = result.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "fit_failed", e.to_string()))?;
    if let Some(dir) = &s.config.state_dir {
        if let Err(e) = std::fs::write(dir.join(crate::MODEL_FILE), model.to_canonical_json()) {
            tracing::warn!(error = %e, "model not written");
        }
    }
    let summary = json!({
        "families": model.families.keys().map(|f| f.to_string()).collect::<Vec<_>>(),
        "thresholds": model.thresholds,
        "alpha": model.alpha,
        "instances": model.calibration.len(),
        "records_used": used,
        "records_dropped": dropped,
        "bin_counts": model.bin_counts(),
        "warnings": model.warnings,
    });
    s.install_model(model);
    Ok(Json(summary))
}

async fn stats(State(s): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult<Json<Value>> {
    admin(&s, &headers)?;
    let model = s.model();
    Ok(Json(json!({
        "pool": s.pool.len(),
        "sessions": s.sessions.counts(),
        "pilot_records": s.pilot.len(),
        "issued": s.counter(&s.counters.issued),
        "verified": s.counter(&s.counters.verified),
        "rejected": s.counter(&s.counters.rejected),
        "generated": s.counter(&s.counters.generated),
        "model": model.map(|m| json!({
            "families": m.families.keys().map(|f| f.to_string()).collect::<Vec<_>>(),
            "thresholds": m.thresholds,
        })),
    })))
}

fn domain_json(d: &ParamDomain) -> Value {
    match d {
        ParamDomain::Int { min, max, .. } => json!({"kind": "int", "min": min, "max": max}),
        ParamDomain::Real { min, max } => json!({"kind": "real", "min": min, "max": max}),
        ParamDomain::Enum { values, .. } => json!({"kind": "enum", "values": values}),
    }
}

/// Knob domains per manifest, for operator controls.
async fn manifests(State(s): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult<Json<Value>> {
    admin(&s, &headers)?;
    let list: Vec<Value> = s
        .pool
        .manifests()
        .iter()
        .map(|m| {
            let params: BTreeMap<&str, Value> = m.params.iter().map(|(k, d)| (k.as_str(), domain_json(d))).collect();
            json!({
                "key": m.key(),
                "family": m.family(),
                "ability": m.ability,
                "knobs": params,
                "difficulty_features": m.difficulty_features,
            })
        })
        .collect();
    Ok(Json(Value::Array(list)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreviewRequest {
    family: String,
    bin: Option<String>,
    #[serde(default)]
    overrides: BTreeMap<String, Value>,
}

/// JSON value to a knob value of the knob's declared kind.
fn knob_value(m: &Manifest, knob: &str, v: &Value) -> ApiResult<ParamValue> {
    let d = m.params.get(knob).ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_override", format!("unknown knob {knob}")))?;
    let bad = || ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_override", format!("{knob}: {v} does not fit the domain"));
    match (d, v) {
        (ParamDomain::Int { .. }, Value::Number(n)) => n.as_i64().map(ParamValue::Int).ok_or_else(bad),
        (ParamDomain::Real { .. }, Value::Number(n)) => n.as_f64().map(ParamValue::Real).ok_or_else(bad),
        (ParamDomain::Enum { .. }, Value::String(s)) => Ok(ParamValue::Enum(s.clone())),
        _ => Err(bad()),
    }
}

async fn preview(State(s): State<Arc<AppState>>, headers: HeaderMap, bytes: Bytes) -> ApiResult<Json<Value>> {
    admin(&s, &headers)?;
    let req: PreviewRequest = body(&bytes)?;
    let family = parse_family(Some(&req.family))?.expect("given");
    let bin = parse_bin(req.bin.as_deref())?;
    let manifest = s
        .pool
        .manifests()
        .iter()
        .find(|m| m.family() == family)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_family", "no manifest for this family"))?;
    let overrides = req
        .overrides
        .iter()
        .map(|(k, v)| knob_value(&manifest, k, v).map(|pv| (k.clone(), pv)))
        .collect::<ApiResult<BTreeMap<_, _>>>()?;
    check_overrides(&manifest, &overrides).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_override", e.to_string()))?;
    let model = s.model();
    if bin.is_some() && model.is_none() {
        return Err(ApiError::new(StatusCode::CONFLICT, "no_model", "bin previews need a fitted difficulty model"));
    }
    let state = s.clone();
    let made = tokio::task::spawn_blocking(move || state.pool.synthesize(&manifest, bin, model.as_deref(), overrides))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "infeasible", e.to_string()))?;
    let item = Arc::new(made);
    let expires_at = s.now() + s.ttl();
    let panels = s.sessions.register_panels(item.clone(), expires_at);
    let i = &item.instance;
    Ok(Json(json!({
        "family": i.family,
        "prompt": i.prompt,
        "candidates": i.labels(),
        "panels": panel_urls(&panels),
        "expires_at": expires_at,
        "predicted": i.difficulty,
    })))
}
