use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use captcha_service::{router, AppState, Clock, ManualClock, PilotLog, Pool, PoolItem, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use spatial_captcha::difficulty::{read_pilot_csv, DifficultyModel, PILOT_HEADER};
use spatial_captcha::manifest::{shipped_manifests, FamilyType, ParamDomain};
use spatial_captcha::pipeline::{synthesize_batch, BatchEntry, BatchOptions};
use tower::ServiceExt;

const ADMIN: &str = "test-admin-token";
const T0: f64 = 1_700_000_000.0;

/// Four instances per shipped family, synthesized once.
fn items() -> &'static [PoolItem] {
    static ITEMS: OnceLock<Vec<PoolItem>> = OnceLock::new();
    ITEMS.get_or_init(|| {
        let entries: Vec<BatchEntry> = shipped_manifests()
            .into_iter()
            .map(|manifest| BatchEntry { manifest, count: 4, mix: None })
            .collect();
        let data = synthesize_batch(&entries, 11, BatchOptions::default()).unwrap();
        data.artifacts.into_iter().map(|a| PoolItem::from_artifact(a).unwrap()).collect()
    })
}

struct Harness {
    app: Router,
    state: Arc<AppState>,
    clock: Arc<ManualClock>,
}

fn harness_with(config: ServiceConfig) -> Harness {
    let clock = Arc::new(ManualClock::at(T0));
    let pool = Pool::new(shipped_manifests(), config.seed);
    for item in items() {
        pool.push(item.clone());
    }
    let pilot = match &config.state_dir {
        Some(d) => PilotLog::open(d).unwrap(),
        None => PilotLog::in_memory(),
    };
    let state = Arc::new(AppState::new(config, clock.clone(), pool, pilot));
    Harness {
        app: router(state.clone()),
        state,
        clock,
    }
}

fn harness() -> Harness {
    harness_with(ServiceConfig {
        admin_token: Some(ADMIN.into()),
        respondent_salt: Some("salt".into()),
        ..Default::default()
    })
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    cache: Option<String>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }
}

async fn send(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let (content_type, cache) = {
        let head = |h| res.headers().get(h).map(|v: &header::HeaderValue| v.to_str().unwrap().to_owned());
        (head(header::CONTENT_TYPE), head(header::CACHE_CONTROL))
    };
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        cache,
        bytes,
    }
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    let req = Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap();
    send(app, req).await
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn admin_get(app: &Router, uri: &str) -> Reply {
    let req = Request::get(uri).header(header::AUTHORIZATION, format!("Bearer {ADMIN}")).body(Body::empty()).unwrap();
    send(app, req).await
}

async fn admin_post(app: &Router, uri: &str, body: Value) -> Reply {
    let req = Request::post(uri)
        .header(header::AUTHORIZATION, format!("Bearer {ADMIN}"))
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn set(ks: &[&str]) -> BTreeSet<String> {
    ks.iter().map(|s| s.to_string()).collect()
}

/// Every object key anywhere in `v`.
fn all_keys(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.insert(k.clone());
                all_keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| all_keys(x, out)),
        _ => {}
    }
}

/// PNG chunk types in file order.
fn png_chunks(bytes: &[u8]) -> Vec<String> {
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let mut at = 8;
    let mut out = Vec::new();
    while at + 8 <= bytes.len() {
        let len = u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        out.push(String::from_utf8_lossy(&bytes[at + 4..at + 8]).into_owned());
        at += 12 + len;
    }
    out
}

fn token_of(challenge: &Value) -> String {
    challenge["token"].as_str().unwrap().to_owned()
}

fn truth_for(h: &Harness, challenge: &Value) -> String {
    let token = captcha_service::Token::parse(&token_of(challenge)).unwrap();
    let rows = h.state.sessions.snapshot();
    let row = rows.iter().find(|r| r.token == token).unwrap();
    h.state.pool.find(&row.instance_id).unwrap().0.instance.correct_label.clone()
}

const CHALLENGE_KEYS: [&str; 8] = ["token", "family", "prompt", "candidates", "panels", "issued_at", "expires_at", "bin"];
const FORBIDDEN: [&str; 9] = [
    "instance_id",
    "correct_label",
    "correct",
    "params",
    "seed",
    "scene",
    "manifest",
    "near_miss_kinds",
    "difficulty",
];

#[tokio::test]
async fn client_responses_carry_no_answer_material() {
    let h = harness();
    let health = get(&h.app, "/v1/health").await;
    assert_eq!(health.status, StatusCode::OK);
    assert_eq!(keys(&health.json()), set(&["status", "pool"]));

    let ids: Vec<String> = items().iter().map(|i| i.instance.instance_id.clone()).collect();
    for family in FamilyType::ALL {
        let r = post(&h.app, "/v1/challenge", json!({"family": family.to_string()})).await;
        assert_eq!(r.status, StatusCode::OK);
        let c = r.json();
        assert_eq!(keys(&c), set(&CHALLENGE_KEYS));
        let mut seen = BTreeSet::new();
        all_keys(&c, &mut seen);
        for k in FORBIDDEN {
            assert!(!seen.contains(k), "{k} leaked in {c}");
        }
        let text = String::from_utf8(r.bytes.clone()).unwrap();
        assert!(ids.iter().all(|id| !text.contains(id.as_str())));

        let panels = c["panels"].as_array().unwrap();
        assert_eq!(panels.len(), c["candidates"].as_array().unwrap().len() + 1);
        for url in panels {
            let url = url.as_str().unwrap();
            assert!(url.starts_with("/v1/panels/") && url.ends_with(".png"));
            assert!(ids.iter().all(|id| !url.contains(id.as_str())));
            let p = get(&h.app, url).await;
            assert_eq!(p.status, StatusCode::OK);
            assert_eq!(p.content_type.as_deref(), Some("image/png"));
            assert_eq!(p.cache.as_deref(), Some("no-store"));
            let chunks = png_chunks(&p.bytes);
            assert!(chunks.iter().all(|t| !matches!(t.as_str(), "tEXt" | "zTXt" | "iTXt" | "eXIf")), "{chunks:?}");
        }

        let a = post(&h.app, &format!("/v1/challenge/{}/answer", token_of(&c)), json!({"label": "A"})).await;
        assert_eq!(a.status, StatusCode::OK);
        assert_eq!(keys(&a.json()), set(&["correct", "response_time_s", "bin"]));
        let again = post(&h.app, &format!("/v1/challenge/{}/answer", token_of(&c)), json!({"label": "A"})).await;
        assert_eq!(again.status, StatusCode::CONFLICT);
        assert_eq!(keys(&again.json()), set(&["error", "message"]));
    }
}

#[tokio::test]
async fn issued_tokens_and_panel_urls_are_distinct() {
    let h = harness();
    let mut tokens = BTreeSet::new();
    let mut urls = BTreeSet::new();
    for _ in 0..50 {
        let c = post(&h.app, "/v1/challenge", json!({})).await.json();
        assert!(tokens.insert(token_of(&c)));
        for u in c["panels"].as_array().unwrap() {
            assert!(urls.insert(u.as_str().unwrap().to_owned()));
        }
    }
}

#[tokio::test]
async fn correct_answer_verifies_and_logs_one_record() {
    let h = harness();
    let c = post(&h.app, "/v1/challenge", json!({"family": "polyomino"})).await.json();
    assert_eq!(c["family"], "polyomino");
    let truth = truth_for(&h, &c);
    h.clock.advance(4.25);
    let a = post(&h.app, &format!("/v1/challenge/{}/answer", token_of(&c)), json!({"label": truth, "respondent": "alice"})).await;
    let v = a.json();
    assert_eq!(v["correct"], true);
    assert!((v["response_time_s"].as_f64().unwrap() - 4.25).abs() < 1e-9);
    let rows = h.state.pilot.rows();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].record.respondent_id, h.state.respondent("alice"));
    assert_ne!(rows[0].record.respondent_id, "alice");
    assert!(rows[0].record.correct);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_duplicate_answers_verify_once() {
    let h = harness();
    let c = post(&h.app, "/v1/challenge", json!({})).await.json();
    let truth = truth_for(&h, &c);
    h.clock.advance(2.0);
    let uri = format!("/v1/challenge/{}/answer", token_of(&c));
    let tasks: Vec<_> = (0..100)
        .map(|_| {
            let app = h.app.clone();
            let uri = uri.clone();
            let truth = truth.clone();
            tokio::spawn(async move { post(&app, &uri, json!({"label": truth})).await.status })
        })
        .collect();
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::OK).count(), 1);
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::CONFLICT).count(), 99);
    assert_eq!(h.state.pilot.len(), 1);
}

#[tokio::test]
async fn answers_after_the_ttl_are_gone_and_unlogged() {
    let h = harness();
    let c = post(&h.app, "/v1/challenge", json!({})).await.json();
    let truth = truth_for(&h, &c);
    h.clock.advance(h.state.ttl() + 1.0);
    let uri = format!("/v1/challenge/{}/answer", token_of(&c));
    assert_eq!(post(&h.app, &uri, json!({"label": truth})).await.status, StatusCode::GONE);
    assert_eq!(post(&h.app, &uri, json!({"label": truth})).await.status, StatusCode::GONE);
    assert_eq!(h.state.pilot.len(), 0);
    let panel = c["panels"][0].as_str().unwrap();
    assert_eq!(get(&h.app, panel).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn answer_at_exactly_the_ttl_is_accepted() {
    let h = harness();
    let c = post(&h.app, "/v1/challenge", json!({})).await.json();
    h.clock.advance(h.state.ttl());
    let uri = format!("/v1/challenge/{}/answer", token_of(&c));
    assert_eq!(post(&h.app, &uri, json!({"label": "A"})).await.status, StatusCode::OK);
}

#[tokio::test]
async fn bad_requests_are_refused() {
    let h = harness();
    assert_eq!(post(&h.app, "/v1/challenge", json!({"family": "origami"})).await.status, StatusCode::BAD_REQUEST);
    assert_eq!(post(&h.app, "/v1/challenge", json!({"bin": "brutal"})).await.status, StatusCode::BAD_REQUEST);
    assert_eq!(post(&h.app, "/v1/challenge", json!({"extra": 1})).await.status, StatusCode::BAD_REQUEST);
    let unknown = format!("/v1/challenge/{}/answer", "0".repeat(32));
    assert_eq!(post(&h.app, &unknown, json!({"label": "A"})).await.status, StatusCode::NOT_FOUND);
    assert_eq!(post(&h.app, "/v1/challenge/nothex/answer", json!({"label": "A"})).await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&h.app, "/v1/panels/deadbeef.png").await.status, StatusCode::NOT_FOUND);
    // no model: bins cannot be served
    assert_eq!(
        post(&h.app, "/v1/challenge", json!({"bin": "hard"})).await.status,
        StatusCode::SERVICE_UNAVAILABLE
    );
}

#[tokio::test]
async fn admin_routes_need_the_token() {
    let h = harness();
    for uri in ["/v1/admin/stats", "/v1/admin/manifests", "/v1/admin/pilot.csv"] {
        assert_eq!(get(&h.app, uri).await.status, StatusCode::UNAUTHORIZED);
        let wrong = Request::get(uri).header(header::AUTHORIZATION, "Bearer nope-nope-nope").body(Body::empty()).unwrap();
        assert_eq!(send(&h.app, wrong).await.status, StatusCode::UNAUTHORIZED);
        assert_eq!(admin_get(&h.app, uri).await.status, StatusCode::OK);
    }
    let closed = harness_with(ServiceConfig::default());
    assert_eq!(admin_get(&closed.app, "/v1/admin/stats").await.status, StatusCode::NOT_FOUND);
    assert_eq!(admin_post(&closed.app, "/v1/admin/calibration/fit", json!({})).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn manifests_list_knob_domains() {
    let h = harness();
    let list = admin_get(&h.app, "/v1/admin/manifests").await.json();
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), shipped_manifests().len());
    for m in list {
        for (_, d) in m["knobs"].as_object().unwrap() {
            assert!(["int", "real", "enum"].contains(&d["kind"].as_str().unwrap()));
        }
    }
}

#[tokio::test]
async fn empty_pilot_export_is_only_the_header() {
    let h = harness();
    let r = admin_get(&h.app, "/v1/admin/pilot.csv").await;
    assert!(r.content_type.unwrap().starts_with("text/csv"));
    let text = String::from_utf8(r.bytes).unwrap();
    assert_eq!(text.trim_end(), PILOT_HEADER.join(","));
}

#[tokio::test]
async fn pilot_export_fits_a_model_that_enables_bins() {
    let dir = tempfile::tempdir().unwrap();
    let h = harness_with(ServiceConfig {
        admin_token: Some(ADMIN.into()),
        state_dir: Some(dir.path().to_owned()),
        ..Default::default()
    });
    let family = "agent_sight";
    // latency grows with the instance's position in the pool
    for round in 0..8 {
        for _ in 0..4 {
            let c = post(&h.app, "/v1/challenge", json!({"family": family})).await.json();
            let truth = truth_for(&h, &c);
            let id = &h.state.sessions.snapshot().iter().find(|r| r.token.as_str() == token_of(&c)).unwrap().instance_id.clone();
            let rank = items().iter().position(|i| &i.instance.instance_id == id).unwrap();
            h.clock.advance(2.0 + rank as f64 * 0.1 + round as f64 * 0.01);
            let label = if round % 3 == 0 { "Z".to_owned() } else { truth };
            let r = post(&h.app, &format!("/v1/challenge/{}/answer", token_of(&c)), json!({"label": label, "respondent": format!("r{round}")})).await;
            assert_eq!(r.status, StatusCode::OK);
        }
    }
    let mid = h.clock.now();
    let csv = admin_get(&h.app, "/v1/admin/pilot.csv").await;
    let records = read_pilot_csv(&csv.bytes[..]).unwrap();
    assert_eq!(records.len(), 32);
    let later = admin_get(&h.app, &format!("/v1/admin/pilot.csv?since={}", mid + 1.0)).await;
    assert_eq!(String::from_utf8(later.bytes).unwrap().trim_end(), PILOT_HEADER.join(","));

    let fit = admin_post(&h.app, "/v1/admin/calibration/fit", json!({"alpha": 0.6})).await;
    assert_eq!(fit.status, StatusCode::OK, "{}", String::from_utf8_lossy(&fit.bytes));
    let summary = fit.json();
    assert_eq!(summary["families"], json!([family]));
    assert_eq!(summary["records_used"], 32);
    let stored = std::fs::read_to_string(dir.path().join(captcha_service::MODEL_FILE)).unwrap();
    let model = DifficultyModel::from_json(&stored).unwrap();
    assert_eq!(model.to_canonical_json(), h.state.model().unwrap().to_canonical_json());

    let mut bins = BTreeSet::new();
    for bin in ["easy", "medium", "hard"] {
        let r = post(&h.app, "/v1/challenge", json!({"family": family, "bin": bin})).await;
        assert_eq!(r.status, StatusCode::OK, "{bin}: {}", String::from_utf8_lossy(&r.bytes));
        assert_eq!(r.json()["bin"], bin);
        bins.insert(bin);
    }
    assert_eq!(bins.len(), 3);
    let stats = admin_get(&h.app, "/v1/admin/stats").await.json();
    assert_eq!(stats["pilot_records"], 32);
    assert!(stats["model"].is_object());
}

#[tokio::test]
async fn preview_checks_knob_bounds() {
    let h = harness();
    let m = shipped_manifests().into_iter().find(|m| m.params.values().any(|d| matches!(d, ParamDomain::Int { .. }))).unwrap();
    let (knob, max) = m
        .params
        .iter()
        .find_map(|(k, d)| match d {
            ParamDomain::Int { max, .. } => Some((k.clone(), *max)),
            _ => None,
        })
        .unwrap();
    let family = m.family().to_string();
    let ok = admin_post(&h.app, "/v1/admin/preview", json!({"family": family, "overrides": {knob.clone(): max}})).await;
    assert_eq!(ok.status, StatusCode::OK, "{}", String::from_utf8_lossy(&ok.bytes));
    let v = ok.json();
    let mut seen = BTreeSet::new();
    all_keys(&v, &mut seen);
    assert!(!seen.contains("params") && !seen.contains("correct_label") && !seen.contains("seed"));
    let png = get(&h.app, v["panels"][0].as_str().unwrap()).await;
    assert_eq!(png.status, StatusCode::OK);

    let over = admin_post(&h.app, "/v1/admin/preview", json!({"family": family, "overrides": {knob.clone(): max + 1}})).await;
    assert_eq!(over.status, StatusCode::UNPROCESSABLE_ENTITY);
    let unknown = admin_post(&h.app, "/v1/admin/preview", json!({"family": family, "overrides": {"no_such_knob": 1}})).await;
    assert_eq!(unknown.status, StatusCode::UNPROCESSABLE_ENTITY);
    let kind = admin_post(&h.app, "/v1/admin/preview", json!({"family": family, "overrides": {knob: "big"}})).await;
    assert_eq!(kind.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(h.state.pool.len(), items().len());
}
