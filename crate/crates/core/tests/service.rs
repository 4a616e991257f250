mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use ceph_core::dialogue::{CompletionBackendConfig, FallbackPolicy, Secret};
use ceph_core::report::{Language, ReportFormat, Resources};
use ceph_core::service::{router, router_with_cors, AppState, ErrorEnvelope, ServiceConfig, VERSION};
use ceph_core::{analyze, AnalysisConfig};
use common::{fixture_bytes, stub, JSON_FIXTURES};
use http_body_util::BodyExt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    fn envelope(&self) -> ErrorEnvelope {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("not an envelope ({e}): {}", self.text()))
    }
}

async fn send(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> Reply {
    send_with(app, Request::builder().method(method).uri(uri), body).await
}

async fn send_with(app: &Router, builder: axum::http::request::Builder, body: impl Into<Body>) -> Reply {
    let resp = app.clone().oneshot(builder.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let content_type = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string());
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, body }
}

fn app() -> Router {
    router(Arc::new(AppState::builtin()))
}

async fn create(app: &Router, fixture: &str) -> String {
    let r = send(app, Method::POST, "/api/v1/analyses", fixture_bytes(fixture)).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    r.json()["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn posted_fixtures_match_library_bit_for_bit() {
    let app = app();
    for name in JSON_FIXTURES {
        let bytes = fixture_bytes(&format!("{name}.json"));
        let r = send(&app, Method::POST, "/api/v1/analyses", bytes.clone()).await;
        assert_eq!(r.status, StatusCode::CREATED);
        let body = r.json();
        let case = ceph_core::ingest::parse_landmarks_json(&bytes).unwrap();
        let lib = analyze(&case, &AnalysisConfig::default()).unwrap();
        let api = body["measurements"].as_array().unwrap();
        assert_eq!(api.len(), lib.measurements.len());
        for (a, l) in api.iter().zip(&lib.measurements) {
            assert_eq!(a["id"], l.id.as_str());
            assert_eq!(a["value"].as_f64().unwrap().to_bits(), l.value.to_bits(), "{name} {}", l.id);
        }
        for (a, l) in body["deviations"].as_array().unwrap().iter().zip(&lib.deviations) {
            assert_eq!(a["z"].as_f64().unwrap().to_bits(), l.z.to_bits());
        }
        assert_eq!(body["classification"], serde_json::to_value(lib.classification).unwrap());
        assert!(body["created_at"].is_string());
    }
}

#[tokio::test]
async fn repeated_get_returns_identical_bytes() {
    let app = app();
    let id = create(&app, "synthetic_case_01.json").await;
    let first = send(&app, Method::GET, &format!("/api/v1/analyses/{id}"), Body::empty()).await;
    assert_eq!(first.status, StatusCode::OK);
    assert_eq!(first.content_type.as_deref(), Some("application/json"));
    for _ in 0..3 {
        let again = send(&app, Method::GET, &format!("/api/v1/analyses/{id}"), Body::empty()).await;
        assert_eq!(again.body, first.body);
    }
    let other = create(&app, "synthetic_case_01.json").await;
    assert_ne!(other, id);
}

#[tokio::test]
async fn unknown_analysis_is_404() {
    let app = app();
    for path in ["/api/v1/analyses/0000", "/api/v1/analyses/0000/report", "/api/v1/analyses/0000/prompt?seed=1"] {
        let r = send(&app, Method::GET, path, Body::empty()).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{path}");
        assert_eq!(r.envelope().code, "UNKNOWN_ANALYSIS");
    }
    let r = send(&app, Method::GET, "/nowhere", Body::empty()).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.envelope().code, "NOT_FOUND");
}

#[tokio::test]
async fn reports_render_in_every_format() {
    let app = app();
    let id = create(&app, "synthetic_case_01.json").await;
    let state_res = Resources::builtin();
    let lib = ceph_core::analyze(&common::load("synthetic_case_01.json"), &AnalysisConfig::default()).unwrap();
    for lang in Language::ALL {
        for format in [ReportFormat::Text, ReportFormat::Markdown, ReportFormat::Structured] {
            let uri = format!("/api/v1/analyses/{id}/report?lang={lang}&format={}", format.as_str());
            let r = send(&app, Method::GET, &uri, Body::empty()).await;
            assert_eq!(r.status, StatusCode::OK);
            assert_eq!(r.content_type.as_deref(), Some(format.content_type()));
            assert_eq!(r.text(), lib.report(lang, &state_res).unwrap().render(format));
        }
    }
    let en = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/report"), Body::empty()).await;
    assert!(en.text().contains("skeletal Class II malocclusion"));
    let zh = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/report?lang=zh"), Body::empty()).await;
    let class_zh = Resources::builtin().templates(Language::Zh).get("class_phrase.CLASS_II").unwrap().to_string();
    assert!(zh.text().contains(&class_zh));
    for bad in ["format=pdf", "lang=fr"] {
        let r = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/report?{bad}"), Body::empty()).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST);
        assert_eq!(r.envelope().code, "INVALID_PARAMETER");
    }
}

#[tokio::test]
async fn prompts_are_seeded() {
    let app = app();
    let id = create(&app, "table2_row1.json").await;
    let a = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/prompt?seed=9"), Body::empty()).await;
    let b = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/prompt?seed=9"), Body::empty()).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.body, b.body);
    let sample = a.json();
    assert_eq!(sample["seed"], 9);
    let text = sample["text"].as_str().unwrap();
    assert!(text.contains("SNB angle: 85.7, ANB angle: -1.29"));
    assert!(text.ends_with("Po-NB distance: 0.08###Assistant: "));

    let picked = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/prompt?lang=zh"), Body::empty()).await;
    let seed = picked.json()["seed"].as_u64().unwrap();
    let replay = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/prompt?lang=zh&seed={seed}"), Body::empty()).await;
    assert_eq!(picked.body, replay.body);

    let bad = send(&app, Method::GET, &format!("/api/v1/analyses/{id}/prompt?seed=-1"), Body::empty()).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn analysis_error_statuses() {
    let app = app();
    let no_cal = json!({ "landmarks": { "S": [1, 2], "N": [30, 4] } }).to_string();
    let r = send(&app, Method::POST, "/api/v1/analyses", no_cal).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.envelope().code, "MISSING_CALIBRATION");

    let r = send(&app, Method::POST, "/api/v1/analyses", "{\n  \"landmarks\": [").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let env = r.envelope();
    assert_eq!(env.code, "PARSE_ERROR");
    assert!(env.details.get("line").is_some(), "{env:?}");

    let lonely = json!({ "calibration_mm_per_px": 0.1, "landmarks": { "S": [1, 2] } }).to_string();
    let r = send(&app, Method::POST, "/api/v1/analyses", lonely).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.envelope().code, "MISSING_LANDMARK");

    let same = json!({ "calibration_mm_per_px": 0.1, "landmarks": { "S": [1, 2], "N": [1, 2], "A": [5, 9] } });
    let r = send(&app, Method::POST, "/api/v1/analyses", same.to_string()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.envelope().code, "DEGENERATE");

    let r = send(&app, Method::DELETE, "/api/v1/analyses", Body::empty()).await;
    assert_eq!(r.status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(r.envelope().code, "METHOD_NOT_ALLOWED");

    let r = send(&app, Method::POST, "/api/v1/analyses", vec![b' '; 3 * 1024 * 1024]).await;
    assert_eq!(r.status, StatusCode::PAYLOAD_TOO_LARGE);
    r.envelope();
}

#[tokio::test]
async fn session_lifecycle_offline() {
    let app = app();
    let id = create(&app, "table2_row3.json").await;
    let r = send(&app, Method::POST, "/api/v1/sessions", json!({ "analysis_id": id, "lang": "en" }).to_string()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let sid = r.json()["session_id"].as_str().unwrap().to_string();

    let r = send(
        &app,
        Method::POST,
        &format!("/api/v1/sessions/{sid}/messages"),
        json!({ "content": "what is the ANB angle?" }).to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.json()["reply"].as_str().unwrap().contains("6.14"));

    let r = send(&app, Method::GET, &format!("/api/v1/sessions/{sid}"), Body::empty()).await;
    let history = r.json()["history"].as_array().unwrap().clone();
    let roles: Vec<_> = history.iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["system", "user", "assistant"]);

    let r = send(&app, Method::GET, "/api/v1/sessions/missing", Body::empty()).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.envelope().code, "UNKNOWN_SESSION");
    let r = send(&app, Method::POST, "/api/v1/sessions", json!({ "analysis_id": "missing" }).to_string()).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = send(&app, Method::POST, &format!("/api/v1/sessions/{sid}/messages"), json!({ "content": " " }).to_string()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.envelope().code, "EMPTY_MESSAGE");
}

fn backend_state(endpoint: String, fallback: FallbackPolicy) -> Arc<AppState> {
    let config = ServiceConfig {
        backend: CompletionBackendConfig {
            endpoint,
            model: "stub".to_string(),
            api_key: Some(Secret::new("sk-service-secret")),
            fallback,
            ..CompletionBackendConfig::default()
        },
        ..ServiceConfig::default()
    };
    Arc::new(AppState::from_config(&config).unwrap())
}

#[tokio::test]
async fn stubbed_backend_reply_and_gateway_error() {
    let stub = stub::start("verbatim stub reply").await;
    let app = router(backend_state(stub.endpoint.clone(), FallbackPolicy::Error));
    let health = send(&app, Method::GET, "/healthz", Body::empty()).await.json();
    assert_eq!(health["backend_enabled"], true);
    let id = create(&app, "synthetic_case_02.json").await;
    let sid = send(&app, Method::POST, "/api/v1/sessions", json!({ "analysis_id": id }).to_string()).await.json()
        ["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let r = send(&app, Method::POST, &format!("/api/v1/sessions/{sid}/messages"), json!({ "content": "hi" }).to_string()).await;
    assert_eq!(r.json()["reply"], "verbatim stub reply");
    let session = send(&app, Method::GET, &format!("/api/v1/sessions/{sid}"), Body::empty()).await;
    assert!(!session.text().contains("sk-service-secret"));

    let dead = router(backend_state(stub::dead_endpoint(), FallbackPolicy::Error));
    let id = create(&dead, "synthetic_case_02.json").await;
    let sid = send(&dead, Method::POST, "/api/v1/sessions", json!({ "analysis_id": id }).to_string()).await.json()
        ["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let r = send(&dead, Method::POST, &format!("/api/v1/sessions/{sid}/messages"), json!({ "content": "hi" }).to_string()).await;
    assert_eq!(r.status, StatusCode::BAD_GATEWAY);
    assert_eq!(r.envelope().code, "BACKEND_UNREACHABLE");
}

#[tokio::test]
async fn healthz_reports_version() {
    let r = send(&app(), Method::GET, "/healthz", Body::empty()).await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], VERSION);
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(body["backend_enabled"], false);
}

#[tokio::test]
async fn api_key_guards_the_api() {
    let mut state = AppState::builtin();
    state.api_key = Some(Secret::new("letmein"));
    let app = router(Arc::new(state));
    let r = send(&app, Method::POST, "/api/v1/analyses", fixture_bytes("table2_row1.json")).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.envelope().code, "UNAUTHORIZED");
    let ok = send_with(
        &app,
        Request::builder().method(Method::POST).uri("/api/v1/analyses").header("x-api-key", "letmein"),
        fixture_bytes("table2_row1.json"),
    )
    .await;
    assert_eq!(ok.status, StatusCode::CREATED);
    assert_eq!(send(&app, Method::GET, "/healthz", Body::empty()).await.status, StatusCode::OK);
}

#[tokio::test]
async fn cors_allowlist() {
    let app = router_with_cors(Arc::new(AppState::builtin()), &["http://ui.local".to_string()]);
    let resp = app
        .oneshot(
            Request::builder()
                .method(Method::OPTIONS)
                .uri("/api/v1/analyses")
                .header("origin", "http://ui.local")
                .header("access-control-request-method", "POST")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.headers().get("access-control-allow-origin").unwrap(), "http://ui.local");
}

#[tokio::test]
async fn concurrent_posts_differ_only_in_identity() {
    let app = app();
    let bytes = fixture_bytes("synthetic_case_03.json");
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let bytes = bytes.clone();
            tokio::spawn(async move { send(&app, Method::POST, "/api/v1/analyses", bytes).await.json() })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        let mut body = h.await.unwrap();
        let obj = body.as_object_mut().unwrap();
        obj.remove("id").unwrap();
        obj.remove("created_at").unwrap();
        bodies.push(body);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

fn mutate(base: &[u8], edits: &[(usize, u8)], truncate: Option<usize>) -> Vec<u8> {
    let mut out = base.to_vec();
    for &(pos, byte) in edits {
        let i = pos % out.len().max(1);
        if !out.is_empty() {
            out[i] = byte;
        }
    }
    if let Some(t) = truncate {
        out.truncate(t % (out.len() + 1));
    }
    out
}

#[test]
fn malformed_bodies_always_get_an_envelope() {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let app = app();
    let base = fixture_bytes("synthetic_case_01.json");
    let mut runner = TestRunner::new(Config { cases: 1500, failure_persistence: None, ..Config::default() });
    let strategy = (
        prop::collection::vec((any::<usize>(), any::<u8>()), 1..8),
        prop::option::of(any::<usize>()),
        0usize..3,
        prop::collection::vec(any::<u8>(), 0..64),
    );
    let rejected = std::cell::Cell::new(0usize);
    runner
        .run(&strategy, |(edits, truncate, target, noise)| {
            let body = match target {
                0 => mutate(&base, &edits, truncate),
                1 => noise,
                _ => mutate(br#"{"analysis_id": "x", "lang": "en"}"#, &edits, truncate),
            };
            let uri = if target == 2 { "/api/v1/sessions" } else { "/api/v1/analyses" };
            let r = rt.block_on(send(&app, Method::POST, uri, body));
            if !r.status.is_success() {
                rejected.set(rejected.get() + 1);
                let env: ErrorEnvelope = serde_json::from_slice(&r.body)
                    .map_err(|e| TestCaseError::fail(format!("{}: {e}: {}", r.status, r.text())))?;
                prop_assert!(!env.code.is_empty());
                prop_assert_eq!(r.content_type.as_deref(), Some("application/json"));
            }
            Ok(())
        })
        .unwrap();
    assert!(rejected.get() >= 1000, "only {} error responses", rejected.get());
}
