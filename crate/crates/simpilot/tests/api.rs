use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use simpilot::server::{router, AppState};
use simpilot_core::pipeline::{replay, ClockMode, Engine, EngineOptions, ExerciseConfig};

fn app(root: &Path) -> (Router, Arc<Engine>) {
    std::fs::write(root.join("radar.txt"), "RYR92BQ\nDLH6LY\nAUA392P\n").unwrap();
    let mut options = EngineOptions::new(root.join("logs"));
    options.clock = ClockMode::Logical;
    let engine = Arc::new(Engine::new(options).unwrap());
    let state = AppState {
        engine: Arc::clone(&engine),
        default_config: Some(ExerciseConfig::new(root.join("radar.txt"))),
    };
    (router(state), engine)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (status, body) = call(&app, Method::GET, "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn full_session_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (app, engine) = app(dir.path());

    let (status, body) = call(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["session_id"].as_str().unwrap().to_string();

    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/step"),
        Some(json!({ "atco_text": "ryanair nine two bravo quebec turn right heading zero nine zero" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["text"], "heading right zero nine zero ryanair nine two bravo quebec");
    assert_eq!(
        body["entities"],
        "<callsign> ryanair nine two bravo quebec </callsign> <command> turn right heading </command> <value> zero nine zero </value>"
    );
    assert_eq!(body["rbe_inserted"], false);
    assert_eq!(body["resolved_callsign"], "RYR92BQ");

    let (_, body) =
        call(&app, Method::POST, &format!("/sessions/{id}/step"), Some(json!({ "atco_text": "good morning" }))).await;
    assert_eq!(body["text"], "");
    assert!(body["advisories"].as_array().unwrap().iter().any(|a| a == "empty_readback"));

    let (status, log) = call(&app, Method::GET, &format!("/sessions/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    let records = log["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    let on_disk = replay(engine.log_path(&id).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&on_disk).unwrap(), log["records"]);

    let (status, summary) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["steps"], 2);
    assert_eq!(summary["no_callsign_count"], 1);

    let (status, err) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "unknown_session");

    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn explicit_config_body() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let radar = dir.path().join("radar.txt");
    let config = json!({ "surveillance_path": radar, "rbe_probability": 1.0, "seed": 7, "rbe_kinds": ["VALUE_DIGIT_SWAP"] });
    let (status, body) = call(&app, Method::POST, "/sessions", Some(config)).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["session_id"].as_str().unwrap();
    let (_, body) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/step"),
        Some(json!({ "atco_text": "hansa six lima yankee descend flight level one two zero" })),
    )
    .await;
    assert_eq!(body["rbe_inserted"], true);
    assert_ne!(body["text"], "descending flight level one two zero hansa six lima yankee");
}

#[tokio::test]
async fn structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());

    let (status, err) = call(&app, Method::POST, "/sessions/session-0042/step", Some(json!({ "atco_text": "x" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "unknown_session");

    let bad = json!({ "surveillance_path": dir.path().join("radar.txt"), "rbe_probability": 1.5 });
    let (status, err) = call(&app, Method::POST, "/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "config_error");
    assert!(err["detail"].as_str().unwrap().contains("rbe_probability"));

    let missing = json!({ "surveillance_path": dir.path().join("nope.txt") });
    let (_, err) = call(&app, Method::POST, "/sessions", Some(missing)).await;
    assert!(err["detail"].as_str().unwrap().contains("surveillance_path"));

    let (_, body) = call(&app, Method::POST, "/sessions", None).await;
    let id = body["session_id"].as_str().unwrap();
    let (status, err) = call(&app, Method::POST, &format!("/sessions/{id}/step"), Some(json!({ "text": "x" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "bad_request");

    let (status, _) = call(&app, Method::GET, "/sessions/session-0042/log", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrent_sessions_get_distinct_ids() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let calls = (0..8).map(|_| {
        let app = app.clone();
        tokio::spawn(async move { call(&app, Method::POST, "/sessions", None).await.1["session_id"].clone() })
    });
    let mut ids = Vec::new();
    for c in calls {
        ids.push(c.await.unwrap().as_str().unwrap().to_string());
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
}
