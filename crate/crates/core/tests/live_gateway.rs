use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use teamharness_core::gateway::{ChatMessage, ChatRequest, EndpointConfig, Gateway, GatewayError};
use teamharness_core::SamplingParams;

#[derive(Clone)]
struct Script {
    calls: Arc<AtomicUsize>,
    bodies: Arc<std::sync::Mutex<Vec<Value>>>,
    /// Status per call; the last entry repeats.
    statuses: Arc<Vec<(u16, &'static str)>>,
}

async fn completions(State(s): State<Script>, Json(body): Json<Value>) -> (StatusCode, String) {
    let n = s.calls.fetch_add(1, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(body);
    let (status, text) = s.statuses[n.min(s.statuses.len() - 1)];
    let body = if status == 200 {
        json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
    } else {
        json!({"error": {"message": text}}).to_string()
    };
    (StatusCode::from_u16(status).unwrap(), body)
}

async fn serve(statuses: Vec<(u16, &'static str)>) -> (String, Script) {
    let script = Script {
        calls: Arc::new(AtomicUsize::new(0)),
        bodies: Arc::default(),
        statuses: Arc::new(statuses),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(script.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), script)
}

fn config(base_url: String) -> EndpointConfig {
    EndpointConfig {
        base_url,
        api_key_env: None,
        backoff_ms: 5,
        ..EndpointConfig::default()
    }
}

fn request() -> ChatRequest {
    ChatRequest {
        model: "m".into(),
        messages: vec![ChatMessage::system("s"), ChatMessage::user("hello")],
        sampling: SamplingParams::with_temperature(0.5),
    }
}

#[tokio::test]
async fn retries_server_errors_then_succeeds() {
    let (url, script) = serve(vec![(500, "boom"), (500, "boom"), (200, "fine")]).await;
    let gateway = Gateway::from_config(&config(url)).unwrap();
    let mut log = Vec::new();
    assert_eq!(gateway.complete(&request(), &mut log).await.unwrap(), "fine");
    assert_eq!(log[0].attempts, 3);
    assert_eq!(script.calls.load(Ordering::SeqCst), 3);
    let body = &script.bodies.lock().unwrap()[0];
    assert_eq!(body["top_k"], 20);
    assert_eq!(body["messages"][1]["content"], "hello");
}

#[tokio::test]
async fn gives_up_after_max_retries() {
    let (url, script) = serve(vec![(503, "down")]).await;
    let mut cfg = config(url);
    cfg.max_retries = 2;
    let gateway = Gateway::from_config(&cfg).unwrap();
    let mut log = Vec::new();
    let err = gateway.complete(&request(), &mut log).await.unwrap_err();
    assert!(matches!(err, GatewayError::Endpoint { attempts: 3, .. }), "{err}");
    assert_eq!(script.calls.load(Ordering::SeqCst), 3);
    assert!(log.is_empty());
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (url, script) = serve(vec![(401, "bad key")]).await;
    let gateway = Gateway::from_config(&config(url)).unwrap();
    let err = gateway.complete(&request(), &mut Vec::new()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Endpoint { attempts: 1, .. }));
    assert_eq!(script.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn unsupported_top_k_is_dropped() {
    let (url, script) = serve(vec![(400, "unknown parameter top_k"), (200, "ok")]).await;
    let gateway = Gateway::from_config(&config(url)).unwrap();
    assert_eq!(gateway.complete(&request(), &mut Vec::new()).await.unwrap(), "ok");
    let bodies = script.bodies.lock().unwrap();
    assert!(bodies[0].get("top_k").is_some());
    assert!(bodies[1].get("top_k").is_none());
}
