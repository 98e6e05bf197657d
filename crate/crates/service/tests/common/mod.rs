#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use vpi_core::covr::format_vrd_response;
use vpi_core::method::MethodConfig;
use vpi_core::residual::{ObjectAttributes, SemanticPair, VisualResidual};
use vpi_core::scene::{GeometricRelation, PreferenceLabel};
use vpi_service::server::{router, AppState};

fn serve_in_background(app: Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

pub fn spawn_app(static_dir: Option<std::path::PathBuf>) -> String {
    let addr = serve_in_background(router(AppState::new(MethodConfig::default()), static_dir));
    format!("http://{addr}")
}

pub fn vrd_answer() -> String {
    format_vrd_response(&VisualResidual {
        semantic: SemanticPair {
            source: ObjectAttributes::new("red triangle", "red", "triangle"),
            target: ObjectAttributes::new("blue star", "blue", "star"),
        },
        geometric: GeometricRelation::LeftOf,
        description: "Move the red triangle to the left of the blue star.".into(),
    })
}

/// Chat-completions stand-in. The first path segment picks the behaviour:
/// `ok`, `slow` (ok after 400 ms), `fail` (HTTP 500) or `garbage`
/// (unparseable VRD answers, valid PRD answers).
pub struct Mock {
    pub base: String,
    pub calls: Arc<AtomicUsize>,
}

pub fn spawn_mock() -> Mock {
    let calls = Arc::new(AtomicUsize::new(0));
    let app = Router::new()
        .route("/{mode}/chat/completions", post(mock_reply))
        .with_state(calls.clone());
    Mock {
        base: format!("http://{}", serve_in_background(app)),
        calls,
    }
}

async fn mock_reply(
    State(calls): State<Arc<AtomicUsize>>,
    Path(mode): Path<String>,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    calls.fetch_add(1, Ordering::SeqCst);
    let text = body.to_string();
    let vrd = text.contains("How did the objects move");
    let content = match mode.as_str() {
        "fail" => return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"}))),
        "slow" => {
            tokio::time::sleep(Duration::from_millis(400)).await;
            String::new()
        }
        "garbage" if vrd => "I am not sure what happened here.".to_string(),
        _ => String::new(),
    };
    let content = if !content.is_empty() {
        content
    } else if vrd {
        vrd_answer()
    } else if text.contains("name: (x, y)") {
        "red triangle: (0.2, 0.2)\nred star: (0.25, 0.2)\ngreen triangle: (0.5, 0.8)\ngreen star: (0.55, 0.8)\nblue triangle: (0.8, 0.2)\nblue star: (0.85, 0.2)".to_string()
    } else {
        format!("Preference: {}", PreferenceLabel::GroupByColor.sentence())
    };
    (
        StatusCode::OK,
        Json(json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5}
        })),
    )
}
