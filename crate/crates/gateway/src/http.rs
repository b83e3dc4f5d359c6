use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde_json::json;
use spark_core::decompose::RemoveError;
use spark_core::dialog::FunctionStore;

use crate::store::DeleteError;
use crate::AppState;

pub(crate) fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/functions", get(list_functions))
        .route("/functions/{name}", delete(delete_function))
        .route("/world", get(world))
        .route("/sessions", post(create_session))
        .route("/healthz", get(healthz))
}

fn error(status: StatusCode, code: &str, message: String) -> Response {
    (status, Json(json!({ "error": { "code": code, "message": message } }))).into_response()
}

async fn list_functions(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let doc = app.store().registry().to_document();
    Json(json!({ "functions": doc.functions }))
}

async fn delete_function(State(app): State<Arc<AppState>>, Path(name): Path<String>) -> Response {
    let result = app.store().remove(&name);
    match result {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(DeleteError::Remove(e @ RemoveError::NotFound(_))) => {
            error(StatusCode::NOT_FOUND, "NOT_FOUND", e.to_string())
        }
        Err(DeleteError::Remove(e @ RemoveError::Referenced { .. })) => {
            let RemoveError::Referenced { by, .. } = &e else {
                unreachable!()
            };
            let body = json!({ "error": { "code": "REFERENCED", "message": e.to_string(), "by": by } });
            (StatusCode::CONFLICT, Json(body)).into_response()
        }
        Err(DeleteError::Store(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, "STORAGE", e.to_string()),
    }
}

async fn world(State(app): State<Arc<AppState>>) -> Response {
    let robot = app.clone();
    let snapshot = tokio::task::spawn_blocking(move || robot.robot.snapshot())
        .await
        .ok()
        .flatten();
    match snapshot {
        Some(t) => Json(t).into_response(),
        None => error(
            StatusCode::SERVICE_UNAVAILABLE,
            "NO_TELEMETRY",
            "no telemetry from the robot".into(),
        ),
    }
}

async fn create_session(State(app): State<Arc<AppState>>) -> Response {
    let session = app.sessions.create();
    let id = session.lock().unwrap_or_else(|e| e.into_inner()).id.clone();
    (StatusCode::CREATED, Json(json!({ "id": id }))).into_response()
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}
