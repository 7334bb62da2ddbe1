//! HTTP front end: one JSON POST endpoint per operation, no server-side state.

use axum::extract::rejection::StringRejection;
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hybridpower::api::{self, ApiError, ApiScenario, HealthResponse};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Origin allowed by CORS; `None` allows any origin.
    pub cors_origin: Option<String>,
}

struct Failure(ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::BAD_REQUEST);
        (status, Json(self.0)).into_response()
    }
}

type Reply<T> = Result<Json<T>, Failure>;

/// Parses the body and runs `handler` off the async executor.
async fn dispatch<T, F>(body: Result<String, StringRejection>, handler: F) -> Reply<T>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&ApiScenario) -> Result<T, ApiError> + Send + 'static,
{
    let body =
        body.map_err(|e| Failure(ApiError::bad_request("invalid_body", e.body_text(), None)))?;
    let scenario = api::parse_scenario(&body).map_err(Failure)?;
    match tokio::task::spawn_blocking(move || handler(&scenario)).await {
        Ok(r) => r.map(Json).map_err(Failure),
        Err(e) => Err(Failure(ApiError {
            status: 500,
            code: "internal".to_owned(),
            message: e.to_string(),
            field_path: None,
            detail: None,
        })),
    }
}

async fn evaluate(body: Result<String, StringRejection>) -> Reply<api::EvaluateResponse> {
    dispatch(body, api::evaluate).await
}

async fn sample_size(body: Result<String, StringRejection>) -> Reply<api::SampleSizeResponse> {
    dispatch(body, api::sample_size).await
}

async fn power_distribution(
    body: Result<String, StringRejection>,
) -> Reply<api::PowerDistributionResponse> {
    dispatch(body, api::power_distribution).await
}

async fn utility(body: Result<String, StringRejection>) -> Reply<api::UtilityResponse> {
    dispatch(body, api::utility).await
}

async fn implied_reward(
    body: Result<String, StringRejection>,
) -> Reply<api::ImpliedRewardResponse> {
    dispatch(body, api::implied_reward).await
}

async fn health() -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
    })
}

pub fn router(config: &ServiceConfig) -> Router {
    let origin = match config.cors_origin.as_deref() {
        Some(o) => {
            AllowOrigin::exact(HeaderValue::from_str(o).unwrap_or(HeaderValue::from_static("null")))
        }
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/sample-size", post(sample_size))
        .route("/v1/power-distribution", post(power_distribution))
        .route("/v1/utility", post(utility))
        .route("/v1/implied-reward", post(implied_reward))
        .layer(cors)
}
