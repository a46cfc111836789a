use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use super::{ResponseStatus, Survey, SurveyError};
use crate::stats::write_ratings_jsonl;

/// Environment variable holding the operator token for `/api/export`.
pub const ADMIN_TOKEN_ENV: &str = "EMOAUDIT_ADMIN_TOKEN";

#[derive(Clone)]
struct AppState {
    survey: Arc<Survey>,
    admin_token: Option<Arc<str>>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for SurveyError {
    fn into_response(self) -> Response {
        let status = match &self {
            SurveyError::UnknownParticipant(_) => StatusCode::NOT_FOUND,
            SurveyError::RatingRange(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SurveyError::Conflict { .. } | SurveyError::InsufficientItems { .. } | SurveyError::BatchLimit(_) => {
                StatusCode::CONFLICT
            }
            SurveyError::NotAssigned(_) => StatusCode::BAD_REQUEST,
            _ => {
                log::error!("survey: {self}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (
            status,
            Json(ErrorBody {
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

#[derive(Serialize)]
struct SessionBody {
    participant_id: String,
}

async fn create_session(State(app): State<AppState>) -> Result<Json<SessionBody>, SurveyError> {
    let participant_id = app.survey.create_session()?;
    Ok(Json(SessionBody { participant_id }))
}

#[derive(Deserialize)]
struct BatchQuery {
    participant: String,
}

#[derive(Serialize)]
struct BatchItem {
    item_id: String,
    text: String,
    emotion: String,
}

#[derive(Serialize)]
struct BatchBody {
    assignment_id: String,
    items: Vec<BatchItem>,
}

// The variant is withheld so raters cannot tell the conditions apart.
async fn batch(State(app): State<AppState>, Query(q): Query<BatchQuery>) -> Result<Json<BatchBody>, SurveyError> {
    let a = app.survey.next_batch(&q.participant)?;
    let items = a
        .items
        .iter()
        .map(|(id, variant)| {
            let item = app.survey.item(id, *variant).expect("assigned items exist in the bank");
            BatchItem {
                item_id: id.clone(),
                text: item.text.clone(),
                emotion: item.emotion.clone(),
            }
        })
        .collect();
    Ok(Json(BatchBody {
        assignment_id: a.assignment_id,
        items,
    }))
}

#[derive(Deserialize)]
struct ResponseBody {
    participant_id: String,
    item_id: String,
    rating: i64,
}

#[derive(Serialize)]
struct StatusBody {
    status: ResponseStatus,
}

async fn response(
    State(app): State<AppState>,
    Json(body): Json<ResponseBody>,
) -> Result<Json<StatusBody>, SurveyError> {
    let status = app
        .survey
        .submit_response(&body.participant_id, &body.item_id, body.rating)?;
    Ok(Json(StatusBody { status }))
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

async fn export(State(app): State<AppState>, headers: HeaderMap) -> Response {
    let Some(expected) = &app.admin_token else {
        return (
            StatusCode::FORBIDDEN,
            Json(ErrorBody {
                error: format!("export disabled: {ADMIN_TOKEN_ENV} is not set"),
            }),
        )
            .into_response();
    };
    let presented = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if !presented.is_some_and(|t| constant_time_eq(t.as_bytes(), expected.as_bytes())) {
        return (
            StatusCode::UNAUTHORIZED,
            [(header::WWW_AUTHENTICATE, "Bearer")],
            Json(ErrorBody {
                error: "missing or wrong bearer token".into(),
            }),
        )
            .into_response();
    }
    let mut body = Vec::new();
    write_ratings_jsonl(&app.survey.export_records(), &mut body).expect("writing to memory");
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

/// API routes, plus static files from `static_dir` for any other path.
/// `admin_token` of `None` disables export.
pub fn router(survey: Arc<Survey>, admin_token: Option<String>, static_dir: Option<PathBuf>) -> Router {
    let state = AppState {
        survey,
        admin_token: admin_token.filter(|t| !t.is_empty()).map(Arc::from),
    };
    let api = Router::new()
        .route("/api/session", post(create_session))
        .route("/api/survey/batch", get(batch))
        .route("/api/survey/response", post(response))
        .route("/api/export", get(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until `shutdown` resolves. Every event is flushed when recorded, so
/// stopping loses nothing.
pub async fn serve(
    listener: tokio::net::TcpListener,
    survey: Arc<Survey>,
    static_dir: Option<PathBuf>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let token = std::env::var(ADMIN_TOKEN_ENV).ok();
    if token.is_none() {
        log::warn!("{ADMIN_TOKEN_ENV} not set; /api/export is disabled");
    }
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("survey listening on http://{addr}");
    axum::serve(listener, router(survey, token, static_dir))
        .with_graceful_shutdown(shutdown)
        .await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Sample, Split};
    use crate::stats::{parse_ratings_jsonl, GroupSpec, RatingVariant};
    use crate::survey::{create_survey, SurveyConfig};
    use crate::EmotionTaxonomy;
    use axum::body::Body;
    use axum::http::Request;
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    fn survey(dir: &std::path::Path) -> Arc<Survey> {
        let tax = EmotionTaxonomy::goemotions();
        let mk = |suffix: &str| -> Vec<Sample> {
            (0..30)
                .map(|i| {
                    Sample::with_label_names(
                        format!("s{i:02}"),
                        format!("Post {i}.{suffix}"),
                        &["love"],
                        Split::Train,
                        &tax,
                    )
                    .unwrap()
                })
                .collect()
        };
        let bank = create_survey(&mk(""), &mk(" More."), &tax, &GroupSpec::default()).unwrap();
        Arc::new(Survey::open(dir, bank, SurveyConfig::default()).unwrap())
    }

    async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
        let res = app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    fn post_json(uri: &str, body: serde_json::Value) -> Request<Body> {
        Request::post(uri)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .unwrap()
    }

    fn json(bytes: &[u8]) -> serde_json::Value {
        serde_json::from_slice(bytes).unwrap()
    }

    #[tokio::test]
    async fn full_flow() {
        let dir = tempfile::tempdir().unwrap();
        let s = survey(dir.path());
        let app = router(s.clone(), Some("secret".into()), None);

        let (st, body) = call(&app, Request::post("/api/session").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::OK);
        let pid = json(&body)["participant_id"].as_str().unwrap().to_string();

        let (st, body) = call(
            &app,
            Request::get(format!("/api/survey/batch?participant={pid}"))
                .body(Body::empty())
                .unwrap(),
        )
        .await;
        assert_eq!(st, StatusCode::OK);
        let batch = json(&body);
        let items = batch["items"].as_array().unwrap();
        assert_eq!(items.len(), 20);
        assert!(items[0].get("variant").is_none());
        assert_eq!(items[0]["emotion"], "love");

        for item in &items[..3] {
            let (st, body) = call(
                &app,
                post_json(
                    "/api/survey/response",
                    serde_json::json!({"participant_id": pid, "item_id": item["item_id"], "rating": 4}),
                ),
            )
            .await;
            assert_eq!(st, StatusCode::OK);
            assert_eq!(json(&body)["status"], "stored");
        }
        let first = &items[0]["item_id"];
        let resp = |rating: i64| {
            post_json(
                "/api/survey/response",
                serde_json::json!({"participant_id": pid, "item_id": first, "rating": rating}),
            )
        };
        assert_eq!(json(&call(&app, resp(4)).await.1)["status"], "duplicate");
        assert_eq!(call(&app, resp(2)).await.0, StatusCode::CONFLICT);
        assert_eq!(call(&app, resp(0)).await.0, StatusCode::UNPROCESSABLE_ENTITY);

        let export = || {
            Request::get("/api/export")
                .header(header::AUTHORIZATION, "Bearer secret")
                .body(Body::empty())
                .unwrap()
        };
        let (st, body) = call(&app, export()).await;
        assert_eq!(st, StatusCode::OK);
        let records = parse_ratings_jsonl(&body[..]).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.emotion == "love" && r.rating == 4));
        let ids: Vec<&str> = items[..3].iter().map(|i| i["item_id"].as_str().unwrap()).collect();
        assert_eq!(records.iter().map(|r| r.item_id.as_str()).collect::<Vec<_>>(), ids);
        for r in &records {
            assert!(RatingVariant::BOTH.contains(&r.variant));
        }
        assert_eq!(call(&app, export()).await.1, body, "export is stable");
    }

    #[tokio::test]
    async fn error_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let app = router(survey(dir.path()), Some("secret".into()), None);
        let get = |uri: &str| Request::get(uri).body(Body::empty()).unwrap();
        assert_eq!(
            call(&app, get("/api/survey/batch?participant=ghost")).await.0,
            StatusCode::NOT_FOUND
        );
        let (st, _) = call(
            &app,
            post_json(
                "/api/survey/response",
                serde_json::json!({"participant_id": "ghost", "item_id": "x", "rating": 3}),
            ),
        )
        .await;
        assert_eq!(st, StatusCode::NOT_FOUND);
        let pid = json(
            &call(&app, Request::post("/api/session").body(Body::empty()).unwrap())
                .await
                .1,
        )["participant_id"]
            .as_str()
            .unwrap()
            .to_string();
        let (st, _) = call(
            &app,
            post_json(
                "/api/survey/response",
                serde_json::json!({"participant_id": pid, "item_id": "s00#love", "rating": 3}),
            ),
        )
        .await;
        assert_eq!(st, StatusCode::BAD_REQUEST);
        assert_eq!(call(&app, get("/api/export")).await.0, StatusCode::UNAUTHORIZED);
        let wrong = Request::get("/api/export")
            .header(header::AUTHORIZATION, "Bearer nope")
            .body(Body::empty())
            .unwrap();
        assert_eq!(call(&app, wrong).await.0, StatusCode::UNAUTHORIZED);
    }

    #[tokio::test]
    async fn export_disabled_without_token() {
        let dir = tempfile::tempdir().unwrap();
        let app = router(survey(dir.path()), None, None);
        let req = Request::get("/api/export")
            .header(header::AUTHORIZATION, "Bearer ")
            .body(Body::empty())
            .unwrap();
        assert_eq!(call(&app, req).await.0, StatusCode::FORBIDDEN);
    }

    #[tokio::test]
    async fn serves_static_files() {
        let dir = tempfile::tempdir().unwrap();
        let web = tempfile::tempdir().unwrap();
        std::fs::write(web.path().join("index.html"), "<p>survey</p>").unwrap();
        let app = router(survey(dir.path()), None, Some(web.path().to_path_buf()));
        let (st, body) = call(&app, Request::get("/index.html").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::OK);
        assert_eq!(body, b"<p>survey</p>");
    }
}
