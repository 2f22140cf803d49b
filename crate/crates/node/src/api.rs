//! HTTP API: the gossip pull endpoint, read views for clients, and the
//! operator publish endpoint.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use stated_core::{ContentHash, Domain, ParsedStatement};

use crate::compose::{compose, ComposeRequest};
use crate::node::{FeedFilter, Node, NodeError};

pub const SCHEMA_VERSION: u32 = 1;
const TEXT_PLAIN: &str = "text/plain; charset=utf-8";

pub struct ApiState {
    pub node: Arc<Node>,
    pub operator_token: Option<String>,
    pub max_pull: usize,
}

type Shared = Arc<ApiState>;

pub fn router(state: ApiState, ui_dir: Option<PathBuf>) -> Router {
    let mut r = Router::new()
        .route("/api/statements", get(pull))
        .route("/api/statements/{hash}", get(statement))
        .route("/api/feed", get(feed))
        .route("/api/trust/{domain}", get(trust))
        .route("/api/polls/{hash}/tally", get(tally))
        .route("/api/peers", get(peers))
        .route("/api/publish", post(publish))
        .route("/api/compose", post(compose_preview))
        .route("/api/validate", post(validate))
        .route("/.well-known/statements.txt", get(own_file))
        .route("/.well-known/statements/{file}", get(own_statement));
    if let Some(dir) = ui_dir {
        r = r.nest_service("/ui", tower_http::services::ServeDir::new(dir));
    }
    r.with_state(Arc::new(state))
}

struct ApiError(StatusCode, &'static str, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "class": self.1, "message": self.2 } });
        (self.0, Json(body)).into_response()
    }
}

impl From<NodeError> for ApiError {
    fn from(e: NodeError) -> Self {
        match e {
            NodeError::NotFound(_) => ApiError(StatusCode::NOT_FOUND, "not-found", e.to_string()),
            NodeError::Tally(_) => ApiError(
                StatusCode::UNPROCESSABLE_ENTITY,
                "not-a-poll",
                e.to_string(),
            ),
            NodeError::Rejected(_) => {
                ApiError(StatusCode::UNPROCESSABLE_ENTITY, "rejected", e.to_string())
            }
            NodeError::Store(_) => {
                tracing::error!(error = %e, "store failure");
                ApiError(StatusCode::INTERNAL_SERVER_ERROR, "store", e.to_string())
            }
        }
    }
}

fn bad_request(class: &'static str, msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, class, msg.into())
}

fn parse_hash(s: &str) -> Result<ContentHash, ApiError> {
    s.parse()
        .map_err(|e: stated_core::InvalidHash| bad_request("invalid-hash", e.to_string()))
}

fn plain(text: String) -> Response {
    ([(header::CONTENT_TYPE, TEXT_PLAIN)], text).into_response()
}

#[derive(Deserialize)]
struct PullQuery {
    #[serde(default)]
    min_id: u64,
    limit: Option<usize>,
}

async fn pull(State(s): State<Shared>, Query(q): Query<PullQuery>) -> Result<Response, ApiError> {
    let limit = q.limit.unwrap_or(s.max_pull).min(s.max_pull);
    Ok(Json(s.node.serve_pull(q.min_id, limit)?).into_response())
}

async fn statement(
    State(s): State<Shared>,
    Path(hash): Path<String>,
) -> Result<Response, ApiError> {
    let h = parse_hash(&hash)?;
    let rec = s.node.get(&h)?.ok_or(NodeError::NotFound(h))?;
    Ok(plain(rec.text))
}

#[derive(Deserialize)]
struct FeedQuery {
    #[serde(rename = "type")]
    type_label: Option<String>,
    domain: Option<String>,
    tag: Option<String>,
    limit: Option<usize>,
}

async fn feed(State(s): State<Shared>, Query(q): Query<FeedQuery>) -> Result<Response, ApiError> {
    let domain = q
        .domain
        .map(|d| d.parse::<Domain>())
        .transpose()
        .map_err(|e| bad_request("invalid-domain", e.to_string()))?;
    let filter = FeedFilter {
        type_label: q.type_label,
        domain,
        tag: q.tag,
        limit: q.limit,
    };
    let items = s.node.feed(&filter)?;
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "statements": items })).into_response())
}

async fn trust(State(s): State<Shared>, Path(domain): Path<String>) -> Result<Response, ApiError> {
    let d: Domain = domain
        .parse()
        .map_err(|e: stated_core::InvalidDomain| bad_request("invalid-domain", e.to_string()))?;
    Ok(Json(s.node.trust(&d)?).into_response())
}

async fn tally(State(s): State<Shared>, Path(hash): Path<String>) -> Result<Response, ApiError> {
    let h = parse_hash(&hash)?;
    Ok(Json(s.node.tally(&h)?).into_response())
}

async fn peers(State(s): State<Shared>) -> Result<Response, ApiError> {
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "peers": s.node.peers()? })).into_response())
}

/// Compares without short-circuiting on the first differing byte.
fn token_matches(given: &str, expected: &str) -> bool {
    given.len() == expected.len()
        && given
            .bytes()
            .zip(expected.bytes())
            .fold(0u8, |acc, (a, b)| acc | (a ^ b))
            == 0
}

fn authorize(s: &ApiState, headers: &HeaderMap) -> Result<(), ApiError> {
    let Some(expected) = &s.operator_token else {
        return Err(ApiError(
            StatusCode::FORBIDDEN,
            "publish-disabled",
            "no operator token configured".into(),
        ));
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match given {
        Some(t) if token_matches(t, expected) => Ok(()),
        _ => Err(ApiError(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or wrong bearer token".into(),
        )),
    }
}

#[derive(Serialize)]
struct Published {
    schema_version: u32,
    id: u64,
    hash: ContentHash,
}

async fn publish(
    State(s): State<Shared>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    authorize(&s, &headers)?;
    let (id, hash) = s.node.publish(&body)?;
    tracing::info!(%hash, id, "published");
    Ok((
        StatusCode::CREATED,
        Json(Published {
            schema_version: SCHEMA_VERSION,
            id,
            hash,
        }),
    )
        .into_response())
}

async fn compose_preview(Json(req): Json<ComposeRequest>) -> Response {
    match compose(&req) {
        Ok(c) => Json(json!({ "schema_version": SCHEMA_VERSION, "text": c.text, "hash": c.hash }))
            .into_response(),
        Err(e) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "schema_version": SCHEMA_VERSION, "error": e })),
        )
            .into_response(),
    }
}

async fn validate(body: String) -> Response {
    let report = match ParsedStatement::from_text(&body) {
        Ok(p) => json!({
            "schema_version": SCHEMA_VERSION,
            "valid": true,
            "hash": p.hash,
            "type": p.content.type_label(),
            "content": p.content,
        }),
        Err(e) => {
            json!({ "schema_version": SCHEMA_VERSION, "valid": false, "error": e.to_string() })
        }
    };
    Json(report).into_response()
}

async fn own_file(State(s): State<Shared>) -> Result<Response, ApiError> {
    Ok(plain(s.node.own_statements()?.join()))
}

async fn own_statement(
    State(s): State<Shared>,
    Path(file): Path<String>,
) -> Result<Response, ApiError> {
    let hash = file
        .strip_suffix(".txt")
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "not-found", file.clone()))?;
    let h = parse_hash(hash)?;
    let own = s.node.own_statements()?;
    let text = own
        .statements
        .into_iter()
        .find(|t| ContentHash::of_bytes(t.as_bytes()) == h)
        .ok_or(NodeError::NotFound(h))?;
    Ok(plain(text))
}
