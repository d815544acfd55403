//! HTTP routes. Every write goes through [`Project`](triagebase::project::Project)
//! on the project's writer; reads use committed snapshots.

use std::collections::BTreeMap;
use std::str::FromStr;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use triagebase::ingest::{AdapterRegistry, UploadMeta};
use triagebase::lifecycle::audit_ndjson;
use triagebase::metrics::weekly_snapshot;
use triagebase::model::{SeverityBand, Status, ToolCategory, ToolDescriptor};
use triagebase::project::{BulkStatus, WriteAck};
use triagebase::views::{self, FindingFilter, Role, SortKey, SortOrder};

use crate::auth::{CiAuth, UserAuth};
use crate::error::ApiError;
use crate::paging::{page_size, query_hash, Cursor};
use crate::state::{AppState, ProjectHandle};

const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/formats", get(formats))
        .route("/projects/{project}/reports", post(upload_report))
        .route("/projects/{project}/findings", get(list_findings))
        .route("/projects/{project}/findings/bulk-status", post(bulk_status))
        .route("/projects/{project}/findings/{id}", get(finding_detail))
        .route("/projects/{project}/findings/{id}/status", patch(set_status))
        .route("/projects/{project}/findings/{id}/priority", patch(set_priority))
        .route("/projects/{project}/queries/{name}", get(run_query))
        .route("/projects/{project}/metrics/weekly", get(weekly_metrics))
        .route("/projects/{project}/dashboard", get(dashboard))
        .route("/projects/{project}/audit", get(audit))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// JSON bodies that fail to parse are a 400, like every other bad input.
fn body<T: DeserializeOwned>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn healthz(State(state): State<AppState>) -> Json<Value> {
    Json(json!({"status": "ok", "projects": state.project_ids().len()}))
}

async fn formats() -> Json<Value> {
    Json(json!({ "formats": AdapterRegistry::default().tags() }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct UploadParams {
    format: Option<String>,
    tool: Option<String>,
    tool_version: Option<String>,
    category: Option<String>,
    scope: Option<String>,
    report_id: Option<String>,
    commit: Option<String>,
}

async fn upload_report(
    _: CiAuth,
    State(state): State<AppState>,
    Path(project): Path<String>,
    Query(params): Query<UploadParams>,
    document: Bytes,
) -> Result<Response, ApiError> {
    let mut meta = UploadMeta::new(project.clone(), Utc::now());
    if let Some(name) = params.tool {
        let category = match params.category.as_deref() {
            None => ToolCategory::Other,
            Some(c) => ToolCategory::from_str(c).map_err(|e| ApiError::bad_request(e.to_string()))?,
        };
        let tool = ToolDescriptor::new(name, params.tool_version.unwrap_or_default(), category)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        meta = meta.with_tool(tool);
    }
    if let Some(scope) = params.scope {
        meta = meta.with_scope(scope);
    }
    if let Some(id) = params.report_id {
        meta = meta.with_report_id(id);
    }
    meta.commit_ref = params.commit;

    let handle = state.project_or_create(&project)?;
    let format = params.format;
    let summary = handle
        .write(move |p| p.ingest(&document, format.as_deref(), meta))
        .await??;
    let status = if summary.quarantined.is_some() {
        StatusCode::ACCEPTED
    } else {
        StatusCode::CREATED
    };
    tracing::info!(project, report = %summary.report_id, new_raw = summary.new_raw, "report ingested");
    let body = json!({
        "report_id": summary.report_id,
        "new_raw": summary.new_raw,
        "new_agg": summary.new_agg,
        "status_changes": summary.status_changes,
        "warnings": summary.warnings,
        "quarantined": summary.quarantined,
        "firings": summary.trace.firings.len(),
        "version": handle.snapshot().version(),
    });
    Ok((status, Json(body)).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ListParams {
    view: Option<String>,
    status: Option<String>,
    severity: Option<String>,
    tool: Option<String>,
    new_since: Option<String>,
    sort: Option<String>,
    order: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

fn parse_list<T: FromStr>(s: Option<&str>) -> Result<Vec<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    s.into_iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| T::from_str(s).map_err(|e| ApiError::bad_request(e.to_string())))
        .collect()
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, ApiError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.to_utc());
    }
    NaiveDate::from_str(s)
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| ApiError::bad_request(format!("`{s}` is neither RFC 3339 nor YYYY-MM-DD")))
}

impl ListParams {
    fn filter(&self) -> Result<FindingFilter, ApiError> {
        Ok(FindingFilter {
            status: parse_list::<Status>(self.status.as_deref())?,
            severity: parse_list::<SeverityBand>(self.severity.as_deref())?,
            tool: self.tool.clone(),
            new_since: self.new_since.as_deref().map(parse_time).transpose()?,
        })
    }

    fn fingerprint(&self) -> u64 {
        query_hash(&[
            self.view.as_deref(),
            self.status.as_deref(),
            self.severity.as_deref(),
            self.tool.as_deref(),
            self.new_since.as_deref(),
            self.sort.as_deref(),
            self.order.as_deref(),
        ])
    }
}

async fn list_findings(
    _: UserAuth,
    State(state): State<AppState>,
    Path(project): Path<String>,
    Query(params): Query<ListParams>,
) -> Result<Json<Value>, ApiError> {
    let handle = state.project(&project)?;
    let filter = params.filter()?;
    let sort = SortKey::from_str(params.sort.as_deref().unwrap_or("priority")).map_err(ApiError::bad_request)?;
    let order = SortOrder::from_str(params.order.as_deref().unwrap_or("desc")).map_err(ApiError::bad_request)?;
    let limit = page_size(params.limit)?;
    let fingerprint = params.fingerprint();

    let (store, offset) = match params.cursor.as_deref() {
        Some(c) => {
            let cursor = Cursor::decode(c)?;
            if cursor.query != fingerprint {
                return Err(ApiError::bad_request("cursor belongs to a different filter or sort"));
            }
            let store = handle
                .pinned(cursor.version)
                .ok_or_else(|| ApiError::new(StatusCode::GONE, "cursor expired; restart from the first page"))?;
            (store, cursor.offset)
        }
        None => {
            let store = handle.snapshot();
            handle.pin(&store);
            (store, 0)
        }
    };

    let view = params.view.as_deref().unwrap_or("aggregated");
    let (total, items) = match view {
        "aggregated" => page(views::list_aggregated(&store, &filter, sort, order), offset, limit),
        "locations" => page(views::list_locations(&store, &filter, sort, order), offset, limit),
        other => return Err(ApiError::bad_request(format!("unknown view `{other}`"))),
    };
    let next = offset + limit;
    let next_cursor = (next < total).then(|| {
        Cursor {
            version: store.version(),
            offset: next,
            query: fingerprint,
        }
        .encode()
    });
    Ok(Json(json!({
        "view": view,
        "version": store.version(),
        "total": total,
        "items": items,
        "next_cursor": next_cursor,
    })))
}

fn page<T: serde::Serialize>(rows: Vec<T>, offset: usize, limit: usize) -> (usize, Vec<Value>) {
    let total = rows.len();
    let items = rows
        .into_iter()
        .skip(offset)
        .take(limit)
        .map(|r| serde_json::to_value(r).expect("rows serialize"))
        .collect();
    (total, items)
}

async fn finding_detail(
    _: UserAuth,
    State(state): State<AppState>,
    Path((project, id)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let store = state.project(&project)?.snapshot();
    let detail = views::detail(&store, &id).ok_or_else(|| ApiError::not_found(format!("unknown finding `{id}`")))?;
    Ok(Json(json!({"version": store.version(), "finding": detail})))
}

fn ack(handle: &ProjectHandle, ack: WriteAck) -> Json<Value> {
    Json(json!({
        "input_id": ack.input_id,
        "changed": ack.changed,
        "version": handle.snapshot().version(),
    }))
}

#[derive(Deserialize)]
struct StatusBody {
    status: Status,
}

async fn set_status(
    user: UserAuth,
    State(state): State<AppState>,
    Path((project, id)): Path<(String, String)>,
    b: Result<Json<StatusBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let status = body(b)?.status;
    let handle = state.project(&project)?;
    let result = handle
        .write(move |p| p.set_status(&id, status, &user.name, Utc::now()))
        .await??;
    Ok(ack(&handle, result))
}

#[derive(Deserialize)]
struct PriorityBody {
    priority: f64,
}

async fn set_priority(
    user: UserAuth,
    State(state): State<AppState>,
    Path((project, id)): Path<(String, String)>,
    b: Result<Json<PriorityBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let priority = body(b)?.priority;
    let handle = state.project(&project)?;
    let result = handle
        .write(move |p| p.set_priority(&id, priority, &user.name, Utc::now()))
        .await??;
    Ok(ack(&handle, result))
}

async fn bulk_status(
    user: UserAuth,
    State(state): State<AppState>,
    Path(project): Path<String>,
    b: Result<Json<BulkStatus>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let req = body(b)?;
    let handle = state.project(&project)?;
    let result = handle
        .write(move |p| p.bulk_status(&req, &user.name, Utc::now()))
        .await??;
    Ok(ack(&handle, result))
}

/// Query-string values that read as JSON scalars are passed as such.
fn query_params(raw: BTreeMap<String, String>) -> Value {
    let map = raw
        .into_iter()
        .map(|(k, v)| {
            let value = match serde_json::from_str::<Value>(&v) {
                Ok(x @ (Value::Number(_) | Value::Bool(_))) => x,
                _ => Value::String(v),
            };
            (k, value)
        })
        .collect();
    Value::Object(map)
}

async fn run_query(
    _: UserAuth,
    State(state): State<AppState>,
    Path((project, name)): Path<(String, String)>,
    Query(raw): Query<BTreeMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let store = state.project(&project)?.snapshot();
    let query = state
        .queries
        .get(name.as_str())
        .ok_or_else(|| ApiError::bad_request(format!("unknown query `{name}`")))?;
    let result = query
        .evaluate(&store, &query_params(raw))
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(json!({"query": name, "version": store.version(), "result": result})))
}

#[derive(Deserialize)]
struct WeeklyParams {
    as_of: Option<NaiveDate>,
}

async fn weekly_metrics(
    _: UserAuth,
    State(state): State<AppState>,
    Path(project): Path<String>,
    params: Result<Query<WeeklyParams>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let store = state.project(&project)?.snapshot();
    let as_of = params.as_of.unwrap_or_else(|| Utc::now().date_naive());
    Ok(Json(json!(weekly_snapshot(&store, &project, as_of))))
}

#[derive(Deserialize)]
struct DashboardParams {
    role: Option<String>,
}

async fn dashboard(
    user: UserAuth,
    State(state): State<AppState>,
    Path(project): Path<String>,
    Query(params): Query<DashboardParams>,
) -> Result<Json<Value>, ApiError> {
    let role = match params.role.as_deref() {
        None => user.role,
        Some(r) => Role::from_str(r).map_err(ApiError::bad_request)?,
    };
    let store = state.project(&project)?.snapshot();
    Ok(Json(views::dashboard(&store, &project, role, Utc::now())))
}

async fn audit(_: UserAuth, State(state): State<AppState>, Path(project): Path<String>) -> Result<Response, ApiError> {
    let store = state.project(&project)?.snapshot();
    let body = audit_ndjson(triagebase::document::StoreExt::status_changes(&*store));
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
