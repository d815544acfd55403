#![allow(dead_code)]

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use triagebase_server::config::{TokenConfig, UserToken};
use triagebase::views::Role;
use triagebase_server::{router, AppState, Config};

pub const CI: &str = "ci-token";
pub const DEV: &str = "dev-token";
pub const MGR: &str = "mgr-token";

pub fn config() -> Config {
    Config {
        tokens: TokenConfig {
            ci: vec![CI.into()],
            users: vec![
                UserToken {
                    token: DEV.into(),
                    name: "dana".into(),
                    role: Role::Developer,
                },
                UserToken {
                    token: MGR.into(),
                    name: "max".into(),
                    role: Role::Manager,
                },
            ],
        },
        ..Config::default()
    }
}

pub fn app() -> Router {
    router(AppState::new(&config()).unwrap())
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
    pub text: String,
}

pub async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Vec<u8>>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8_lossy(&bytes).into_owned();
    let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Reply { status, body, text }
}

pub async fn get(app: &Router, uri: &str, token: &str) -> Reply {
    call(app, Method::GET, uri, Some(token), None).await
}

pub async fn send_json(app: &Router, method: Method, uri: &str, token: &str, body: Value) -> Reply {
    call(app, method, uri, Some(token), Some(serde_json::to_vec(&body).unwrap())).await
}

pub async fn upload(app: &Router, project: &str, query: &str, doc: &Value) -> Reply {
    let uri = format!("/projects/{project}/reports?{query}");
    call(app, Method::POST, &uri, Some(CI), Some(serde_json::to_vec(doc).unwrap())).await
}

pub fn native(tool: &str, findings: &[(&str, &str, &str, &str)]) -> Value {
    let findings: Vec<Value> = findings
        .iter()
        .map(|(rule, title, path, sev)| json!({"rule_id": rule, "title": title, "location": {"path": path}, "severity_raw": sev}))
        .collect();
    json!({"schema_version": "1", "tool": {"name": tool, "category": "static-analysis"}, "findings": findings})
}

pub fn three_findings() -> Value {
    native(
        "codescan",
        &[
            ("sqli", "SQL injection in order lookup", "app/orders.py", "high"),
            ("xss", "Reflected cross site scripting in search page", "app/search.py", "medium"),
            ("debug", "Debug mode enabled in production settings", "app/settings.py", "low"),
        ],
    )
}
