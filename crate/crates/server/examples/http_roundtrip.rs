//! Drive the HTTP API in process: a CI upload, a paginated listing, a
//! developer status change and the dashboard, without binding a socket.
//!
//! cargo run -p triagebase-server --example http_roundtrip

use axum::body::Body;
use axum::http::{header, Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use triagebase::views::Role;
use triagebase_server::config::{TokenConfig, UserToken};
use triagebase_server::{router, AppState, Config};

const SEVERITIES: [&str; 3] = ["low", "medium", "high"];

async fn call(app: &Router, method: Method, uri: &str, token: &str, body: Option<Value>) -> (u16, Value) {
    let mut req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::AUTHORIZATION, format!("Bearer {token}"));
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let config = Config {
        tokens: TokenConfig {
            ci: vec!["ci-secret".into()],
            users: vec![UserToken {
                token: "dev-secret".into(),
                name: "gil".into(),
                role: Role::Developer,
            }],
        },
        ..Config::default()
    };
    let app = router(AppState::new(&config)?);

    let findings: Vec<Value> = (0..5)
        .map(|i| {
            json!({"rule_id": format!("r{i}"), "title": format!("Issue {i} in handler {i}"),
                   "location": {"path": format!("svc/h{i}.go")}, "severity_raw": SEVERITIES[i % 3]})
        })
        .collect();
    let report = json!({"schema_version": "1", "tool": {"name": "gosec", "category": "static-analysis"}, "findings": findings});
    let (status, body) = call(&app, Method::POST, "/projects/billing/reports?scope=svc", "ci-secret", Some(report)).await;
    println!("upload -> {status}: {} new findings, version {}", body["new_agg"], body["version"]);

    let mut uri = "/projects/billing/findings?limit=2".to_string();
    let mut first = None;
    loop {
        let (_, page) = call(&app, Method::GET, &uri, "dev-secret", None).await;
        for item in page["items"].as_array().unwrap() {
            println!("  {} {:<8} {}", item["agg_id"].as_str().unwrap(), item["severity"]["band"].as_str().unwrap(), item["canonical_title"]);
            first.get_or_insert_with(|| item["agg_id"].as_str().unwrap().to_string());
        }
        match page["next_cursor"].as_str() {
            Some(c) => uri = format!("/projects/billing/findings?limit=2&cursor={c}"),
            None => break,
        }
    }

    let agg = first.unwrap();
    let uri = format!("/projects/billing/findings/{agg}/status");
    let (status, body) = call(&app, Method::PATCH, &uri, "dev-secret", Some(json!({"status": "InWork"}))).await;
    println!("set {agg} InWork -> {status}: {body}");
    let (status, body) = call(&app, Method::PATCH, &uri, "dev-secret", Some(json!({"status": "Disappeared"}))).await;
    println!("set {agg} Disappeared -> {status}: {}", body["error"]);

    let (_, dash) = call(&app, Method::GET, "/projects/billing/dashboard", "dev-secret", None).await;
    let widgets: Vec<&String> = dash["widgets"].as_object().unwrap().keys().collect();
    println!("dashboard for {}: {widgets:?}", dash["role"]);
    Ok(())
}
