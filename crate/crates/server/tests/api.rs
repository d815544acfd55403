mod common;

use axum::http::{Method, StatusCode};
use serde_json::json;

use common::*;

#[tokio::test]
async fn health_and_formats_need_no_token() {
    let app = app();
    let r = call(&app, Method::GET, "/healthz", None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["status"], "ok");
    let r = call(&app, Method::GET, "/formats", None, None).await;
    let formats = r.body["formats"].as_array().unwrap();
    for tag in ["native", "sarif", "dep-scan", "secret-scan"] {
        assert!(formats.contains(&json!(tag)), "{tag} missing from {formats:?}");
    }
}

#[tokio::test]
async fn tokens_are_checked_per_endpoint_class() {
    let app = app();
    let r = upload(&app, "shop", "", &three_findings()).await;
    assert_eq!(r.status, StatusCode::CREATED);

    let r = call(&app, Method::GET, "/projects/shop/findings", None, None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    let r = get(&app, "/projects/shop/findings", "nope").await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    let r = get(&app, "/projects/shop/findings", CI).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = call(&app, Method::POST, "/projects/shop/reports", Some(DEV), Some(b"{}".to_vec())).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn upload_reports_counts_and_rejects_duplicates() {
    let app = app();
    let doc = three_findings();
    let r = upload(&app, "shop", "report_id=build-1", &doc).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
    assert_eq!(r.body["new_raw"], 3);
    assert_eq!(r.body["new_agg"], 3);
    assert_eq!(r.body["status_changes"], 0);
    let version = r.body["version"].clone();

    let r = upload(&app, "shop", "report_id=build-1", &doc).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = get(&app, "/projects/shop/findings", DEV).await;
    assert_eq!(r.body["version"], version);
    assert_eq!(r.body["total"], 3);
}

#[tokio::test]
async fn upload_errors_map_to_status_codes() {
    let app = app();
    let r = upload(&app, "shop", "format=xml", &three_findings()).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(r.body["details"]["known"].as_array().unwrap().contains(&json!("sarif")));

    let broken = json!({"schema_version": "1", "tool": {"name": "x"}, "findings": [{"title": "no rule"}]});
    let r = upload(&app, "shop", "", &broken).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(!r.body["details"]["issues"].as_array().unwrap().is_empty());

    let r = upload(&app, "bad%2Fid", "", &three_findings()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/projects/ghost/findings", DEV).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sarif_upload_has_the_same_response_shape() {
    let app = app();
    let sarif = json!({
        "version": "2.1.0",
        "runs": [{"tool": {"driver": {"name": "lintpy"}}, "results": [{
            "ruleId": "py/path-injection", "level": "warning", "message": {"text": "path built from request"},
            "locations": [{"physicalLocation": {"artifactLocation": {"uri": "app/files.py"}, "region": {"startLine": 9}}}]
        }]}]
    });
    let r = upload(&app, "shop", "format=sarif&category=static-analysis", &sarif).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
    assert_eq!(r.body["new_raw"], 1);
    for key in ["report_id", "new_raw", "new_agg", "status_changes", "warnings", "version"] {
        assert!(r.body.get(key).is_some(), "{key} missing");
    }
}

#[tokio::test]
async fn list_filters_sorts_and_validates() {
    let app = app();
    upload(&app, "shop", "", &three_findings()).await;
    let r = get(&app, "/projects/shop/findings?status=Open&sort=severity&order=desc", DEV).await;
    assert_eq!(r.status, StatusCode::OK);
    let bands: Vec<&str> = r.body["items"].as_array().unwrap().iter().map(|i| i["severity"]["band"].as_str().unwrap()).collect();
    assert_eq!(bands, ["High", "Medium", "Low"]);

    let r = get(&app, "/projects/shop/findings?severity=High,Medium", DEV).await;
    assert_eq!(r.body["total"], 2);
    let r = get(&app, "/projects/shop/findings?view=locations&tool=codescan", DEV).await;
    assert_eq!(r.body["total"], 3);
    assert!(r.body["items"][0]["agg_id"].is_string());
    let r = get(&app, "/projects/shop/findings?new_since=2999-01-01", DEV).await;
    assert_eq!(r.body["total"], 0);

    for bad in ["status=Opened", "sort=colour", "order=up", "view=tree", "limit=0", "cursor=zzz"] {
        let r = get(&app, &format!("/projects/shop/findings?{bad}"), DEV).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn detail_and_status_writes() {
    let app = app();
    upload(&app, "shop", "", &three_findings()).await;
    let list = get(&app, "/projects/shop/findings?sort=severity", DEV).await;
    let agg = list.body["items"][0]["agg_id"].as_str().unwrap().to_string();

    let r = get(&app, &format!("/projects/shop/findings/{agg}"), DEV).await;
    assert_eq!(r.status, StatusCode::OK);
    let raw = r.body["finding"]["members"][0]["raw_id"].as_str().unwrap().to_string();
    assert!(r.body["finding"]["aggregate"]["enrichment_notes"].as_array().unwrap().len() >= 1);

    let uri = format!("/projects/shop/findings/{raw}/status");
    let r = send_json(&app, Method::PATCH, &uri, DEV, json!({"status": "Disappeared"})).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = send_json(&app, Method::PATCH, &uri, DEV, json!({"status": "Sideways"})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = send_json(&app, Method::PATCH, &uri, DEV, json!({"status": "FalsePositive"})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    assert_eq!(r.body["changed"], 1);

    // The write is visible in a fresh read and in the audit log.
    let r = get(&app, &format!("/projects/shop/findings/{raw}"), DEV).await;
    assert_eq!(r.body["finding"]["focus"], json!(raw));
    assert_eq!(r.body["finding"]["members"][0]["status"], "FalsePositive");
    let audit = get(&app, "/projects/shop/audit", DEV).await;
    let last: serde_json::Value = serde_json::from_str(audit.text.lines().last().unwrap()).unwrap();
    assert_eq!(last["actor"], "dana");
    assert_eq!(last["new"], "FalsePositive");

    let r = send_json(&app, Method::PATCH, "/projects/shop/findings/raw-nope/status", DEV, json!({"status": "Open"})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = get(&app, "/projects/shop/findings/raw-nope", DEV).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn priority_and_top_priority_query() {
    let app = app();
    upload(&app, "shop", "", &three_findings()).await;
    let list = get(&app, "/projects/shop/findings?sort=severity&order=asc", DEV).await;
    let lowest = list.body["items"][0]["agg_id"].as_str().unwrap().to_string();

    let uri = format!("/projects/shop/findings/{lowest}/priority");
    let r = send_json(&app, Method::PATCH, &uri, DEV, json!({"priority": 11.0})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = send_json(&app, Method::PATCH, &uri, DEV, json!({"priority": 9.9})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);

    let r = get(&app, "/projects/shop/queries/top_priority?n=10", DEV).await;
    assert_eq!(r.body["result"][0]["agg_id"], json!(lowest));
    // The list sorted by priority agrees with the query.
    let list = get(&app, "/projects/shop/findings?sort=priority&order=desc&limit=10", DEV).await;
    let from_list: Vec<_> = list.body["items"].as_array().unwrap().iter().map(|i| i["agg_id"].clone()).collect();
    let from_query: Vec<_> = r.body["result"].as_array().unwrap().iter().map(|i| i["agg_id"].clone()).collect();
    assert_eq!(from_list, from_query);

    let r = get(&app, "/projects/shop/queries/no_such_query", DEV).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/projects/shop/queries/new_findings", DEV).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn bulk_status_reports_location_changes() {
    let app = app();
    upload(&app, "shop", "", &three_findings()).await;
    let body = json!({"max_severity": "Medium", "status": "Accepted"});
    let r = send_json(&app, Method::POST, "/projects/shop/findings/bulk-status", MGR, body).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    assert_eq!(r.body["changed"], 2);
    let r = get(&app, "/projects/shop/queries/status_counts", DEV).await;
    assert_eq!(r.body["result"]["Accepted"], 2);
    assert_eq!(r.body["result"]["Open"], 1);
}

#[tokio::test]
async fn metrics_and_dashboards() {
    let app = app();
    upload(&app, "shop", "", &three_findings()).await;
    let today = chrono::Utc::now().date_naive();
    let r = get(&app, &format!("/projects/shop/metrics/weekly?as_of={today}"), DEV).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["n_raw_cum"], 3);
    assert_eq!(r.body["n_new_7d"], 3);
    let statuses: u64 = r.body["status_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(statuses, 3);
    let r = get(&app, "/projects/shop/metrics/weekly?as_of=last-week", DEV).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = get(&app, "/projects/shop/dashboard", DEV).await;
    assert_eq!(r.body["role"], "developer");
    assert!(r.body["widgets"]["solutions"].as_array().is_some());
    let r = get(&app, "/projects/shop/dashboard?role=security", DEV).await;
    assert_eq!(r.body["role"], "security");
    let r = get(&app, "/projects/shop/dashboard", MGR).await;
    assert_eq!(r.body["widgets"]["weekly_trend"].as_array().unwrap().len(), 8);
    let r = get(&app, "/projects/shop/dashboard?role=ceo", DEV).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn projects_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config();
    cfg.storage.path = Some(dir.path().to_path_buf());
    {
        let app = triagebase_server::router(triagebase_server::AppState::new(&cfg).unwrap());
        assert_eq!(upload(&app, "shop", "", &three_findings()).await.status, StatusCode::CREATED);
    }
    let app = triagebase_server::router(triagebase_server::AppState::new(&cfg).unwrap());
    let r = get(&app, "/projects/shop/findings", DEV).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["total"], 3);
}
