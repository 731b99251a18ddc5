use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use granule_core::io::{decode_shard, to_config_json, write_config, write_trajectory};
use granule_core::{Bounds, Camera, Colormap, InSituConfig, ParticleFrame, Provenance, RolloutResult};
use granule_scope::serve::{router, OCTET_STREAM};

fn rollout() -> RolloutResult {
    let frames = (0..4)
        .map(|k| {
            let x = 0.1 + 0.01 * k as f64;
            ParticleFrame::new(
                k,
                k as f64 * 0.0025,
                2,
                vec![x, 0.1, x + 0.05, 0.1, x, 0.15],
                vec![4.0, 0.0, 4.0, 0.0, 4.0, 0.0],
                vec![0.01 * k as f64; 3],
            )
            .unwrap()
        })
        .collect();
    RolloutResult {
        frames,
        dt: 0.0025,
        provenance: Provenance::Surrogate,
        bounds: Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap(),
    }
}

fn config(label: &str) -> InSituConfig {
    let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
    InSituConfig::full_window(label, Camera::presets(&b, 16, 12), Colormap::viridis(0.0, 1.0), 100, 20, 0.005)
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("rollouts")).unwrap();
    std::fs::create_dir_all(dir.path().join("configs")).unwrap();
    write_trajectory(&dir.path().join("rollouts/demo.gtraj"), &rollout()).unwrap();
    write_config(&dir.path().join("configs/insitu.json"), &config("desk")).unwrap();
    dir
}

async fn send(dir: &std::path::Path, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = router(dir).oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get_json(dir: &std::path::Path, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(dir, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

#[tokio::test]
async fn lists_rollouts_with_summary_fields() {
    let ws = workspace();
    let (s, v) = get_json(ws.path(), "/api/rollouts").await;
    assert_eq!(s, StatusCode::OK);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["id"], "demo");
    assert_eq!(list[0]["frames"], 4);
    assert_eq!(list[0]["particles"], 3);
    assert_eq!(list[0]["dt"], 0.0025);
}

#[tokio::test]
async fn meta_reports_bounds_and_range() {
    let ws = workspace();
    let (s, v) = get_json(ws.path(), "/api/rollouts/demo/meta").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["bounds"]["hi"][0], 1.0);
    assert_eq!(v["displacement_range"][1], 0.03);
    assert_eq!(v["provenance"], "surrogate");
}

#[tokio::test]
async fn frame_as_json_and_binary() {
    let ws = workspace();
    let (s, v) = get_json(ws.path(), "/api/rollouts/demo/frames/2").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["positions"].as_array().unwrap().len(), 6);
    assert_eq!(v["positions"][0].as_f64().unwrap(), rollout().frames[2].positions[0]);

    let req = Request::get("/api/rollouts/demo/frames/2")
        .header(header::ACCEPT, OCTET_STREAM)
        .body(Body::empty())
        .unwrap();
    let (s, bytes) = send(ws.path(), req).await;
    assert_eq!(s, StatusCode::OK);
    let shard = decode_shard(&bytes).unwrap();
    assert_eq!(shard.positions, rollout().frames[2].positions);
    assert_eq!(shard.ids, vec![0, 1, 2]);
}

#[tokio::test]
async fn missing_things_are_404() {
    let ws = workspace();
    for uri in [
        "/api/rollouts/demo/frames/4",
        "/api/rollouts/nope/meta",
        "/api/rollouts/..%2Fsecret/meta",
    ] {
        let (s, _) = send(ws.path(), Request::get(uri).body(Body::empty()).unwrap()).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn configs_listed() {
    let ws = workspace();
    let (s, v) = get_json(ws.path(), "/api/configs").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v[0]["id"], "insitu");
    assert_eq!(v[0]["config"]["run_label"], "desk");
}

#[tokio::test]
async fn valid_config_is_stored() {
    let ws = workspace();
    let body = to_config_json(&config("explorer export"));
    let req = Request::post("/api/configs")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.clone()))
        .unwrap();
    let (s, b) = send(ws.path(), req).await;
    assert_eq!(s, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["id"], "explorer_export");
    let stored = std::fs::read_to_string(ws.path().join("configs/explorer_export.json")).unwrap();
    assert_eq!(stored, body);
}

#[tokio::test]
async fn invalid_config_gets_field_errors() {
    let ws = workspace();
    let mut c = serde_json::to_value(config("bad")).unwrap();
    c["cadence"] = 0.into();
    c["view_windows"]["side"] = serde_json::json!([50, 10]);
    let req = Request::post("/api/configs").body(Body::from(c.to_string())).unwrap();
    let (s, b) = send(ws.path(), req).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&b).unwrap();
    let paths: Vec<&str> = v["errors"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"cadence"), "{paths:?}");
    assert!(paths.contains(&"view_windows.side"), "{paths:?}");
    assert!(!ws.path().join("configs/bad.json").exists());

    let req = Request::post("/api/configs").body(Body::from("{\"cadence\": 1, \"bogus\": true}")).unwrap();
    let (s, _) = send(ws.path(), req).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn schema_is_served() {
    let ws = workspace();
    let (s, v) = get_json(ws.path(), "/api/schema").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["type"], "object");
}
