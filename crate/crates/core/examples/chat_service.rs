//! Drives the human-evaluation HTTP routes in-process through one scripted conversation.
//!
//! `dialoglab serve --config examples/configs` serves the same routes on a port.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use dialoglab::config::load_configs;
use dialoglab::service::{router, ChatService};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn post(svc: &Arc<ChatService>, path: &str, body: Value) -> anyhow::Result<Value> {
    let req = Request::post(path).header("content-type", "application/json").body(Body::from(body.to_string()))?;
    let resp = router(svc.clone()).oneshot(req).await?;
    let bytes = resp.into_body().collect().await?.to_bytes();
    Ok(serde_json::from_slice(&bytes)?)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let configs = load_configs(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/human_eval.json"))?;
    let runs = tempfile::tempdir()?;
    let svc = Arc::new(ChatService::new(configs, runs.path())?);

    let created = post(&svc, "/sessions", json!({"config": "rule_pipeline"})).await?;
    let id = created["id"].as_str().unwrap_or_default().to_string();
    println!("instructions:\n{}\nsystem: {}", created["instructions"].as_str().unwrap_or(""), created["prompt"]);
    for text in ["I am looking for a cheap restaurant in the centre", "what is the phone number", "thank you, goodbye"] {
        let reply = post(&svc, &format!("/sessions/{id}/messages"), json!({"text": text})).await?;
        println!("user: {text}\nsystem: {}", reply["reply"]);
        if reply["done"] == true {
            break;
        }
    }
    let closed = post(&svc, &format!("/sessions/{id}/close"), json!({"success": true, "stars": 4})).await?;
    println!("{}", serde_json::to_string_pretty(&closed)?);
    Ok(())
}
