//! Starts the HTTP API on a loopback port and drives one session through it.
//!
//! cargo run --release --example http_service

use std::sync::Arc;

use serde_json::{json, Value};
use texsynth::backend::{MockBackend, ServerHandle};
use texsynth::service::{router, SessionStore};

fn main() -> anyhow::Result<()> {
    let root = std::env::temp_dir().join("texsynth-http-example");
    let store = Arc::new(SessionStore::new(MockBackend::shared(), &root));
    let server = ServerHandle::spawn(router(store))?;
    let base = server.url();
    println!("serving {base}");

    let client = reqwest::blocking::Client::new();
    let created: Value = client
        .post(format!("{base}/sessions"))
        .json(&json!({"fixture": "sphere", "config": {"view_resolution": 256, "texture_resolution": 512}}))
        .send()?
        .json()?;
    let id = created["id"].as_str().unwrap_or_default().to_string();
    println!("session {id}");

    let run: Value = client.post(format!("{base}/sessions/{id}/auto")).json(&json!({"prompt": "glazed ceramic", "seed": 3})).send()?.json()?;
    println!("auto: {} views, coverage {}", run["views"].as_array().map_or(0, Vec::len), run["coverage"]);

    let png = client.get(format!("{base}/sessions/{id}/render?elevation=20&azimuth=40")).send()?.bytes()?;
    println!("render: {} bytes of PNG", png.len());

    let state: Value = client.get(format!("{base}/sessions/{id}/state")).send()?.json()?;
    println!("state: history {} busy {}", state["history_depth"], state["busy"]);

    let saved: Value = client.post(format!("{base}/sessions/{id}/save")).send()?.json()?;
    println!("saved to {}", saved["dir"]);
    Ok(())
}
