//! Drives the JSON API router in-process through one round, the same
//! handlers `vibropref serve` exposes over TCP.
//!
//! ```text
//! cargo run -p vibropref --example serve_api
//! ```

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;
use vibropref::http::{router, AppState};
use vibropref::session::SystemClock;

async fn send(app: &axum::Router, method: &str, uri: &str, body: &str) -> String {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .expect("valid request");
    let response = app.clone().oneshot(request).await.expect("router is infallible");
    let status = response.status();
    let bytes = response.into_body().collect().await.expect("body").to_bytes();
    format!("{status} {}", String::from_utf8_lossy(&bytes))
}

#[tokio::main]
async fn main() {
    let app = router(AppState::new(Arc::new(SystemClock), None));
    println!("{}", send(&app, "POST", "/sessions", r#"{"config":{"budget":3,"seed":5}}"#).await);
    let query = send(&app, "GET", "/sessions/s1/query", "").await;
    println!("{}...", &query[..query.len().min(200)]);
    println!("{}", send(&app, "POST", "/sessions/s1/response", r#"{"choice":"A","confidence":4}"#).await);
    println!("{}", send(&app, "GET", "/sessions/s1/recommendation", "").await);
    println!("run `vibropref serve --port 8080` for a real listener");
}
