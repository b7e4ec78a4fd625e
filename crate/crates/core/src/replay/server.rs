//! The replay service on a TCP listener.

use std::sync::Arc;

use axum::extract::{Request, State};
use axum::response::Response;
use axum::Router;
use tokio::net::TcpListener;

use super::ReplayService;
use crate::http::Headers;
use crate::net::to_axum;

pub fn router(service: ReplayService) -> Router {
    Router::new().fallback(replay_one).with_state(Arc::new(service))
}

async fn replay_one(State(service): State<Arc<ReplayService>>, req: Request) -> Response {
    if req.method() != axum::http::Method::GET && req.method() != axum::http::Method::HEAD {
        return to_axum(crate::http::HttpResponse::new(405).body(b"only GET is supported\n".to_vec()));
    }
    let path = req
        .uri()
        .path_and_query()
        .map(|p| p.as_str())
        .unwrap_or("/")
        .to_string();
    let headers: Headers = req
        .headers()
        .iter()
        .filter_map(|(n, v)| v.to_str().ok().map(|v| (n.as_str(), v.to_string())))
        .collect();
    to_axum(service.respond(&path, &headers))
}

pub async fn serve(listener: TcpListener, service: ReplayService) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
