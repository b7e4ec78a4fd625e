//! The origin simulator as a real HTTP listener.

use std::sync::Arc;

use axum::extract::{Request, State};
use axum::response::Response;
use axum::Router;
use tokio::net::TcpListener;

use super::{handle, SiteConfig};
use crate::net::{to_axum, to_model};

pub fn router(site: SiteConfig) -> Router {
    Router::new().fallback(serve_one).with_state(Arc::new(site))
}

async fn serve_one(State(site): State<Arc<SiteConfig>>, req: Request) -> Response {
    let model = to_model(&site.origin(), &req);
    to_axum(handle(&model, &site))
}

/// Serves `site` on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener, site: SiteConfig) -> std::io::Result<()> {
    axum::serve(listener, router(site)).await
}
