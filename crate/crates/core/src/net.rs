//! Glue between the crate's HTTP model and axum.

use axum::body::Body;
use axum::extract::Request;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::Response;

use crate::http::{HttpRequest, HttpResponse};

/// Builds a model request from an incoming one. `origin` supplies scheme
/// and host, since a listener serves exactly one site.
pub(crate) fn to_model(origin: &str, req: &Request) -> HttpRequest {
    let path = req.uri().path_and_query().map(|p| p.as_str()).unwrap_or("/");
    let mut model = HttpRequest::get(format!("{origin}{path}"));
    model.method = req.method().as_str().to_string();
    for (name, value) in req.headers() {
        if let Ok(v) = value.to_str() {
            model.headers.append(name.as_str(), v);
        }
    }
    model
}

pub(crate) fn to_axum(resp: HttpResponse) -> Response {
    let mut out = Response::new(Body::from(resp.body));
    *out.status_mut() = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let headers = out.headers_mut();
    for (name, value) in resp.headers.iter() {
        if let (Ok(n), Ok(v)) = (HeaderName::from_bytes(name.as_bytes()), HeaderValue::from_str(value)) {
            headers.append(n, v);
        }
    }
    out
}
