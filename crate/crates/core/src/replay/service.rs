//! Replay endpoint logic, independent of any socket.
//!
//! `GET /web/<14-digit-timestamp>/<absolute-URI>` answers with the
//! selected capture's body. Added headers: `Memento-Datetime` (RFC 1123),
//! `X-Archive-Variant` (the capture's variant key, `-` when empty) and
//! `X-Archive-Match` (`nearest`, `variant` or `fallback`). A fallback also
//! carries a `Warning` header.

use std::sync::Arc;

use super::{select_memento, MatchKind, ReplayMode, RequestContext};
use crate::http::{canonicalize, cookie_header, CanonicalUri, Headers, HttpResponse};
use crate::jar::CookieJar;
use crate::store::{ArchiveStore, VariantConfig};
use crate::time::Timestamp;

pub const REPLAY_PREFIX: &str = "/web/";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayTarget {
    pub datetime: Timestamp,
    pub uri: CanonicalUri,
}

/// Splits a replay path into target datetime and URI. Errors carry the
/// HTTP status to answer with.
pub fn parse_replay_path(path_and_query: &str) -> Result<ReplayTarget, (u16, String)> {
    let rest = path_and_query
        .strip_prefix(REPLAY_PREFIX)
        .ok_or((404, "replay paths look like /web/<timestamp>/<uri>".to_string()))?;
    let (ts, uri) = rest
        .split_once('/')
        .ok_or((400, "missing URI after timestamp".to_string()))?;
    let datetime = Timestamp::parse_14(ts).map_err(|e| (400, e.to_string()))?;
    let uri = canonicalize(uri).map_err(|e| (400, e.to_string()))?;
    Ok(ReplayTarget { datetime, uri })
}

#[derive(Debug, Clone)]
pub struct ReplayService {
    pub store: Arc<ArchiveStore>,
    pub mode: ReplayMode,
    pub cfg: VariantConfig,
    /// Cookies sent on the user's behalf when a request has none.
    pub default_cookies: Option<CookieJar>,
}

impl ReplayService {
    pub fn new(store: Arc<ArchiveStore>, mode: ReplayMode) -> Self {
        let cfg = store.variant_config().clone();
        ReplayService {
            store,
            mode,
            cfg,
            default_cookies: None,
        }
    }

    pub fn respond(&self, path_and_query: &str, headers: &Headers) -> HttpResponse {
        let target = match parse_replay_path(path_and_query) {
            Ok(t) => t,
            Err((status, msg)) => return text(status, &msg),
        };
        let mut ctx = RequestContext {
            headers: headers.clone(),
        };
        if !ctx.headers.contains("cookie") {
            if let Some(jar) = &self.default_cookies {
                let pairs = jar.cookies_for(&target.uri, target.datetime);
                if !pairs.is_empty() {
                    ctx.headers.append(
                        "cookie",
                        cookie_header(pairs.iter().map(|(n, v)| (n.as_str(), v.as_str()))),
                    );
                }
            }
        }
        let Some(sel) = select_memento(&self.store, &target.uri, target.datetime, self.mode, &ctx, &self.cfg) else {
            return text(404, &format!("no capture of {} can be served", target.uri));
        };
        let record = sel.record;
        let status = if (100..=599).contains(&record.response_status) {
            record.response_status
        } else {
            502
        };
        let mut resp = HttpResponse::new(status).body(record.body.clone());
        resp.headers.append(
            "content-type",
            record
                .response_headers
                .get("content-type")
                .unwrap_or("text/html; charset=utf-8"),
        );
        if let Some(lang) = record.response_headers.get("content-language") {
            resp.headers.append("content-language", lang);
        }
        resp.headers.append("memento-datetime", record.datetime.to_rfc1123());
        let variant = if record.variant_key.is_empty() {
            "-".to_string()
        } else {
            record.variant_key.to_string()
        };
        resp.headers.append("x-archive-variant", variant);
        let matched = match sel.matched {
            MatchKind::Nearest => "nearest",
            MatchKind::Variant => "variant",
            MatchKind::Fallback => "fallback",
        };
        resp.headers.append("x-archive-match", matched);
        if sel.matched == MatchKind::Fallback {
            resp.headers.append(
                "warning",
                "199 - \"no capture matches the request variant; nearest capture served\"",
            );
        }
        resp
    }
}

fn text(status: u16, msg: &str) -> HttpResponse {
    HttpResponse::new(status)
        .header("content-type", "text/plain; charset=utf-8")
        .body(format!("{msg}\n").into_bytes())
}
