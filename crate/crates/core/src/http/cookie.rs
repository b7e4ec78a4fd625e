//! `Set-Cookie` and `Cookie` header handling.
//!
//! Only the scope and lifetime attributes (`Domain`, `Path`, `Expires`,
//! `Max-Age`) influence storage. `Secure`, `HttpOnly` and `SameSite` are
//! recorded but never enforced.

use serde::{Deserialize, Serialize};

use super::uri::CanonicalUri;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cookie {
    pub name: String,
    pub value: String,
    pub domain: String,
    pub host_only: bool,
    pub path: String,
    pub expires_at: Option<Timestamp>,
    pub created_at: Timestamp,
    #[serde(default)]
    pub secure: bool,
    #[serde(default)]
    pub http_only: bool,
    #[serde(default)]
    pub same_site: Option<String>,
}

impl Cookie {
    pub fn is_session(&self) -> bool {
        self.expires_at.is_none()
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        self.expires_at.is_some_and(|e| e <= now)
    }

    /// Host matching: exact for host-only cookies, otherwise the host
    /// equals the domain or is a subdomain of it.
    pub fn domain_matches(&self, host: &str) -> bool {
        if self.host_only {
            host == self.domain
        } else {
            domain_match(host, &self.domain)
        }
    }

    pub fn path_matches(&self, request_path: &str) -> bool {
        path_match(request_path, &self.path)
    }
}

pub fn domain_match(host: &str, domain: &str) -> bool {
    host == domain
        || (host.len() > domain.len()
            && host.ends_with(domain)
            && host.as_bytes()[host.len() - domain.len() - 1] == b'.')
}

/// Cookie path-match: identical, or a prefix ending at a `/` boundary.
pub fn path_match(request_path: &str, cookie_path: &str) -> bool {
    if request_path == cookie_path {
        return true;
    }
    request_path.starts_with(cookie_path)
        && (cookie_path.ends_with('/') || request_path.as_bytes()[cookie_path.len()] == b'/')
}

/// Directory of the request path, used when `Path` is absent or invalid.
pub fn default_path(uri_path: &str) -> String {
    if !uri_path.starts_with('/') {
        return "/".to_string();
    }
    match uri_path.rfind('/') {
        Some(0) | None => "/".to_string(),
        Some(i) => uri_path[..i].to_string(),
    }
}

/// Parses one `Set-Cookie` value received from `request_uri` at `now`.
///
/// Returns `None` when the header must be ignored: empty name, no `=` in
/// the leading name/value segment, or a `Domain` the request host does not
/// belong to.
pub fn parse_set_cookie(header_value: &str, request_uri: &CanonicalUri, now: Timestamp) -> Option<Cookie> {
    let mut parts = header_value.split(';');
    let (name, value) = parts.next()?.split_once('=')?;
    let name = name.trim();
    if name.is_empty() {
        return None;
    }
    let value = value.trim();

    let mut domain_attr: Option<String> = None;
    let mut path_attr: Option<String> = None;
    let mut expires: Option<Timestamp> = None;
    let mut max_age: Option<i64> = None;
    let mut secure = false;
    let mut http_only = false;
    let mut same_site = None;

    for attr in parts {
        let (k, v) = match attr.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (attr.trim(), ""),
        };
        match k.to_ascii_lowercase().as_str() {
            "domain" => {
                let d = v.trim_start_matches('.').to_ascii_lowercase();
                if !d.is_empty() {
                    domain_attr = Some(d);
                }
            }
            "path" => {
                path_attr = v.starts_with('/').then(|| v.to_string());
            }
            "expires" => {
                if let Some(t) = Timestamp::parse_rfc1123(v) {
                    expires = Some(t);
                }
            }
            "max-age" => {
                let digits = v.strip_prefix('-').unwrap_or(v);
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    max_age = Some(
                        v.parse::<i64>()
                            .unwrap_or(if v.starts_with('-') { i64::MIN } else { i64::MAX }),
                    );
                }
            }
            "secure" => secure = true,
            "httponly" => http_only = true,
            "samesite" => same_site = Some(v.to_string()),
            _ => {}
        }
    }

    let host = request_uri.host();
    let (domain, host_only) = match domain_attr {
        Some(d) => {
            if !domain_match(host, &d) {
                return None;
            }
            (d, false)
        }
        None => (host.to_string(), true),
    };

    // Max-Age wins over Expires; a non-positive Max-Age means "already expired".
    let expires_at = match (max_age, expires) {
        (Some(secs), _) if secs <= 0 => Some(now),
        (Some(secs), _) => Some(now.plus_secs(secs)),
        (None, Some(t)) => Some(t.max(now)),
        (None, None) => None,
    };

    Some(Cookie {
        name: name.to_string(),
        value: value.to_string(),
        domain,
        host_only,
        path: path_attr.unwrap_or_else(|| default_path(request_uri.path())),
        expires_at,
        created_at: now,
        secure,
        http_only,
        same_site,
    })
}

/// Serializes pairs into a `Cookie` request header value.
pub fn cookie_header<'a, I>(pairs: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    pairs
        .into_iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Splits a `Cookie` request header into name/value pairs, in order.
/// Segments without `=` or with an empty name are skipped.
pub fn parse_cookie_header(value: &str) -> Vec<(String, String)> {
    value
        .split(';')
        .filter_map(|seg| {
            let (n, v) = seg.split_once('=')?;
            let n = n.trim();
            (!n.is_empty()).then(|| (n.to_string(), v.trim().to_string()))
        })
        .collect()
}
