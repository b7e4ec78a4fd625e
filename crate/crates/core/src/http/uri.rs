//! URI canonicalization.
//!
//! The canonical form is our own, not SURT: lowercase scheme and host,
//! default port elided, dot segments removed, percent escapes uppercased,
//! fragment dropped, and query pairs sorted by key then value. Every query
//! parameter is kept (`lang` in particular decides the served content).
//! The printed form is `scheme://host[:port]/path[?k=v&k=v]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed URI at byte {position}: {message}")]
pub struct UriError {
    pub position: usize,
    pub message: &'static str,
}

fn err(position: usize, message: &'static str) -> UriError {
    UriError { position, message }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalUri {
    scheme: String,
    host: String,
    port: Option<u16>,
    path: String,
    query: Vec<(String, String)>,
}

fn default_port(scheme: &str) -> Option<u16> {
    match scheme {
        "http" | "ws" => Some(80),
        "https" | "wss" => Some(443),
        _ => None,
    }
}

/// Canonicalizes an absolute URI.
pub fn canonicalize(input: &str) -> Result<CanonicalUri, UriError> {
    let lead = input.len() - input.trim_start().len();
    let s = input.trim();

    if let Some(i) = s.find(|c: char| c.is_whitespace() || c.is_control()) {
        return Err(err(lead + i, "whitespace or control character"));
    }

    // scheme
    let colon = s.find(':').ok_or_else(|| err(lead, "missing scheme"))?;
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err(err(lead, "scheme must start with a letter")),
    }
    if let Some(i) = scheme
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')))
        .map(|(i, _)| i)
    {
        return Err(err(lead + i, "invalid scheme character"));
    }
    if !s[colon..].starts_with("://") {
        return Err(err(lead + colon, "expected \"://\" after scheme"));
    }
    let scheme = scheme.to_ascii_lowercase();

    // authority
    let auth_start = colon + 3;
    let rest = &s[auth_start..];
    let auth_len = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..auth_len];
    let (auth_off, hostport) = match authority.rfind('@') {
        Some(at) => (at + 1, &authority[at + 1..]),
        None => (0, authority),
    };
    let hp_start = lead + auth_start + auth_off;

    let (host, port_str, port_off) = if hostport.starts_with('[') {
        let close = hostport
            .find(']')
            .ok_or_else(|| err(hp_start, "unterminated IPv6 literal"))?;
        let after = &hostport[close + 1..];
        let port = match after.strip_prefix(':') {
            Some(p) => Some(p),
            None if after.is_empty() => None,
            None => return Err(err(hp_start + close + 1, "junk after IPv6 literal")),
        };
        (&hostport[..=close], port, close + 2)
    } else {
        match hostport.rfind(':') {
            Some(c) => (&hostport[..c], Some(&hostport[c + 1..]), c + 1),
            None => (hostport, None, 0),
        }
    };
    if host.is_empty() {
        return Err(err(hp_start, "empty host"));
    }
    let port = match port_str {
        None | Some("") => None,
        Some(p) => {
            if let Some(i) = p.find(|c: char| !c.is_ascii_digit()) {
                return Err(err(hp_start + port_off + i, "non-digit in port"));
            }
            Some(
                p.parse::<u16>()
                    .map_err(|_| err(hp_start + port_off, "port out of range"))?,
            )
        }
    };
    let port = port.filter(|p| Some(*p) != default_port(&scheme));

    // path, query; fragment discarded
    let tail = &rest[auth_len..];
    let tail_start = lead + auth_start + auth_len;
    let tail = match tail.find('#') {
        Some(h) => &tail[..h],
        None => tail,
    };
    let (raw_path, raw_query, q_off) = match tail.find('?') {
        Some(q) => (&tail[..q], Some(&tail[q + 1..]), q + 1),
        None => (tail, None, 0),
    };
    let path = normalize_escapes(raw_path, tail_start)?;
    let path = remove_dot_segments(if path.is_empty() { "/" } else { &path });

    let mut query = Vec::new();
    if let Some(q) = raw_query {
        let q = normalize_escapes(q, tail_start + q_off)?;
        for pair in q.split('&').filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
            query.push((k.to_string(), v.to_string()));
        }
        query.sort();
    }

    Ok(CanonicalUri {
        scheme,
        host: host.to_ascii_lowercase(),
        port,
        path,
        query,
    })
}

fn normalize_escapes(s: &str, offset: usize) -> Result<String, UriError> {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes.get(i + 1..i + 3);
            match hex {
                Some(h) if h.iter().all(u8::is_ascii_hexdigit) => {
                    out.push('%');
                    out.push(h[0].to_ascii_uppercase() as char);
                    out.push(h[1].to_ascii_uppercase() as char);
                    i += 3;
                    continue;
                }
                _ => return Err(err(offset + i, "bad percent escape")),
            }
        }
        let ch = s[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    Ok(out)
}

fn remove_dot_segments(path: &str) -> String {
    let segs: Vec<&str> = path.strip_prefix('/').unwrap_or(path).split('/').collect();
    let mut out: Vec<&str> = Vec::new();
    let mut trailing = false;
    let last = segs.len() - 1;
    for (i, seg) in segs.iter().enumerate() {
        match *seg {
            "." => trailing = i == last,
            ".." => {
                out.pop();
                trailing = i == last;
            }
            s => {
                out.push(s);
                trailing = false;
            }
        }
    }
    let mut p = format!("/{}", out.join("/"));
    if trailing && !p.ends_with('/') {
        p.push('/');
    }
    p
}

impl CanonicalUri {
    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn host(&self) -> &str {
        &self.host
    }

    pub fn port(&self) -> Option<u16> {
        self.port
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn query(&self) -> &[(String, String)] {
        &self.query
    }

    pub fn query_value(&self, key: &str) -> Option<&str> {
        self.query.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `scheme://host[:port]`
    pub fn origin(&self) -> String {
        match self.port {
            Some(p) => format!("{}://{}:{}", self.scheme, self.host, p),
            None => format!("{}://{}", self.scheme, self.host),
        }
    }

    /// Path plus query, as sent on an HTTP/1.1 request line.
    pub fn path_and_query(&self) -> String {
        let mut s = self.path.clone();
        if !self.query.is_empty() {
            s.push('?');
            s.push_str(&self.query_string());
        }
        s
    }

    fn query_string(&self) -> String {
        self.query
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("&")
    }

    /// Same resource with the query removed.
    pub fn without_query(&self) -> CanonicalUri {
        CanonicalUri {
            query: Vec::new(),
            ..self.clone()
        }
    }

    /// Resolves a reference found in a document served from `self`.
    /// Handles absolute, network-path, absolute-path, query-only and
    /// relative-path references.
    pub fn resolve(&self, reference: &str) -> Result<CanonicalUri, UriError> {
        let r = reference.trim();
        let has_scheme = r
            .find(':')
            .map(|c| {
                c > 0
                    && r[..c].starts_with(|ch: char| ch.is_ascii_alphabetic())
                    && r[..c]
                        .chars()
                        .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '+' | '-' | '.'))
            })
            .unwrap_or(false);
        if has_scheme {
            canonicalize(r)
        } else if r.starts_with("//") {
            canonicalize(&format!("{}:{}", self.scheme, r))
        } else if r.starts_with('/') {
            canonicalize(&format!("{}{}", self.origin(), r))
        } else if r.starts_with('?') {
            canonicalize(&format!("{}{}{}", self.origin(), self.path, r))
        } else if r.is_empty() || r.starts_with('#') {
            Ok(self.clone())
        } else {
            let dir = &self.path[..=self.path.rfind('/').unwrap_or(0)];
            canonicalize(&format!("{}{}{}", self.origin(), dir, r))
        }
    }
}

impl fmt::Display for CanonicalUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.origin(), self.path)?;
        if !self.query.is_empty() {
            write!(f, "?{}", self.query_string())?;
        }
        Ok(())
    }
}

impl FromStr for CanonicalUri {
    type Err = UriError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        canonicalize(s)
    }
}

impl Serialize for CanonicalUri {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CanonicalUri {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        canonicalize(&s).map_err(serde::de::Error::custom)
    }
}
