//! Netscape / curl cookie file format.
//!
//! One cookie per line, seven tab-separated fields:
//! `domain  include-subdomains  path  secure  expiry  name  value`.
//! Expiry is Unix seconds with `0` meaning a session cookie. Domain cookies
//! are written with a leading dot, and `#HttpOnly_` prefixes the domain of
//! HttpOnly cookies, as curl does.

use super::{CookieJar, Entry, JarPolicy};
use crate::http::Cookie;
use crate::time::Timestamp;

pub const NETSCAPE_HEADER: &str = "# Netscape HTTP Cookie File\n";
const HTTP_ONLY_PREFIX: &str = "#HttpOnly_";

fn flag(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "TRUE" => Some(true),
        "FALSE" => Some(false),
        _ => None,
    }
}

/// Rows skipped while importing, with 1-based line numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub imported: usize,
    pub skipped: Vec<(usize, String)>,
}

impl CookieJar {
    pub fn export_netscape(&self) -> String {
        let mut out = String::from(NETSCAPE_HEADER);
        for c in self.iter() {
            let mut domain = String::new();
            if c.http_only {
                domain.push_str(HTTP_ONLY_PREFIX);
            }
            if !c.host_only {
                domain.push('.');
            }
            domain.push_str(&c.domain);
            let expiry = c.expires_at.map_or(0, Timestamp::unix);
            out.push_str(&format!(
                "{domain}\t{}\t{}\t{}\t{expiry}\t{}\t{}\n",
                flag(!c.host_only),
                c.path,
                flag(c.secure),
                c.name,
                c.value
            ));
        }
        out
    }

    /// Loads a cookie file. Rows are inserted as written, without applying
    /// the policy's lifetime cap. Malformed rows are skipped and reported.
    pub fn import_netscape(text: &str, policy: JarPolicy, now: Timestamp) -> (CookieJar, ImportReport) {
        let mut jar = CookieJar::new(policy);
        let mut report = ImportReport::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            let (http_only, line) = match line.strip_prefix(HTTP_ONLY_PREFIX) {
                Some(rest) => (true, rest),
                None => (false, line),
            };
            if line.trim().is_empty() || (!http_only && line.starts_with('#')) {
                continue;
            }
            match parse_row(line, http_only, now) {
                Ok(cookie) => {
                    let seq = jar.next_seq;
                    jar.next_seq += 1;
                    jar.entries.insert(super::key(&cookie), Entry { cookie, seq });
                    report.imported += 1;
                }
                Err(reason) => report.skipped.push((line_no, reason)),
            }
        }
        (jar, report)
    }
}

fn parse_row(line: &str, http_only: bool, now: Timestamp) -> Result<Cookie, String> {
    let fields: Vec<&str> = line.splitn(7, '\t').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 tab-separated fields, found {}", fields.len()));
    }
    let include_subdomains = parse_flag(fields[1]).ok_or("include-subdomains flag must be TRUE or FALSE")?;
    let secure = parse_flag(fields[3]).ok_or("secure flag must be TRUE or FALSE")?;
    let domain = fields[0].trim_start_matches('.').to_ascii_lowercase();
    if domain.is_empty() {
        return Err("empty domain".into());
    }
    let path = fields[2];
    if !path.starts_with('/') {
        return Err("path must start with '/'".into());
    }
    let expiry: i64 = fields[4].parse().map_err(|_| format!("bad expiry {:?}", fields[4]))?;
    let name = fields[5];
    if name.is_empty() {
        return Err("empty cookie name".into());
    }
    let expires_at = (expiry != 0).then(|| Timestamp::from_unix(expiry));
    Ok(Cookie {
        name: name.to_string(),
        value: fields[6].to_string(),
        domain,
        host_only: !include_subdomains,
        path: path.to_string(),
        expires_at,
        created_at: expires_at.map_or(now, |e| e.min(now)),
        secure,
        http_only,
        same_site: None,
    })
}
