//! Secondary cache keys for captures.
//!
//! A capture's variant key lists the request dimensions its content was
//! negotiated on, with the values the crawler sent. Replay compares the key
//! against the user's own request the way a shared cache applies `Vary`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::http::{parse_cookie_header, parse_vary_headers, Headers, VarySpec};

/// Dimension name standing for `Vary: *`.
pub const ALL_DIMENSIONS: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantConfig {
    /// Cookies that change content. Others are dropped from the key.
    pub content_cookie_names: BTreeSet<String>,
    /// Use the response's own `Vary` when it has one.
    pub honor_vary: bool,
    /// Dimensions assumed when the response carries no `Vary`.
    pub implied_vary: Vec<String>,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            content_cookie_names: BTreeSet::from(["lang".to_string()]),
            honor_vary: true,
            implied_vary: vec!["cookie".to_string()],
        }
    }
}

impl VariantConfig {
    /// Lowercases names and dimensions.
    pub fn normalized(mut self) -> Self {
        self.content_cookie_names = self
            .content_cookie_names
            .iter()
            .map(|n| n.to_ascii_lowercase())
            .collect();
        self.implied_vary = self
            .implied_vary
            .iter()
            .map(|d| d.trim().to_ascii_lowercase())
            .collect();
        self
    }
}

/// Sorted `(dimension, value)` pairs. Empty means the capture does not vary.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariantKey(Vec<(String, String)>);

impl VariantKey {
    pub fn empty() -> Self {
        VariantKey(Vec::new())
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dimensions(&self) -> Vec<&str> {
        self.0.iter().map(|(d, _)| d.as_str()).collect()
    }

    pub fn get(&self, dimension: &str) -> Option<&str> {
        self.0.iter().find(|(d, _)| d == dimension).map(|(_, v)| v.as_str())
    }

    /// Key that `request_headers` would produce on this key's dimensions.
    pub fn project(&self, request_headers: &Headers, cfg: &VariantConfig) -> VariantKey {
        if self.get(ALL_DIMENSIONS).is_some() {
            fingerprint(request_headers)
        } else {
            key_for_dimensions(request_headers, self.dimensions(), cfg)
        }
    }

    /// Whether a request with `request_headers` may be served this capture.
    pub fn matches(&self, request_headers: &Headers, cfg: &VariantConfig) -> bool {
        self.project(request_headers, cfg) == *self
    }
}

impl fmt::Display for VariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(d, v)| format!("{d}: {v}")).collect();
        f.write_str(&parts.join(" | "))
    }
}

/// Value of the `cookie` dimension: only content cookies, sorted, as
/// `name=value` joined by `;`.
pub fn cookie_dimension_value(request_headers: &Headers, cfg: &VariantConfig) -> String {
    let mut kept: Vec<(String, String)> = request_headers
        .get_all("cookie")
        .flat_map(parse_cookie_header)
        .filter(|(n, _)| cfg.content_cookie_names.contains(&n.to_ascii_lowercase()))
        .collect();
    kept.sort();
    kept.dedup_by(|a, b| a.0 == b.0);
    kept.iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn key_for_dimensions<'a, I>(request_headers: &Headers, dims: I, cfg: &VariantConfig) -> VariantKey
where
    I: IntoIterator<Item = &'a str>,
{
    let mut pairs: Vec<(String, String)> = Vec::new();
    for dim in dims {
        let dim = dim.to_ascii_lowercase();
        if pairs.iter().any(|(d, _)| *d == dim) {
            continue;
        }
        let value = if dim == "cookie" {
            cookie_dimension_value(request_headers, cfg)
        } else {
            request_headers
                .get_joined(&dim)
                .map(|v| v.trim().to_string())
                .unwrap_or_default()
        };
        pairs.push((dim, value));
    }
    pairs.sort();
    VariantKey(pairs)
}

/// Every request header, for `Vary: *`.
fn fingerprint(request_headers: &Headers) -> VariantKey {
    let names: BTreeSet<&str> = request_headers.iter().map(|(n, _)| n).collect();
    let mut pairs = vec![(ALL_DIMENSIONS.to_string(), String::new())];
    for n in names {
        pairs.push((n.to_string(), request_headers.get_joined(n).unwrap_or_default()));
    }
    pairs.sort();
    VariantKey(pairs)
}

/// Derives the key stored with a capture.
pub fn derive_variant_key(request_headers: &Headers, response_headers: &Headers, cfg: &VariantConfig) -> VariantKey {
    let vary = parse_vary_headers(response_headers);
    let dims = if cfg.honor_vary && vary.is_present() {
        vary
    } else if cfg.implied_vary.is_empty() {
        VarySpec::Empty
    } else {
        VarySpec::Fields(cfg.implied_vary.clone())
    };
    match dims {
        VarySpec::Empty => VariantKey::empty(),
        VarySpec::All => fingerprint(request_headers),
        VarySpec::Fields(f) => key_for_dimensions(request_headers, f.iter().map(String::as_str), cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(pairs: &[(&str, &str)]) -> Headers {
        pairs.iter().copied().collect()
    }

    #[test]
    fn cookie_dimension_keeps_content_cookies_only() {
        let key = derive_variant_key(
            &h(&[("Cookie", "lang=kn; _sess=abc")]),
            &h(&[("Vary", "Cookie")]),
            &VariantConfig::default(),
        );
        assert_eq!(key.pairs(), &[("cookie".to_string(), "lang=kn".to_string())]);
    }

    #[test]
    fn implied_vary() {
        let none = VariantConfig {
            implied_vary: vec![],
            ..Default::default()
        };
        assert!(derive_variant_key(&h(&[("Cookie", "lang=kn")]), &h(&[]), &none).is_empty());
        let key = derive_variant_key(&h(&[]), &h(&[]), &VariantConfig::default());
        assert_eq!(key.pairs(), &[("cookie".to_string(), String::new())]);
    }

    #[test]
    fn honor_vary_off_uses_implied() {
        let cfg = VariantConfig {
            honor_vary: false,
            implied_vary: vec![],
            ..Default::default()
        };
        let key = derive_variant_key(
            &h(&[("Accept-Language", "ur")]),
            &h(&[("Vary", "Accept-Language")]),
            &cfg,
        );
        assert!(key.is_empty());
    }

    #[test]
    fn multiple_dimensions_sorted() {
        let key = derive_variant_key(
            &h(&[("Accept-Language", " ur "), ("Cookie", "z=1; lang=pt")]),
            &h(&[("Vary", "Cookie, Accept-Language, User-Agent")]),
            &VariantConfig::default(),
        );
        assert_eq!(key.dimensions(), ["accept-language", "cookie", "user-agent"]);
        assert_eq!(key.get("accept-language"), Some("ur"));
        assert_eq!(key.get("cookie"), Some("lang=pt"));
        assert_eq!(key.get("user-agent"), Some(""));
    }

    #[test]
    fn star_fingerprint_and_matching() {
        let req = h(&[("User-Agent", "crawler"), ("Cookie", "lang=kn; _s=1")]);
        let key = derive_variant_key(&req, &h(&[("Vary", "*")]), &VariantConfig::default());
        assert_eq!(key.get("*"), Some(""));
        assert_eq!(key.get("cookie"), Some("lang=kn; _s=1"));
        assert!(key.matches(&req, &VariantConfig::default()));
        assert!(!key.matches(&h(&[("Cookie", "lang=kn")]), &VariantConfig::default()));
    }

    #[test]
    fn matches_projects_onto_stored_dimensions() {
        let cfg = VariantConfig::default();
        let key = derive_variant_key(&h(&[("Cookie", "lang=en")]), &h(&[]), &cfg);
        assert!(key.matches(&h(&[("Cookie", "other=1; lang=en")]), &cfg));
        assert!(!key.matches(&h(&[("Cookie", "lang=pt")]), &cfg));
        assert!(!key.matches(&h(&[]), &cfg));
        assert!(VariantKey::empty().matches(&h(&[("Cookie", "lang=pt")]), &cfg));
    }
}
