//! Link scanner for the simulator's HTML dialect.
//!
//! Grammar: tags are `<name attr="v" attr='v' attr=v ...>`; comments
//! `<!-- ... -->` are skipped. Links come from `<link rel="alternate"
//! href>`, `<a href>` and `<iframe src>` (embedded fragments). Anything
//! else is ignored.

use crate::http::CanonicalUri;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Alternate,
    Anchor,
    Embed,
}

/// Every link in document order, resolved and canonicalized. Duplicates
/// are kept.
pub fn extract_links(body: &[u8], base: &CanonicalUri) -> Vec<CanonicalUri> {
    scan(body, base).into_iter().map(|(_, u)| u).collect()
}

/// Only the embedded resources (`<iframe src>`), in document order.
pub fn embedded_resources(body: &[u8], base: &CanonicalUri) -> Vec<CanonicalUri> {
    scan(body, base)
        .into_iter()
        .filter(|(k, _)| *k == LinkKind::Embed)
        .map(|(_, u)| u)
        .collect()
}

pub fn scan(body: &[u8], base: &CanonicalUri) -> Vec<(LinkKind, CanonicalUri)> {
    let html = String::from_utf8_lossy(body);
    let mut out = Vec::new();
    let mut rest: &str = &html;
    while let Some(lt) = rest.find('<') {
        rest = &rest[lt + 1..];
        if let Some(after) = rest.strip_prefix("!--") {
            rest = after.find("-->").map_or("", |e| &after[e + 3..]);
            continue;
        }
        let name_len = rest.find(|c: char| !c.is_ascii_alphanumeric()).unwrap_or(rest.len());
        let name = rest[..name_len].to_ascii_lowercase();
        let Some(gt) = rest.find('>') else { break };
        let attrs = parse_attrs(&rest[name_len..gt]);
        rest = &rest[gt + 1..];

        let attr = |key: &str| attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let found = match name.as_str() {
            "link" => attr("rel")
                .filter(|rel| {
                    rel.split_ascii_whitespace()
                        .any(|r| r.eq_ignore_ascii_case("alternate"))
                })
                .and(attr("href"))
                .map(|h| (LinkKind::Alternate, h)),
            "a" => attr("href").map(|h| (LinkKind::Anchor, h)),
            "iframe" => attr("src").map(|h| (LinkKind::Embed, h)),
            _ => None,
        };
        if let Some((kind, href)) = found {
            if let Ok(u) = base.resolve(href) {
                out.push((kind, u));
            }
        }
    }
    out
}

fn parse_attrs(s: &str) -> Vec<(String, String)> {
    let mut attrs = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        let name_end = rest
            .find(|c: char| c.is_whitespace() || c == '=' || c == '/')
            .unwrap_or(rest.len());
        let name = rest[..name_end].to_ascii_lowercase();
        rest = rest[name_end..].trim_start();
        let mut value = String::new();
        if let Some(after) = rest.strip_prefix('=') {
            let after = after.trim_start();
            let (v, remaining) = match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let inner = &after[1..];
                    match inner.find(q) {
                        Some(end) => (&inner[..end], &inner[end + 1..]),
                        None => (inner, ""),
                    }
                }
                _ => {
                    let end = after.find(char::is_whitespace).unwrap_or(after.len());
                    (&after[..end], &after[end..])
                }
            };
            value = v.to_string();
            rest = remaining;
        } else if name.is_empty() {
            // stray '/' or similar
            rest = &rest[1.min(rest.len())..];
        }
        if !name.is_empty() {
            attrs.push((name, value));
        }
        rest = rest.trim_start();
    }
    attrs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{canonicalize, HttpRequest};
    use crate::origin::{handle, SiteConfig};

    fn base() -> CanonicalUri {
        canonicalize("https://twitter.com/").unwrap()
    }

    #[test]
    fn origin_root_page() {
        let site = SiteConfig::default();
        let resp = handle(&HttpRequest::get("https://twitter.com/"), &site);
        let links = scan(&resp.body, &base());
        let alternates: Vec<String> = links
            .iter()
            .filter(|(k, _)| *k == LinkKind::Alternate)
            .map(|(_, u)| u.to_string())
            .collect();
        assert_eq!(alternates.len(), 48);
        assert_eq!(alternates[0], "https://twitter.com/");
        assert_eq!(alternates.last().unwrap(), "https://twitter.com/?lang=kn");
        // page model and extracted links agree
        let expected: Vec<String> = site.page("/").unwrap().links_out;
        let all: Vec<String> = extract_links(&resp.body, &base())
            .iter()
            .map(|u| u.to_string())
            .collect();
        let mut a = all.clone();
        let mut b = expected;
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let embeds: Vec<String> = embedded_resources(&resp.body, &base())
            .iter()
            .map(|u| u.to_string())
            .collect();
        assert_eq!(
            embeds,
            ["https://twitter.com/i/sidebar", "https://twitter.com/i/notifications"]
        );
    }

    #[test]
    fn no_links() {
        assert!(extract_links(b"<html><body>hi</body></html>", &base()).is_empty());
        assert!(extract_links(b"", &base()).is_empty());
    }

    #[test]
    fn duplicates_preserved_and_junk_skipped() {
        let body = br#"<a href="/x"><A HREF='/x'>
            <!-- <a href="/commented"> -->
            <link rel="stylesheet" href="/style.css">
            <link rel="Alternate" hreflang=fr href=?lang=fr>
            <a href="mailto:someone"><a name="anchor"><a href="http://bad host/">
            <iframe src="/i/sidebar"></iframe>"#;
        let got: Vec<String> = extract_links(body, &base()).iter().map(|u| u.to_string()).collect();
        assert_eq!(
            got,
            [
                "https://twitter.com/x",
                "https://twitter.com/x",
                "https://twitter.com/?lang=fr",
                "https://twitter.com/i/sidebar"
            ]
        );
    }

    #[test]
    fn unterminated_tag() {
        assert!(extract_links(br#"<a href="/x""#, &base()).is_empty());
    }
}
