//! Random archives and jars, plus brute-force reference implementations
//! that share no code with the selection and matching paths they check.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use stickyjar::http::{canonicalize, CanonicalUri, Headers};
use stickyjar::jar::{CookieJar, JarPolicy};
use stickyjar::replay::Fallback;
use stickyjar::store::{derive_variant_key, ArchiveRecord, ArchiveStore, VariantConfig, VariantKey};
use stickyjar::Timestamp;

pub const T0: Timestamp = Timestamp::from_unix(1_546_344_000);

pub const URIS: [&str; 3] = [
    "https://twitter.com/",
    "https://twitter.com/i/sidebar",
    "https://twitter.com/?lang=kn",
];
const LANGS: [&str; 4] = ["en", "kn", "pt", "ur"];

pub fn uri(s: &str) -> CanonicalUri {
    canonicalize(s).unwrap()
}

pub fn random_request_headers<R: Rng>(rng: &mut R) -> Headers {
    let mut h = Headers::new();
    h.append("user-agent", "test-agent");
    match rng.gen_range(0..4) {
        0 => {}
        1 => h.append("cookie", format!("lang={}", LANGS.choose(rng).unwrap())),
        2 => h.append(
            "cookie",
            format!("_sess={}; lang={}", rng.gen_range(0..3), LANGS.choose(rng).unwrap()),
        ),
        _ => h.append("cookie", format!("_sess={}", rng.gen_range(0..3))),
    }
    if rng.gen_bool(0.4) {
        h.append("accept-language", *LANGS.choose(rng).unwrap());
    }
    h
}

pub fn random_record<R: Rng>(rng: &mut R, cfg: &VariantConfig) -> ArchiveRecord {
    let req = random_request_headers(rng);
    let lang = *LANGS.choose(rng).unwrap();
    let mut resp = Headers::new();
    resp.append("content-language", lang);
    match rng.gen_range(0..6) {
        0 => resp.append("vary", "Cookie"),
        1 => resp.append("vary", "Accept-Language"),
        2 => {
            resp.append("vary", "cookie");
            resp.append("Vary", "accept-language");
        }
        3 if rng.gen_bool(0.3) => resp.append("vary", "*"),
        _ => {}
    }
    let body_len = rng.gen_range(0..64);
    let mut body: Vec<u8> = (0..body_len).map(|_| rng.gen()).collect();
    if rng.gen_bool(0.5) {
        body.extend_from_slice(format!("<html lang=\"{lang}\">").as_bytes());
    }
    ArchiveRecord {
        id: 0,
        uri: uri(URIS.choose(rng).unwrap()),
        // narrow window so equal timestamps happen
        datetime: T0.plus_secs(rng.gen_range(0..40)),
        variant_key: derive_variant_key(&req, &resp, cfg),
        request_headers: req,
        response_status: *[200u16, 200, 404, 0].choose(rng).unwrap(),
        response_headers: resp,
        body,
    }
}

pub fn random_cfg<R: Rng>(rng: &mut R) -> VariantConfig {
    let mut cfg = VariantConfig::default();
    if rng.gen_bool(0.3) {
        cfg.content_cookie_names.insert("_sess".to_string());
    }
    cfg.honor_vary = rng.gen_bool(0.8);
    cfg.implied_vary = match rng.gen_range(0..3) {
        0 => vec![],
        1 => vec!["cookie".to_string()],
        _ => vec!["cookie".to_string(), "accept-language".to_string()],
    };
    cfg
}

pub fn fill_store<R: Rng>(rng: &mut R, store: &mut ArchiveStore, n: usize) {
    let cfg = store.variant_config().clone();
    for _ in 0..n {
        store.append(random_record(rng, &cfg)).unwrap();
    }
}

/// Nearest capture by |dt|, earlier capture on ties, then smaller id.
pub fn brute_force_baseline(store: &ArchiveStore, u: &CanonicalUri, target: Timestamp) -> Option<u64> {
    let mut best: Option<&ArchiveRecord> = None;
    for r in store.records() {
        if r.uri != *u {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (dr, db) = (
                    (r.datetime.unix() - target.unix()).abs(),
                    (b.datetime.unix() - target.unix()).abs(),
                );
                dr < db || (dr == db && (r.datetime < b.datetime || (r.datetime == b.datetime && r.id < b.id)))
            }
        };
        if better {
            best = Some(r);
        }
    }
    best.map(|r| r.id)
}

/// Reference check that a request is consistent with a stored key: each
/// stored dimension's value must equal what the request carries, with the
/// cookie dimension reduced to the configured content cookies.
pub fn oracle_consistent(key: &VariantKey, ctx: &Headers, cfg: &VariantConfig) -> bool {
    let joined = |name: &str| -> String {
        let v: Vec<&str> = ctx.iter().filter(|(n, _)| *n == name).map(|(_, v)| v).collect();
        v.join(", ")
    };
    let star = key.pairs().iter().any(|(d, _)| d == "*");
    if star {
        let mut names: Vec<&str> = ctx.iter().map(|(n, _)| n).collect();
        names.sort();
        names.dedup();
        let mut expected: Vec<(String, String)> = vec![("*".into(), String::new())];
        expected.extend(names.iter().map(|n| (n.to_string(), joined(n))));
        expected.sort();
        return key.pairs() == expected.as_slice();
    }
    key.pairs().iter().all(|(dim, val)| {
        let got = if dim == "cookie" {
            let mut pairs: Vec<(String, String)> = Vec::new();
            for (n, v) in ctx.iter() {
                if n != "cookie" {
                    continue;
                }
                for seg in v.split(';') {
                    if let Some((cn, cv)) = seg.split_once('=') {
                        let cn = cn.trim();
                        if !cn.is_empty()
                            && cfg.content_cookie_names.contains(&cn.to_lowercase())
                            && !pairs.iter().any(|(x, _)| x == cn)
                        {
                            pairs.push((cn.to_string(), cv.trim().to_string()));
                        }
                    }
                }
            }
            pairs.sort();
            pairs
                .iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(";")
        } else {
            joined(dim).trim().to_string()
        };
        got == *val
    })
}

/// Restrict to consistent captures, then nearest; fall back per `fallback`.
pub fn brute_force_variant(
    store: &ArchiveStore,
    u: &CanonicalUri,
    target: Timestamp,
    ctx: &Headers,
    cfg: &VariantConfig,
    fallback: Fallback,
) -> Option<u64> {
    let mut best: Option<&ArchiveRecord> = None;
    for r in store.records() {
        if r.uri != *u || !oracle_consistent(&r.variant_key, ctx, cfg) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (dr, db) = (
                    (r.datetime.unix() - target.unix()).abs(),
                    (b.datetime.unix() - target.unix()).abs(),
                );
                dr < db || (dr == db && (r.datetime < b.datetime || (r.datetime == b.datetime && r.id < b.id)))
            }
        };
        if better {
            best = Some(r);
        }
    }
    match (best, fallback) {
        (Some(r), _) => Some(r.id),
        (None, Fallback::NearestAny) => brute_force_baseline(store, u, target),
        (None, Fallback::NotFound) => None,
    }
}

/// Linear scan equivalent of `lookup`: (datetime, key, id) sorted.
pub fn linear_lookup(store: &ArchiveStore, u: &CanonicalUri) -> Vec<(Timestamp, VariantKey, u64)> {
    let mut rows: Vec<_> = store
        .records()
        .filter(|r| r.uri == *u)
        .map(|r| (r.datetime, r.variant_key.clone(), r.id))
        .collect();
    rows.sort_by_key(|(t, _, id)| (*t, *id));
    rows
}

/// Jar built from random Netscape-file rows (so every field is one the
/// format can carry).
pub fn random_jar<R: Rng>(rng: &mut R) -> CookieJar {
    let n = rng.gen_range(0..12);
    let mut text = String::new();
    for _ in 0..n {
        let domain = *["twitter.com", "example.org", "a.b.example.net"].choose(rng).unwrap();
        let host_only = rng.gen_bool(0.5);
        let http_only = rng.gen_bool(0.2);
        let path = *["/", "/i", "/i/x", "/page/1"].choose(rng).unwrap();
        let secure = rng.gen_bool(0.3);
        let expiry: i64 = if rng.gen_bool(0.5) {
            0
        } else {
            rng.gen_range(1_500_000_000..2_200_000_000)
        };
        let name = format!(
            "{}{}",
            *["lang", "sid", "_ga", "guest_id"].choose(rng).unwrap(),
            rng.gen_range(0..3)
        );
        let value: String = (0..rng.gen_range(0..10))
            .map(|_| *b"abcdefXYZ0123456789-._~:/".choose(rng).unwrap() as char)
            .collect();
        text.push_str(&format!(
            "{}{}{}\t{}\t{path}\t{}\t{expiry}\t{name}\t{value}\n",
            if http_only { "#HttpOnly_" } else { "" },
            if host_only { "" } else { "." },
            domain,
            if host_only { "FALSE" } else { "TRUE" },
            if secure { "TRUE" } else { "FALSE" },
        ));
    }
    let (jar, report) = CookieJar::import_netscape(&text, JarPolicy::faithful(), T0);
    assert!(report.skipped.is_empty(), "{:?}", report.skipped);
    jar
}
