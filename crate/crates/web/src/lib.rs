//! Browser bindings for the interactive demo page. Every export returns a
//! JSON string so the page needs no generated type definitions.

use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use stickyjar::analyzer::{distribution, language_of, UNDETERMINED};
use stickyjar::crawler::{crawl, CrawlPolicy, SiteFetcher};
use stickyjar::experiment::{defacement_store, replay_and_detect, root_languages, EPOCH};
use stickyjar::http::HttpRequest;
use stickyjar::jar::JarPolicy;
use stickyjar::origin::{handle, negotiate_with_source, LanguageSource, SiteConfig, DEFAULT_LANGUAGES};
use stickyjar::replay::{Fallback, MatchKind, ModeKind, ReplayMode, RequestContext};
use stickyjar::store::{ArchiveStore, VariantConfig};

fn site_with(languages: usize) -> SiteConfig {
    let n = languages.clamp(2, DEFAULT_LANGUAGES.len());
    SiteConfig {
        languages: DEFAULT_LANGUAGES[..n].iter().map(|s| s.to_string()).collect(),
        ..SiteConfig::default()
    }
}

#[derive(Serialize)]
struct BiasRun {
    languages: Vec<String>,
    last_language: String,
    pages_captured: usize,
    root_sequence: Vec<String>,
    counts: std::collections::BTreeMap<String, usize>,
    modal_non_default: Option<String>,
    default_share: f64,
    entropy_bits: f64,
}

/// Crawls the simulator once. A negative `max_ttl_secs` means no cap.
pub fn bias_run(languages: usize, max_ttl_secs: i64, revisit_every: usize, max_pages: usize) -> Value {
    let site = site_with(languages);
    let jar_policy = if max_ttl_secs < 0 {
        JarPolicy::faithful()
    } else {
        JarPolicy::capped(Duration::from_secs(max_ttl_secs as u64))
    };
    let policy = CrawlPolicy {
        jar_policy,
        max_pages: max_pages.clamp(1, 2000),
        revisit_root_every: (revisit_every > 0).then_some(revisit_every),
        ..CrawlPolicy::default()
    };
    let mut store = ArchiveStore::in_memory(VariantConfig::default());
    for r in crawl(
        &[site.root_uri()],
        &mut SiteFetcher(&site),
        &policy,
        store.variant_config(),
        EPOCH,
    ) {
        store.append(r).expect("in-memory append");
    }
    let d = distribution(&store, &site.root_uri());
    let run = BiasRun {
        last_language: site.languages.last().cloned().unwrap_or_default(),
        pages_captured: store.len(),
        root_sequence: root_languages(&store, &site),
        modal_non_default: d.modal_excluding(&site.default_language).map(str::to_string),
        default_share: d.fraction(&site.default_language),
        entropy_bits: d.entropy(),
        counts: d.counts,
        languages: site.languages,
    };
    serde_json::to_value(run).expect("plain data")
}

fn match_name(m: Option<MatchKind>) -> &'static str {
    match m {
        Some(MatchKind::Nearest) => "nearest",
        Some(MatchKind::Variant) => "variant",
        Some(MatchKind::Fallback) => "fallback",
        None => "missing",
    }
}

/// Replays the defaced capture set. `mode` is `baseline` or `variant`;
/// `lang` is the replay user's `lang` cookie (empty for none).
pub fn composite(mode: &str, lang: &str) -> Result<Value, String> {
    let site = SiteConfig::default();
    let (store, target) = defacement_store(&site, "pt", "ur");
    let mode = match mode {
        "baseline" => ReplayMode::BASELINE,
        "variant" => ReplayMode::variant_aware(Fallback::NearestAny),
        other => return Err(format!("unknown mode {other:?}")),
    };
    let ctx = if lang.trim().is_empty() {
        RequestContext::empty()
    } else {
        RequestContext::with_cookie(&format!("lang={}", lang.trim()))
    };
    let out = replay_and_detect(&store, &site.root_uri(), target, mode, &ctx).map_err(|e| e.to_string())?;
    let tag = |r: &stickyjar::store::ArchiveRecord| language_of(r).tag.unwrap_or_else(|| UNDETERMINED.into());
    let parts: Vec<Value> = out
        .composite
        .parts
        .iter()
        .map(|p| {
            json!({
                "uri": p.uri.to_string(),
                "lang": p.record.as_ref().map(tag),
                "captured": p.record.as_ref().map(|r| r.datetime.to_14()),
                "variant": p.record.as_ref().map(|r| r.variant_key.to_string()),
                "matched": match_name(p.matched),
            })
        })
        .collect();
    Ok(json!({
        "mode": if out.mode.kind == ModeKind::Baseline { "baseline" } else { "variant" },
        "target": target.to_14(),
        "root": {
            "uri": out.composite.root.uri.to_string(),
            "lang": tag(&out.composite.root),
            "captured": out.composite.root.datetime.to_14(),
            "variant": out.composite.root.variant_key.to_string(),
            "matched": match_name(Some(out.composite.root_matched)),
        },
        "parts": parts,
        "languages_present": out.report.languages_present,
        "violating_parts": out.report.violating_parts.len(),
        "verdict": out.report.verdict,
    }))
}

/// Which language the simulator serves for the given request inputs.
pub fn negotiation(query_lang: &str, cookie_lang: &str, accept_language: &str) -> Value {
    let site = SiteConfig::default();
    let mut uri = site.root_uri().to_string();
    if !query_lang.trim().is_empty() {
        uri.push_str(&format!("?lang={}", query_lang.trim()));
    }
    let mut req = HttpRequest::get(uri.clone());
    if !cookie_lang.trim().is_empty() {
        req = req.header("Cookie", format!("lang={}", cookie_lang.trim()));
    }
    if !accept_language.trim().is_empty() {
        req = req.header("Accept-Language", accept_language.trim());
    }
    let (lang, source) = negotiate_with_source(&req, &site);
    let resp = handle(&req, &site);
    json!({
        "request": uri,
        "lang": lang,
        "source": match source {
            LanguageSource::Query => "query parameter",
            LanguageSource::Cookie => "cookie",
            LanguageSource::AcceptLanguage => "Accept-Language",
            LanguageSource::Default => "site default",
        },
        "set_cookie": resp.set_cookies().collect::<Vec<_>>(),
    })
}

#[wasm_bindgen]
pub fn simulate_bias(languages: u32, max_ttl_secs: i32, revisit_every: u32, max_pages: u32) -> String {
    bias_run(
        languages as usize,
        max_ttl_secs.into(),
        revisit_every as usize,
        max_pages as usize,
    )
    .to_string()
}

#[wasm_bindgen]
pub fn reconstruct(mode: &str, lang: &str) -> Result<String, JsValue> {
    composite(mode, lang)
        .map(|v| v.to_string())
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn negotiate(query_lang: &str, cookie_lang: &str, accept_language: &str) -> String {
    negotiation(query_lang, cookie_lang, accept_language).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faithful_run_favors_last_language() {
        let v = bias_run(47, -1, 5, 150);
        assert_eq!(v["modal_non_default"], "kn");
        assert_eq!(v["last_language"], "kn");
    }

    #[test]
    fn short_language_list_changes_the_winner() {
        let v = bias_run(4, -1, 5, 60);
        assert_eq!(v["last_language"], "ja");
        assert_eq!(v["modal_non_default"], "ja");
    }

    #[test]
    fn zero_ttl_is_all_default() {
        let v = bias_run(47, 0, 5, 150);
        assert_eq!(v["default_share"], 1.0);
        assert_eq!(v["entropy_bits"], 0.0);
    }

    #[test]
    fn composite_modes() {
        assert_eq!(composite("baseline", "").unwrap()["verdict"], "defaced");
        let v = composite("variant", "pt").unwrap();
        assert_eq!(v["verdict"], "consistent");
        assert_eq!(v["violating_parts"], 0);
        assert!(composite("sideways", "").is_err());
    }

    #[test]
    fn negotiation_precedence() {
        assert_eq!(negotiation("ar", "", "")["source"], "query parameter");
        assert_eq!(negotiation("", "", "")["lang"], "en");
        assert_eq!(negotiation("", "", "ur")["lang"], "ur");
        let v = negotiation("", "ar", "ur");
        assert_eq!(v["lang"], "ar");
        assert_eq!(v["source"], "cookie");
        assert_eq!(negotiation("ar", "", "")["set_cookie"][0], "lang=ar; Path=/");
    }
}
