//! Memento selection and composite reconstruction.
//!
//! Baseline mode picks the capture nearest the target datetime using only
//! the canonical URI, which is how common replay systems behave. Variant
//! mode first keeps the captures whose stored variant key matches the
//! replay request (a shared cache applying `Vary`), then picks the nearest.

#[cfg(feature = "net")]
pub mod server;
mod service;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crawler::embedded_resources;
use crate::http::{CanonicalUri, Headers};
use crate::store::{ArchiveRecord, ArchiveStore, IndexEntry, VariantConfig};
use crate::time::Timestamp;

pub use service::{parse_replay_path, ReplayService, ReplayTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Baseline,
    VariantAware,
}

/// What variant mode does when no capture matches the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Serve the nearest capture of any variant, flagged as a fallback.
    #[default]
    NearestAny,
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReplayMode {
    pub kind: ModeKind,
    pub fallback: Fallback,
}

impl ReplayMode {
    pub const BASELINE: ReplayMode = ReplayMode {
        kind: ModeKind::Baseline,
        fallback: Fallback::NearestAny,
    };

    pub fn variant_aware(fallback: Fallback) -> Self {
        ReplayMode {
            kind: ModeKind::VariantAware,
            fallback,
        }
    }
}

/// Headers of the replay user's request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestContext {
    pub headers: Headers,
}

impl RequestContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_cookie(cookie: &str) -> Self {
        RequestContext {
            headers: Headers::new().with("cookie", cookie),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// Baseline: URI and datetime only.
    Nearest,
    /// Variant key matched the request.
    Variant,
    /// No variant matched; nearest of any variant served.
    Fallback,
}

#[derive(Debug, Clone, Copy)]
pub struct Selection<'a> {
    pub record: &'a ArchiveRecord,
    pub matched: MatchKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("no capture of {uri} can be served")]
    NotFound { uri: String },
}

/// Capture nearest to `target`; ties go to the earlier capture, then the
/// smaller id.
pub fn nearest<'a, I>(candidates: I, target: Timestamp) -> Option<&'a IndexEntry>
where
    I: IntoIterator<Item = &'a IndexEntry>,
{
    candidates
        .into_iter()
        .min_by_key(|e| (e.datetime.distance(target), e.datetime, e.id))
}

pub fn select_memento<'a>(
    store: &'a ArchiveStore,
    uri: &CanonicalUri,
    target: Timestamp,
    mode: ReplayMode,
    ctx: &RequestContext,
    cfg: &VariantConfig,
) -> Option<Selection<'a>> {
    let rows = store.lookup(uri);
    let (entry, matched) = match mode.kind {
        ModeKind::Baseline => (nearest(rows, target)?, MatchKind::Nearest),
        ModeKind::VariantAware => {
            let matching = rows.iter().filter(|e| e.variant_key.matches(&ctx.headers, cfg));
            match (nearest(matching, target), mode.fallback) {
                (Some(e), _) => (e, MatchKind::Variant),
                (None, Fallback::NearestAny) => (nearest(rows, target)?, MatchKind::Fallback),
                (None, Fallback::NotFound) => return None,
            }
        }
    };
    store.get(entry.id).map(|record| Selection { record, matched })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositePart {
    pub uri: CanonicalUri,
    pub record: Option<ArchiveRecord>,
    pub matched: Option<MatchKind>,
}

/// A root capture plus the captures chosen for its embedded resources.
#[derive(Debug, Clone, Serialize)]
pub struct CompositeMemento {
    pub root: ArchiveRecord,
    pub root_matched: MatchKind,
    pub parts: Vec<CompositePart>,
    pub target_datetime: Timestamp,
}

/// Selects the root for `target`, then each resource embedded in the root's
/// body, independently, targeting the root's capture time. Baseline mode
/// selects parts with an empty context. Parts absent from the store are
/// reported missing; nothing is fetched from anywhere else.
pub fn reconstruct_composite(
    store: &ArchiveStore,
    uri: &CanonicalUri,
    target: Timestamp,
    mode: ReplayMode,
    ctx: &RequestContext,
    cfg: &VariantConfig,
) -> Result<CompositeMemento, ReplayError> {
    let root = select_memento(store, uri, target, mode, ctx, cfg)
        .ok_or_else(|| ReplayError::NotFound { uri: uri.to_string() })?;
    let part_ctx = match mode.kind {
        ModeKind::Baseline => RequestContext::empty(),
        ModeKind::VariantAware => ctx.clone(),
    };
    let parts = embedded_resources(&root.record.body, &root.record.uri)
        .into_iter()
        .map(|part_uri| {
            let sel = select_memento(store, &part_uri, root.record.datetime, mode, &part_ctx, cfg);
            CompositePart {
                uri: part_uri,
                record: sel.map(|s| s.record.clone()),
                matched: sel.map(|s| s.matched),
            }
        })
        .collect();
    Ok(CompositeMemento {
        root: root.record.clone(),
        root_matched: root.matched,
        parts,
        target_datetime: target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::canonicalize;
    use crate::store::derive_variant_key;

    const T: Timestamp = Timestamp::from_unix(1_546_344_000);

    fn add(store: &mut ArchiveStore, uri: &str, t: Timestamp, lang: &str) -> u64 {
        let req = Headers::new().with("cookie", format!("lang={lang}"));
        let resp = Headers::new().with("content-language", lang);
        store
            .append(ArchiveRecord {
                id: 0,
                uri: canonicalize(uri).unwrap(),
                datetime: t,
                variant_key: derive_variant_key(&req, &resp, store.variant_config()),
                request_headers: req,
                response_status: 200,
                response_headers: resp,
                body: Vec::new(),
            })
            .unwrap()
    }

    fn two_capture_store() -> (ArchiveStore, u64, u64) {
        let mut s = ArchiveStore::in_memory(VariantConfig::default());
        let kn = add(&mut s, "https://twitter.com/", T.plus_secs(-10), "kn");
        let en = add(&mut s, "https://twitter.com/", T.plus_secs(30), "en");
        (s, kn, en)
    }

    #[test]
    fn baseline_picks_closest() {
        let (s, kn, _) = two_capture_store();
        let cfg = s.variant_config().clone();
        let uri = canonicalize("https://twitter.com/").unwrap();
        let sel = select_memento(
            &s,
            &uri,
            T,
            ReplayMode::BASELINE,
            &RequestContext::with_cookie("lang=en"),
            &cfg,
        )
        .unwrap();
        assert_eq!(sel.record.id, kn);
        assert_eq!(sel.matched, MatchKind::Nearest);
    }

    #[test]
    fn variant_restricts_then_picks_nearest() {
        let (s, _, en) = two_capture_store();
        let cfg = s.variant_config().clone();
        let uri = canonicalize("https://twitter.com/").unwrap();
        let mode = ReplayMode::variant_aware(Fallback::NotFound);
        let sel = select_memento(&s, &uri, T, mode, &RequestContext::with_cookie("lang=en"), &cfg).unwrap();
        assert_eq!(sel.record.id, en);
        assert_eq!(sel.matched, MatchKind::Variant);
        assert!(select_memento(&s, &uri, T, mode, &RequestContext::with_cookie("lang=pt"), &cfg).is_none());
        let fb = select_memento(
            &s,
            &uri,
            T,
            ReplayMode::variant_aware(Fallback::NearestAny),
            &RequestContext::with_cookie("lang=pt"),
            &cfg,
        )
        .unwrap();
        assert_eq!(fb.matched, MatchKind::Fallback);
    }

    #[test]
    fn empty_store_not_found() {
        let s = ArchiveStore::in_memory(VariantConfig::default());
        let uri = canonicalize("https://twitter.com/").unwrap();
        assert!(select_memento(
            &s,
            &uri,
            T,
            ReplayMode::BASELINE,
            &RequestContext::empty(),
            &VariantConfig::default()
        )
        .is_none());
        assert!(reconstruct_composite(
            &s,
            &uri,
            T,
            ReplayMode::BASELINE,
            &RequestContext::empty(),
            &VariantConfig::default()
        )
        .is_err());
    }

    #[test]
    fn tie_goes_to_earlier() {
        let mut s = ArchiveStore::in_memory(VariantConfig::default());
        let later = add(&mut s, "https://twitter.com/", T.plus_secs(5), "en");
        let earlier = add(&mut s, "https://twitter.com/", T.plus_secs(-5), "kn");
        let same_time = add(&mut s, "https://twitter.com/", T.plus_secs(-5), "ar");
        let uri = canonicalize("https://twitter.com/").unwrap();
        let sel = select_memento(
            &s,
            &uri,
            T,
            ReplayMode::BASELINE,
            &RequestContext::empty(),
            &VariantConfig::default(),
        )
        .unwrap();
        assert_eq!(sel.record.id, earlier);
        assert_ne!(sel.record.id, later);
        assert_ne!(sel.record.id, same_time);
    }
}
