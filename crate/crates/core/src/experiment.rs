//! Canned experiments: the crawl-bias comparison and the defaced
//! composite scenario. Used by the CLI `demo`, the browser demo and the
//! acceptance tests.

use serde::Serialize;

use crate::analyzer::{detect_violations, language_of, ViolationReport};
use crate::crawler::{capture_script, crawl, CrawlPolicy, ScriptStep, SiteFetcher};
use crate::http::{canonicalize, CanonicalUri};
use crate::jar::JarPolicy;
use crate::origin::SiteConfig;
use crate::replay::{reconstruct_composite, CompositeMemento, ReplayError, ReplayMode, RequestContext};
use crate::store::{ArchiveRecord, ArchiveStore, StoreError, VariantConfig};
use crate::time::Timestamp;

/// 2019-01-01T12:00:00Z, the default start of simulated time.
pub const EPOCH: Timestamp = Timestamp::from_unix(1_546_344_000);

/// Crawls the in-process simulator from its root and loads the captures
/// into `store`.
pub fn crawl_into(
    store: &mut ArchiveStore,
    site: &SiteConfig,
    policy: &CrawlPolicy,
    start: Timestamp,
) -> Result<Vec<u64>, StoreError> {
    let cfg = store.variant_config().clone();
    let records = crawl(&[site.root_uri()], &mut SiteFetcher(site), policy, &cfg, start);
    records.into_iter().map(|r| store.append(r)).collect()
}

/// Root captures' languages, in capture order.
pub fn root_languages(store: &ArchiveStore, site: &SiteConfig) -> Vec<String> {
    store
        .lookup(&site.root_uri())
        .iter()
        .filter_map(|e| store.get(e.id))
        .map(|r| {
            language_of(r)
                .tag
                .unwrap_or_else(|| crate::analyzer::UNDETERMINED.to_string())
        })
        .collect()
}

/// Seconds after the schedule start at which the defaced root was captured.
pub const DEFACEMENT_ROOT_OFFSET: i64 = 3600;

/// Capture schedule that leaves the archive holding, around one instant, a
/// root page in `root_lang`, one fragment in `intruder_lang` and another
/// in the default language, each captured by a different browsing session.
/// Captures of every fragment in `root_lang` also exist, an hour away.
pub fn defacement_schedule(site: &SiteConfig, root_lang: &str, intruder_lang: &str) -> Vec<ScriptStep> {
    let origin = site.origin();
    let u = |path: &str| canonicalize(&format!("{origin}{path}")).expect("simulator paths are valid");
    let fragments = site.fragment_paths();
    let at = DEFACEMENT_ROOT_OFFSET;
    let mut steps = vec![ScriptStep::new(0, u(&format!("/?lang={root_lang}"))).fresh_session()];
    for (i, f) in fragments.iter().enumerate() {
        steps.push(ScriptStep::new(10 * (i as i64 + 1), u(f)));
    }
    // second fragment onwards picked up by a session stuck on the intruder language
    steps.push(ScriptStep::new(at - 600, u(&format!("/?lang={intruder_lang}"))).fresh_session());
    for (i, f) in fragments.iter().enumerate().skip(1) {
        steps.push(ScriptStep::new(at - 590 + i as i64, u(f)));
    }
    steps.push(ScriptStep::new(at - 10, u(&format!("/?lang={root_lang}"))).fresh_session());
    steps.push(ScriptStep::new(at, u("/")));
    // first fragment by a cookie-less session, just after the root
    if let Some(first) = fragments.first() {
        steps.push(ScriptStep::new(at + 15, u(first)).fresh_session());
    }
    steps.push(ScriptStep::new(2 * at, u("/")).fresh_session());
    steps
}

/// Builds the defacement archive in `store`; returns the root capture time.
pub fn defacement_into(
    store: &mut ArchiveStore,
    site: &SiteConfig,
    root_lang: &str,
    intruder_lang: &str,
    jar_policy: &JarPolicy,
    start: Timestamp,
) -> Result<Timestamp, StoreError> {
    let cfg = store.variant_config().clone();
    let steps = defacement_schedule(site, root_lang, intruder_lang);
    let records: Vec<ArchiveRecord> = capture_script(&steps, &mut SiteFetcher(site), jar_policy, &cfg, start);
    for r in records {
        store.append(r)?;
    }
    Ok(start.plus_secs(DEFACEMENT_ROOT_OFFSET))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayOutcome {
    pub mode: ReplayMode,
    pub composite: CompositeMemento,
    pub report: ViolationReport,
}

/// Reconstructs `uri` at `target` and checks it for mixed languages.
pub fn replay_and_detect(
    store: &ArchiveStore,
    uri: &CanonicalUri,
    target: Timestamp,
    mode: ReplayMode,
    ctx: &RequestContext,
) -> Result<ReplayOutcome, ReplayError> {
    let cfg = store.variant_config().clone();
    let composite = reconstruct_composite(store, uri, target, mode, ctx, &cfg)?;
    let report = detect_violations(&composite);
    Ok(ReplayOutcome {
        mode,
        composite,
        report,
    })
}

/// A fresh in-memory archive of the defacement scenario with the default
/// variant configuration.
pub fn defacement_store(site: &SiteConfig, root_lang: &str, intruder_lang: &str) -> (ArchiveStore, Timestamp) {
    let mut store = ArchiveStore::in_memory(VariantConfig::default());
    let target = defacement_into(
        &mut store,
        site,
        root_lang,
        intruder_lang,
        &JarPolicy::faithful(),
        EPOCH,
    )
    .expect("in-memory append");
    (store, target)
}
