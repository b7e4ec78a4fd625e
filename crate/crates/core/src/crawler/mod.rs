//! Breadth-first archival crawler.
//!
//! One session owns one cookie jar and one frontier and runs strictly in
//! sequence. Before each dequeue the jar is pruned; each request carries
//! the jar's cookies for its URI, and each response's `Set-Cookie` fields
//! go back into the jar. Capture times come from a synthetic clock
//! (`start + i * clock_step`), so a crawl is exactly reproducible.

mod fetch;
mod frontier;
mod links;

use serde::{Deserialize, Serialize};

use crate::http::{cookie_header, parse_set_cookie, CanonicalUri, Headers, HttpRequest, HttpResponse};
use crate::jar::{CookieJar, JarPolicy};
use crate::store::{derive_variant_key, ArchiveRecord, VariantConfig};
use crate::time::Timestamp;

pub use fetch::{Fetch, FetchError, HttpFetcher, SiteFetcher};
pub use frontier::Frontier;
pub use links::{embedded_resources, extract_links, scan, LinkKind};

pub const USER_AGENT: &str = concat!("stickyjar-crawler/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlPolicy {
    pub jar_policy: JarPolicy,
    pub max_pages: usize,
    /// Re-queue the first seed after every k dequeues. `None` or 0 disables.
    pub revisit_root_every: Option<usize>,
    /// Seconds between consecutive requests.
    pub clock_step: u64,
}

impl Default for CrawlPolicy {
    fn default() -> Self {
        CrawlPolicy {
            jar_policy: JarPolicy::faithful(),
            max_pages: 200,
            revisit_root_every: Some(5),
            clock_step: 60,
        }
    }
}

/// Everything a session produced.
#[derive(Debug, Clone)]
pub struct CrawlOutcome {
    pub records: Vec<ArchiveRecord>,
    /// URIs in dequeue order.
    pub dequeued: Vec<CanonicalUri>,
    pub jar: CookieJar,
}

/// Crawls from `seeds` with a fresh jar.
pub fn crawl<F: Fetch>(
    seeds: &[CanonicalUri],
    fetch: &mut F,
    policy: &CrawlPolicy,
    cfg: &VariantConfig,
    start: Timestamp,
) -> Vec<ArchiveRecord> {
    let jar = CookieJar::new(policy.jar_policy.clone());
    crawl_session(seeds, fetch, policy, cfg, start, jar).records
}

/// Crawls from `seeds`, starting from an existing jar.
pub fn crawl_session<F: Fetch>(
    seeds: &[CanonicalUri],
    fetch: &mut F,
    policy: &CrawlPolicy,
    cfg: &VariantConfig,
    start: Timestamp,
    mut jar: CookieJar,
) -> CrawlOutcome {
    assert!(policy.clock_step > 0, "clock_step must be positive");
    let mut frontier = Frontier::new();
    for s in seeds {
        frontier.push(s.clone());
    }
    let revisit = policy.revisit_root_every.filter(|k| *k > 0);
    let mut records = Vec::new();
    let mut dequeued = Vec::new();
    let step = i64::try_from(policy.clock_step).unwrap_or(i64::MAX);

    while records.len() < policy.max_pages {
        let i = records.len();
        let now = start.plus_secs(step.saturating_mul(i as i64));
        jar.prune(now);
        let Some(uri) = frontier.pop() else { break };
        dequeued.push(uri.clone());

        let (record, links) = capture(&uri, &Headers::new(), fetch, &mut jar, cfg, now, (i + 1) as u64);
        for link in links {
            frontier.push(link);
        }
        records.push(record);

        if let (Some(k), Some(seed)) = (revisit, seeds.first()) {
            if records.len() % k == 0 {
                frontier.push_exempt(seed.clone());
            }
        }
    }
    CrawlOutcome { records, dequeued, jar }
}

/// Fetches one URI with the jar's cookies, updates the jar, and returns the
/// capture plus the links to follow (none unless the response was 2xx).
fn capture<F: Fetch>(
    uri: &CanonicalUri,
    extra_headers: &Headers,
    fetch: &mut F,
    jar: &mut CookieJar,
    cfg: &VariantConfig,
    now: Timestamp,
    id: u64,
) -> (ArchiveRecord, Vec<CanonicalUri>) {
    let mut request = HttpRequest::get(uri.to_string()).header("user-agent", USER_AGENT);
    for (n, v) in extra_headers.iter() {
        request.headers.append(n, v);
    }
    let cookies = jar.cookies_for(uri, now);
    if !cookies.is_empty() {
        request.headers.append(
            "cookie",
            cookie_header(cookies.iter().map(|(n, v)| (n.as_str(), v.as_str()))),
        );
    }

    let response = match fetch.fetch(&request) {
        Ok(r) => r,
        Err(_) => HttpResponse {
            status: 0,
            headers: Headers::new(),
            body: Vec::new(),
        },
    };
    for raw in response.set_cookies() {
        if let Some(c) = parse_set_cookie(raw, uri, now) {
            jar.store(c, now);
        }
    }
    let links = if (200..300).contains(&response.status) {
        extract_links(&response.body, uri)
    } else {
        Vec::new()
    };
    let record = ArchiveRecord {
        id,
        uri: uri.clone(),
        datetime: now,
        variant_key: derive_variant_key(&request.headers, &response.headers, cfg),
        request_headers: request.headers,
        response_status: response.status,
        response_headers: response.headers,
        body: response.body,
    };
    (record, links)
}

/// One step of a scripted capture schedule.
#[derive(Debug, Clone)]
pub struct ScriptStep {
    /// Seconds after the schedule's start.
    pub offset: i64,
    pub uri: CanonicalUri,
    pub headers: Headers,
    /// Start a fresh browsing session (empty jar) before this step.
    pub new_session: bool,
}

impl ScriptStep {
    pub fn new(offset: i64, uri: CanonicalUri) -> Self {
        ScriptStep {
            offset,
            uri,
            headers: Headers::new(),
            new_session: false,
        }
    }

    pub fn fresh_session(mut self) -> Self {
        self.new_session = true;
        self
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.append(name, value);
        self
    }
}

/// Runs an explicit schedule of captures instead of a frontier walk. The
/// jar behaves as in [`crawl`]. Steps must be in non-decreasing time order.
pub fn capture_script<F: Fetch>(
    steps: &[ScriptStep],
    fetch: &mut F,
    jar_policy: &JarPolicy,
    cfg: &VariantConfig,
    start: Timestamp,
) -> Vec<ArchiveRecord> {
    let mut jar = CookieJar::new(jar_policy.clone());
    let mut out = Vec::with_capacity(steps.len());
    let mut last = i64::MIN;
    for (i, step) in steps.iter().enumerate() {
        assert!(step.offset >= last, "script steps must be in time order");
        last = step.offset;
        if step.new_session {
            jar.clear();
        }
        let now = start.plus_secs(step.offset);
        jar.prune(now);
        let (record, _) = capture(&step.uri, &step.headers, fetch, &mut jar, cfg, now, (i + 1) as u64);
        out.push(record);
    }
    out
}
