use std::fs;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use stickyjar::analyzer::{bias_report, distribution};
use stickyjar::crawler::{crawl_session, CrawlPolicy, HttpFetcher, SiteFetcher};
use stickyjar::experiment::{replay_and_detect, EPOCH};
use stickyjar::http::{canonicalize, CanonicalUri};
use stickyjar::jar::{CookieJar, JarPolicy};
use stickyjar::origin::SiteConfig;
use stickyjar::replay::{Fallback, ReplayMode, ReplayService, RequestContext};
use stickyjar::store::{ArchiveStore, VariantConfig};
use stickyjar::Timestamp;

use crate::{
    usage, AnalyzeArgs, CrawlArgs, DetectArgs, FallbackArg, Format, ModeArg, PolicyPreset, ReplayArgs, SelectionArgs,
    ServeOriginArgs,
};

pub const FIXED_TTL_SECS: u64 = 300;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn load_site(path: Option<&Path>) -> Result<SiteConfig> {
    path.map_or_else(|| Ok(SiteConfig::default()), read_json)
}

pub fn parse_uri(s: &str) -> Result<CanonicalUri> {
    canonicalize(s).map_err(|e| usage(format!("bad URI {s:?}: {e}")))
}

pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    Timestamp::parse_14(s).map_err(|e| usage(e.to_string()))
}

/// `inf` for no cap, otherwise whole seconds.
pub fn parse_ttl(s: &str) -> Result<Option<Duration>> {
    match s.trim() {
        "inf" | "infinity" | "none" => Ok(None),
        n => n
            .parse::<u64>()
            .map(|secs| Some(Duration::from_secs(secs)))
            .map_err(|_| usage(format!("--cookie-max-ttl expects seconds or `inf`, got {s:?}"))),
    }
}

pub fn mode(sel: &SelectionArgs) -> ReplayMode {
    let fallback = match sel.fallback {
        FallbackArg::NearestAny => Fallback::NearestAny,
        FallbackArg::NotFound => Fallback::NotFound,
    };
    match sel.mode {
        ModeArg::Baseline => ReplayMode {
            fallback,
            ..ReplayMode::BASELINE
        },
        ModeArg::Variant => ReplayMode::variant_aware(fallback),
    }
}

fn open_archive(dir: &Path) -> Result<ArchiveStore> {
    ArchiveStore::open(dir).with_context(|| format!("opening archive {}", dir.display()))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().context("starting async runtime")
}

pub fn serve_origin(args: ServeOriginArgs) -> Result<ExitCode> {
    let site = load_site(args.site_config.as_deref())?;
    let rt = runtime()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .with_context(|| format!("binding {}:{}", args.bind, args.port))?;
        println!(
            "origin simulator for {} listening on http://{}",
            site.origin(),
            listener.local_addr()?
        );
        stickyjar::origin::server::serve(listener, site)
            .await
            .context("serving")
    })?;
    Ok(ExitCode::SUCCESS)
}

/// Contents of `crawl --config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlConfig {
    pub seed: Option<String>,
    pub site: SiteConfig,
    pub policy: CrawlPolicy,
    pub variant: VariantConfig,
    pub start: Option<String>,
}

pub fn effective_crawl_config(args: &CrawlArgs) -> Result<CrawlConfig> {
    let mut cfg: CrawlConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => CrawlConfig::default(),
    };
    if let Some(p) = &args.site_config {
        cfg.site = read_json(p)?;
    }
    if let Some(seed) = &args.seed {
        cfg.seed = Some(seed.clone());
    }
    if let Some(start) = &args.start {
        cfg.start = Some(start.clone());
    }
    match args.policy {
        Some(PolicyPreset::Faithful) => cfg.policy.jar_policy.max_ttl = None,
        Some(PolicyPreset::Fixed) => cfg.policy.jar_policy.max_ttl = Some(Duration::from_secs(FIXED_TTL_SECS)),
        None => {}
    }
    if let Some(ttl) = &args.cookie_max_ttl {
        cfg.policy.jar_policy.max_ttl = parse_ttl(ttl)?;
    }
    if let Some(n) = args.max_pages {
        cfg.policy.max_pages = n;
    }
    if let Some(k) = args.revisit_root_every {
        cfg.policy.revisit_root_every = (k > 0).then_some(k);
    }
    if let Some(step) = args.clock_step {
        cfg.policy.clock_step = step;
    }
    if cfg.policy.clock_step == 0 {
        return Err(usage("clock step must be at least 1 second"));
    }
    if !args.content_cookies.is_empty() {
        cfg.variant.content_cookie_names = args.content_cookies.iter().cloned().collect();
    }
    if let Some(dims) = &args.implied_vary {
        cfg.variant.implied_vary = dims.iter().filter(|d| !d.trim().is_empty()).cloned().collect();
    }
    if args.ignore_vary {
        cfg.variant.honor_vary = false;
    }
    cfg.variant = cfg.variant.normalized();
    Ok(cfg)
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()
        .map_err(|e| usage(format!("bad --http address {addr:?}: {e}")))?
        .next()
        .ok_or_else(|| usage(format!("--http address {addr:?} resolves to nothing")))
}

#[derive(Debug, Serialize)]
struct CrawlSummary {
    archive: String,
    seed: String,
    captured: usize,
    dequeued: usize,
    first_id: u64,
    archive_len: usize,
    jar_policy: JarPolicy,
    cookies_left: usize,
}

pub fn crawl(args: CrawlArgs) -> Result<ExitCode> {
    let cfg = effective_crawl_config(&args)?;
    let seed = parse_uri(cfg.seed.as_deref().unwrap_or(&cfg.site.root_uri().to_string()))?;
    let start = cfg.start.as_deref().map(parse_timestamp).transpose()?.unwrap_or(EPOCH);
    let mut store = ArchiveStore::open_or_create(&args.out, cfg.variant.clone())
        .with_context(|| format!("opening archive {}", args.out.display()))?;
    if *store.variant_config() != cfg.variant {
        eprintln!("note: archive keeps its own variant configuration");
    }
    let variant = store.variant_config().clone();
    let jar = CookieJar::new(cfg.policy.jar_policy.clone());
    let seeds = [seed.clone()];
    let outcome = match &args.http {
        Some(addr) => crawl_session(
            &seeds,
            &mut HttpFetcher::new(resolve(addr)?),
            &cfg.policy,
            &variant,
            start,
            jar,
        ),
        None => crawl_session(&seeds, &mut SiteFetcher(&cfg.site), &cfg.policy, &variant, start, jar),
    };
    let first_id = store.next_id();
    let captured = outcome.records.len();
    for r in outcome.records {
        store.append(r)?;
    }
    if let Some(path) = &args.cookie_file {
        fs::write(path, outcome.jar.export_netscape()).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = CrawlSummary {
        archive: args.out.display().to_string(),
        seed: seed.to_string(),
        captured,
        dequeued: outcome.dequeued.len(),
        first_id,
        archive_len: store.len(),
        jar_policy: cfg.policy.jar_policy.clone(),
        cookies_left: outcome.jar.len(),
    };
    fs::write(
        args.out.join("crawl.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    println!(
        "captured {captured} responses from {seed} into {} ({} records total)",
        args.out.display(),
        store.len()
    );
    Ok(ExitCode::SUCCESS)
}

/// A session `lang` cookie for every host in the archive.
fn lang_jar(store: &ArchiveStore, lang: &str) -> CookieJar {
    let mut hosts: Vec<&str> = store.uris().into_iter().map(|u| u.host()).collect();
    hosts.sort();
    hosts.dedup();
    let text: String = hosts
        .iter()
        .map(|h| format!("{h}\tFALSE\t/\tFALSE\t0\tlang\t{lang}\n"))
        .collect();
    CookieJar::import_netscape(&text, JarPolicy::faithful(), EPOCH).0
}

pub fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let store = open_archive(&args.archive)?;
    let default_cookies = match (&args.request_cookies, &args.lang) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let (jar, report) = CookieJar::import_netscape(&text, JarPolicy::faithful(), Timestamp::now());
            for (line, why) in &report.skipped {
                eprintln!("{}:{line}: skipped ({why})", p.display());
            }
            Some(jar)
        }
        (None, Some(lang)) => Some(lang_jar(&store, lang)),
        (None, None) => None,
    };
    let mut service = ReplayService::new(Arc::new(store), mode(&args.selection));
    service.default_cookies = default_cookies;
    let rt = runtime()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .with_context(|| format!("binding {}:{}", args.bind, args.port))?;
        println!(
            "replaying {} ({:?}) on http://{}/web/<timestamp>/<uri>",
            args.archive.display(),
            args.selection.mode,
            listener.local_addr()?
        );
        stickyjar::replay::server::serve(listener, service)
            .await
            .context("serving")
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let store = open_archive(&args.archive)?;
    let uri = parse_uri(&args.uri)?;
    match &args.against {
        Some(other) => {
            let other_store = open_archive(other)?;
            let label = |p: &Path| p.display().to_string();
            let report = bias_report(&store, &label(&args.archive), &other_store, &label(other), &uri);
            match args.format {
                Format::Text => print!("{}", report.render_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        None => {
            let d = distribution(&store, &uri);
            match args.format {
                Format::Text => {
                    println!("{} captures of {uri}", d.total);
                    for (tag, n) in &d.counts {
                        println!("  {tag:<6} {n:>6}  {:>6.1}%", 100.0 * d.fraction(tag));
                    }
                    println!("modal: {}", d.modal().unwrap_or("-"));
                    println!("entropy: {:.4} bits", d.entropy());
                    for w in &d.warnings {
                        println!("warning: {w}");
                    }
                }
                Format::Json => {
                    let mut v = serde_json::to_value(&d)?;
                    v["entropy_bits"] = d.entropy().into();
                    v["modal"] = d.modal().into();
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn detect(args: DetectArgs) -> Result<ExitCode> {
    let store = open_archive(&args.archive)?;
    let uri = parse_uri(&args.uri)?;
    let target = parse_timestamp(&args.timestamp)?;
    let ctx = match (&args.cookie, &args.lang) {
        (Some(c), _) => RequestContext::with_cookie(c),
        (None, Some(l)) => RequestContext::with_cookie(&format!("lang={l}")),
        (None, None) => RequestContext::empty(),
    };
    let outcome = replay_and_detect(&store, &uri, target, mode(&args.selection), &ctx)?;
    match args.format {
        Format::Text => print!("{}", outcome.report.render_text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&outcome.report)?),
    }
    Ok(ExitCode::SUCCESS)
}
