//! The end-to-end experiment: crawl under a faithful and a capped jar,
//! compare root-page languages, then replay a defaced capture set under
//! each pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;

use stickyjar::analyzer::{bias_report, BiasReport, Verdict, ViolationReport};
use stickyjar::crawler::{crawl, CrawlPolicy, SiteFetcher};
use stickyjar::experiment::{defacement_into, replay_and_detect, EPOCH};
use stickyjar::jar::JarPolicy;
use stickyjar::replay::{Fallback, ReplayMode, RequestContext};
use stickyjar::store::{ArchiveStore, VariantConfig};

use crate::commands::{load_site, parse_uri};
use crate::{usage, DemoArgs, EXIT_ASSERTION};

const DAY: i64 = 86_400;

struct Pipeline {
    label: &'static str,
    jar: JarPolicy,
    mode: ReplayMode,
}

#[derive(Debug, Serialize)]
struct PipelineResult {
    label: String,
    jar_policy: JarPolicy,
    replay_mode: ReplayMode,
    crawl_records: usize,
    violations: ViolationReport,
}

#[derive(Debug, Serialize)]
struct Summary {
    sessions: usize,
    bias: BiasReport,
    pipelines: Vec<PipelineResult>,
    passed: bool,
}

/// Removes whatever a failed run left behind.
struct Cleanup {
    root: PathBuf,
    root_created: bool,
    created: Vec<PathBuf>,
    armed: bool,
}

impl Cleanup {
    fn new(root: &Path) -> Result<Self> {
        let root_created = !root.exists();
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Cleanup {
            root: root.to_path_buf(),
            root_created,
            created: Vec::new(),
            armed: true,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.created.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if !self.armed {
            return;
        }
        if self.root_created {
            let _ = fs::remove_dir_all(&self.root);
            return;
        }
        for p in self.created.iter().rev() {
            let _ = if p.is_dir() {
                fs::remove_dir_all(p)
            } else {
                fs::remove_file(p)
            };
        }
    }
}

pub fn run(args: DemoArgs) -> Result<ExitCode> {
    if args.sessions == 0 {
        return Err(usage("--sessions must be at least 1"));
    }
    let site = load_site(args.site_config.as_deref())?;
    let seed = parse_uri(args.seed.as_deref().unwrap_or(&site.root_uri().to_string()))?;
    for lang in [&args.root_lang, &args.intruder_lang] {
        if site.supported(lang).is_none() {
            return Err(usage(format!("language {lang:?} is not offered by the site")));
        }
    }
    if args.out.exists() && fs::read_dir(&args.out).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(usage(format!("{} exists and is not empty", args.out.display())));
    }

    let mut out = Cleanup::new(&args.out)?;
    let pipelines = [
        Pipeline {
            label: "faithful",
            jar: JarPolicy::faithful(),
            mode: ReplayMode::BASELINE,
        },
        Pipeline {
            label: "fixed",
            jar: JarPolicy::capped(Duration::from_secs(args.fixed_ttl)),
            mode: ReplayMode::variant_aware(Fallback::NearestAny),
        },
    ];

    let mut crawls = Vec::new();
    let mut results = Vec::new();
    for p in &pipelines {
        let policy = CrawlPolicy {
            jar_policy: p.jar.clone(),
            max_pages: args.max_pages,
            ..CrawlPolicy::default()
        };
        let mut store = ArchiveStore::create(out.path(&format!("{}-crawl", p.label)), VariantConfig::default())?;
        for session in 0..args.sessions {
            let start = EPOCH.plus_secs(session as i64 * DAY);
            for r in crawl(
                std::slice::from_ref(&seed),
                &mut SiteFetcher(&site),
                &policy,
                store.variant_config(),
                start,
            ) {
                store.append(r)?;
            }
        }

        let mut defaced = ArchiveStore::create(out.path(&format!("{}-defacement", p.label)), VariantConfig::default())?;
        let target = defacement_into(&mut defaced, &site, &args.root_lang, &args.intruder_lang, &p.jar, EPOCH)?;
        let ctx = match p.mode.kind {
            stickyjar::replay::ModeKind::Baseline => RequestContext::empty(),
            stickyjar::replay::ModeKind::VariantAware => {
                RequestContext::with_cookie(&format!("lang={}", args.root_lang))
            }
        };
        let outcome = replay_and_detect(&defaced, &site.root_uri(), target, p.mode, &ctx)?;
        out.write(&format!("violations_{}.txt", p.label), &outcome.report.render_text())?;
        out.write(
            &format!("violations_{}.json", p.label),
            &(serde_json::to_string_pretty(&outcome.report)? + "\n"),
        )?;
        results.push(PipelineResult {
            label: p.label.to_string(),
            jar_policy: p.jar.clone(),
            replay_mode: p.mode,
            crawl_records: store.len(),
            violations: outcome.report,
        });
        crawls.push(store);
    }

    let bias = bias_report(&crawls[0], "faithful", &crawls[1], "fixed", &seed);
    out.write("bias_report.txt", &bias.render_text())?;
    out.write("bias_report.json", &(serde_json::to_string_pretty(&bias)? + "\n"))?;

    let faithful = &results[0].violations;
    let fixed = &results[1].violations;
    let passed = !faithful.violating_parts.is_empty()
        && faithful.verdict == Verdict::Defaced
        && fixed.violating_parts.is_empty()
        && fixed.verdict == Verdict::Consistent;
    let summary = Summary {
        sessions: args.sessions,
        bias,
        pipelines: results,
        passed,
    };
    out.write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    out.armed = false;

    print!("{}", summary.bias.render_text());
    let default_share = |d: &stickyjar::analyzer::DistributionSummary| {
        100.0 * d.fractions.get(&site.default_language).copied().unwrap_or(0.0)
    };
    println!(
        "{} share of root captures: faithful {:.1}%, fixed {:.1}%",
        site.default_language,
        default_share(&summary.bias.a),
        default_share(&summary.bias.b)
    );
    for r in &summary.pipelines {
        println!(
            "{:<9} {} violating part(s), verdict {:?}",
            r.label,
            r.violations.violating_parts.len(),
            r.violations.verdict
        );
    }
    println!("reports written to {}", args.out.display());
    if passed {
        println!("demo passed: faithful pipeline defaced, fixed pipeline consistent");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("demo FAILED: expected violations only in the faithful pipeline");
        Ok(ExitCode::from(EXIT_ASSERTION))
    }
}
