mod commands;
mod demo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit statuses.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;

/// Bad input that clap itself cannot catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(
    name = "stickyjar",
    version,
    about = "Crawl, archive, replay and analyze a cookie-negotiated site"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the origin simulator on a TCP port.
    ServeOrigin(ServeOriginArgs),
    /// Crawl the simulator (in-process or over HTTP) into an archive.
    Crawl(CrawlArgs),
    /// Serve an archive at /web/<timestamp>/<uri>.
    Replay(ReplayArgs),
    /// Language distribution of one URI in an archive.
    Analyze(AnalyzeArgs),
    /// Reconstruct a composite page and check it for mixed languages.
    Detect(DetectArgs),
    /// Run the whole bias-and-fix experiment and write reports.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct ServeOriginArgs {
    #[arg(long, default_value_t = 8081)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// JSON site description; omitted fields take defaults.
    #[arg(long, value_name = "FILE")]
    pub site_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyPreset {
    /// Keep cookies as long as the server says.
    Faithful,
    /// Cap every cookie at 300 seconds.
    Fixed,
}

#[derive(Args, Debug)]
pub struct CrawlArgs {
    /// Archive directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Start URI; defaults to the site root.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub site_config: Option<PathBuf>,
    /// JSON crawl configuration; command-line flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Crawl a live server at this address instead of the in-process simulator.
    #[arg(long, value_name = "HOST:PORT")]
    pub http: Option<String>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyPreset>,
    /// Cookie lifetime cap in seconds, or `inf`.
    #[arg(long, value_name = "SECS|inf")]
    pub cookie_max_ttl: Option<String>,
    #[arg(long)]
    pub max_pages: Option<usize>,
    /// Re-queue the seed after every N fetches; 0 disables.
    #[arg(long, value_name = "N")]
    pub revisit_root_every: Option<usize>,
    /// Simulated seconds between requests.
    #[arg(long)]
    pub clock_step: Option<u64>,
    /// Simulated start time, 14 digits.
    #[arg(long, value_name = "YYYYMMDDhhmmss")]
    pub start: Option<String>,
    /// Write the final cookie jar in Netscape format.
    #[arg(long, value_name = "FILE")]
    pub cookie_file: Option<PathBuf>,
    /// Cookie names that change content (repeatable).
    #[arg(long = "content-cookie", value_name = "NAME")]
    pub content_cookies: Vec<String>,
    /// Dimensions assumed when a response has no Vary (comma separated).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub implied_vary: Option<Vec<String>>,
    /// Ignore the responses' own Vary headers.
    #[arg(long)]
    pub ignore_vary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FallbackArg {
    NearestAny,
    NotFound,
}

#[derive(Args, Debug)]
pub struct SelectionArgs {
    #[arg(long, value_enum, default_value = "baseline")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "nearest-any")]
    pub fallback: FallbackArg,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long, value_name = "DIR")]
    pub archive: PathBuf,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Netscape cookie file sent on behalf of requests that carry no cookies.
    #[arg(long, value_name = "FILE")]
    pub request_cookies: Option<PathBuf>,
    /// Shorthand for a `lang` cookie on every archived host.
    #[arg(long, conflicts_with = "request_cookies")]
    pub lang: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long, value_name = "DIR")]
    pub archive: PathBuf,
    #[arg(long, default_value = "https://twitter.com/")]
    pub uri: String,
    /// Second archive to compare against.
    #[arg(long, value_name = "DIR")]
    pub against: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, value_name = "DIR")]
    pub archive: PathBuf,
    #[arg(long, default_value = "https://twitter.com/")]
    pub uri: String,
    #[arg(long, value_name = "YYYYMMDDhhmmss")]
    pub timestamp: String,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Cookie header of the replay request.
    #[arg(long)]
    pub cookie: Option<String>,
    /// Shorthand for `--cookie lang=<LANG>`.
    #[arg(long, conflicts_with = "cookie")]
    pub lang: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, value_name = "DIR", default_value = "demo-out")]
    pub out: PathBuf,
    /// Crawl sessions per policy, one simulated day apart.
    #[arg(long, default_value_t = 1)]
    pub sessions: usize,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub max_pages: usize,
    /// Cookie cap of the fixed pipeline, seconds.
    #[arg(long, default_value_t = 300)]
    pub fixed_ttl: u64,
    /// Language of the defaced root page.
    #[arg(long, default_value = "pt")]
    pub root_lang: String,
    /// Language leaking into the defaced page.
    #[arg(long, default_value = "ur")]
    pub intruder_lang: String,
    #[arg(long, value_name = "FILE")]
    pub site_config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::ServeOrigin(a) => commands::serve_origin(a),
        Command::Crawl(a) => commands::crawl(a),
        Command::Replay(a) => commands::replay(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Detect(a) => commands::detect(a),
        Command::Demo(a) => demo::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
