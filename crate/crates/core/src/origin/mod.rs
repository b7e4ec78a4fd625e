//! Deterministic multi-language origin server.
//!
//! Models a site that negotiates the page language from, in order: a `lang`
//! query parameter, a sticky `lang` cookie, `Accept-Language`, and finally
//! the default language. Visiting `?lang=T` answers with `Set-Cookie:
//! lang=T; Path=/`, so the choice follows the client around. The server
//! itself is stateless; all state lives in the client's cookie jar.

#[cfg(feature = "net")]
pub mod server;

use serde::{Deserialize, Serialize};

use crate::http::{
    canonicalize, parse_accept_language, parse_cookie_header, primary_subtag, CanonicalUri, HttpRequest, HttpResponse,
};

/// 47 distinct tags, `fr` first and `kn` last.
pub const DEFAULT_LANGUAGES: [&str; 47] = [
    "fr", "en", "ar", "ja", "es", "de", "it", "id", "pt", "ko", "tr", "ru", "nl", "fil", "msa", "zh", "hi", "no", "sv",
    "fi", "da", "pl", "hu", "fa", "he", "ur", "th", "uk", "ca", "ga", "el", "eu", "cs", "gl", "ro", "hr", "vi", "bn",
    "bg", "sr", "sk", "gu", "mr", "ta", "af", "lv", "kn",
];

const FRAGMENT_NAMES: [&str; 4] = ["sidebar", "notifications", "trends", "footer"];

pub const LANG_PARAM: &str = "lang";
pub const LANG_COOKIE: &str = "lang";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiteConfig {
    pub scheme: String,
    pub host: String,
    pub languages: Vec<String>,
    pub default_language: String,
    pub emit_vary: bool,
    /// Timeline pages, root included.
    pub page_count: usize,
    /// Fragments embedded in every timeline page.
    pub resources_per_page: usize,
}

impl Default for SiteConfig {
    fn default() -> Self {
        SiteConfig {
            scheme: "https".to_string(),
            host: "twitter.com".to_string(),
            languages: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
            default_language: "en".to_string(),
            emit_vary: false,
            page_count: 3,
            resources_per_page: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageKind {
    Timeline,
    Fragment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageModel {
    pub uri_path: String,
    pub kind: PageKind,
    pub links_out: Vec<String>,
}

impl SiteConfig {
    pub fn origin(&self) -> String {
        format!("{}://{}", self.scheme, self.host)
    }

    pub fn root_uri(&self) -> CanonicalUri {
        canonicalize(&format!("{}/", self.origin())).expect("site origin is a valid URI")
    }

    pub fn timeline_paths(&self) -> Vec<String> {
        (0..self.page_count.max(1))
            .map(|i| if i == 0 { "/".to_string() } else { format!("/page/{i}") })
            .collect()
    }

    pub fn fragment_paths(&self) -> Vec<String> {
        (0..self.resources_per_page)
            .map(|i| match FRAGMENT_NAMES.get(i) {
                Some(name) => format!("/i/{name}"),
                None => format!("/i/fragment-{i}"),
            })
            .collect()
    }

    pub fn page(&self, path: &str) -> Option<PageModel> {
        if self.timeline_paths().iter().any(|p| p == path) {
            let mut page = PageModel {
                uri_path: path.to_string(),
                kind: PageKind::Timeline,
                links_out: Vec::new(),
            };
            let mut links = alternate_links(&page, self);
            links.extend(self.fragment_paths().iter().map(|f| format!("{}{f}", self.origin())));
            links.extend(
                self.timeline_paths()
                    .iter()
                    .filter(|p| *p != path)
                    .map(|p| format!("{}{p}", self.origin())),
            );
            page.links_out = links;
            Some(page)
        } else if self.fragment_paths().iter().any(|p| p == path) {
            Some(PageModel {
                uri_path: path.to_string(),
                kind: PageKind::Fragment,
                links_out: Vec::new(),
            })
        } else {
            None
        }
    }

    pub fn pages(&self) -> Vec<PageModel> {
        self.timeline_paths()
            .into_iter()
            .chain(self.fragment_paths())
            .filter_map(|p| self.page(&p))
            .collect()
    }

    /// The served tag for a requested one: exact match first, then
    /// primary-subtag match. `None` when the site does not offer it.
    pub fn supported(&self, requested: &str) -> Option<&str> {
        let requested = requested.to_ascii_lowercase();
        let all = || self.languages.iter().chain(std::iter::once(&self.default_language));
        all()
            .find(|t| t.eq_ignore_ascii_case(&requested))
            .or_else(|| {
                let primary = primary_subtag(&requested);
                all().find(|t| primary_subtag(t) == primary)
            })
            .map(String::as_str)
    }
}

/// `x-default` first, then one `?lang=T` link per supported language in
/// configured order. Empty for fragments.
pub fn alternate_links(page: &PageModel, site: &SiteConfig) -> Vec<String> {
    if page.kind != PageKind::Timeline {
        return Vec::new();
    }
    let base = format!("{}{}", site.origin(), page.uri_path);
    std::iter::once(base.clone())
        .chain(site.languages.iter().map(|l| format!("{base}?{LANG_PARAM}={l}")))
        .collect()
}

/// Which language the site serves for `request`.
pub fn negotiate_language(request: &HttpRequest, site: &SiteConfig) -> String {
    negotiate_with_source(request, site).0
}

/// Where the negotiated language came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LanguageSource {
    Query,
    Cookie,
    AcceptLanguage,
    Default,
}

pub fn negotiate_with_source(request: &HttpRequest, site: &SiteConfig) -> (String, LanguageSource) {
    if let Ok(uri) = canonicalize(&request.uri) {
        if let Some(tag) = uri.query_value(LANG_PARAM).and_then(|v| site.supported(v)) {
            return (tag.to_string(), LanguageSource::Query);
        }
    }
    let cookie_lang = request
        .headers
        .get_all("cookie")
        .flat_map(parse_cookie_header)
        .find(|(n, _)| n == LANG_COOKIE)
        .map(|(_, v)| v);
    if let Some(tag) = cookie_lang.as_deref().and_then(|v| site.supported(v)) {
        return (tag.to_string(), LanguageSource::Cookie);
    }
    if let Some(al) = request.headers.get_joined("accept-language") {
        for (tag, q) in parse_accept_language(&al) {
            if q <= 0.0 || tag == "*" {
                continue;
            }
            if let Some(t) = site.supported(&tag) {
                return (t.to_string(), LanguageSource::AcceptLanguage);
            }
        }
    }
    (site.default_language.clone(), LanguageSource::Default)
}

/// Serves one request. Pure in `(request, site)`.
pub fn handle(request: &HttpRequest, site: &SiteConfig) -> HttpResponse {
    let uri = match canonicalize(&request.uri) {
        Ok(u) => u,
        Err(e) => return plain(400, &format!("bad request URI: {e}\n")),
    };
    let page = match site.page(uri.path()) {
        Some(p) if uri.host() == site.host => p,
        _ => return plain(404, "not found\n"),
    };
    let (lang, source) = negotiate_with_source(request, site);

    let body = match page.kind {
        PageKind::Timeline => render_timeline(&page, site, &lang),
        PageKind::Fragment => render_fragment(&page, &lang),
    };
    let mut resp = HttpResponse::new(200)
        .header("Content-Type", "text/html; charset=utf-8")
        .header("Content-Language", lang.clone());
    if source == LanguageSource::Query {
        resp = resp.header("Set-Cookie", format!("{LANG_COOKIE}={lang}; Path=/"));
    }
    if site.emit_vary {
        resp = resp.header("Vary", "Cookie, Accept-Language");
    }
    resp.body(body)
}

fn plain(status: u16, msg: &str) -> HttpResponse {
    HttpResponse::new(status)
        .header("Content-Type", "text/plain; charset=utf-8")
        .body(msg.as_bytes().to_vec())
}

fn fragment_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

fn render_timeline(page: &PageModel, site: &SiteConfig, lang: &str) -> String {
    let origin = site.origin();
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n");
    html.push_str(&format!("<html lang=\"{lang}\" data-page=\"timeline\">\n<head>\n"));
    html.push_str("<meta charset=\"utf-8\">\n");
    html.push_str(&format!(
        "<title>{} timeline {} [{lang}]</title>\n",
        site.host, page.uri_path
    ));
    let alternates = alternate_links(page, site);
    for (i, href) in alternates.iter().enumerate() {
        let hreflang = if i == 0 {
            "x-default"
        } else {
            site.languages[i - 1].as_str()
        };
        html.push_str(&format!(
            "<link rel=\"alternate\" hreflang=\"{hreflang}\" href=\"{href}\">\n"
        ));
    }
    html.push_str("</head>\n<body>\n");
    html.push_str(&format!("<h1>Timeline {} ({lang})</h1>\n<nav>\n", page.uri_path));
    for p in site.timeline_paths().iter().filter(|p| **p != page.uri_path) {
        html.push_str(&format!("<a href=\"{origin}{p}\">{p}</a>\n"));
    }
    html.push_str("</nav>\n");
    for f in site.fragment_paths() {
        html.push_str(&format!(
            "<iframe src=\"{origin}{f}\" data-fragment=\"{}\"></iframe>\n",
            fragment_name(&f)
        ));
    }
    html.push_str("</body>\n</html>\n");
    html
}

fn render_fragment(page: &PageModel, lang: &str) -> String {
    let name = fragment_name(&page.uri_path);
    format!(
        "<!DOCTYPE html>\n<html lang=\"{lang}\" data-page=\"fragment\">\n<body>\n\
         <div class=\"fragment\" data-name=\"{name}\">{name} ({lang})</div>\n</body>\n</html>\n"
    )
}
