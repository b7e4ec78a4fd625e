//! HTTP message model and the small parsers the rest of the pipeline uses.

mod accept_language;
mod cookie;
mod message;
mod uri;
mod vary;

pub use accept_language::{parse_accept_language, primary_subtag};
pub use cookie::{
    cookie_header, default_path, domain_match, parse_cookie_header, parse_set_cookie, path_match, Cookie,
};
pub use message::{Headers, HttpRequest, HttpResponse};
pub use uri::{canonicalize, CanonicalUri, UriError};
pub use vary::{parse_vary, parse_vary_headers, VarySpec};
