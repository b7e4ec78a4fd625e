//! Archival crawl-and-replay pipeline for sites that negotiate content
//! through cookies.
//!
//! * [`origin`] simulates a multi-language site with a sticky `lang` cookie.
//! * [`crawler`] walks it breadth-first with a per-session [`jar::CookieJar`].
//! * [`store`] keeps captures with a variant key derived from `Vary`.
//! * [`replay`] selects mementos by URI and datetime, optionally honouring
//!   variant keys, and reconstructs composite pages.
//! * [`analyzer`] measures language distributions and flags composites
//!   that mix languages.

pub mod analyzer;
pub mod crawler;
pub mod experiment;
pub mod http;
pub mod jar;
#[cfg(feature = "net")]
mod net;
pub mod origin;
pub mod replay;
pub mod store;
pub mod time;

pub use time::Timestamp;
