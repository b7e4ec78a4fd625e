//! Second-precision UTC timestamps.
//!
//! Every datetime in the pipeline (cookie expiry, capture time, replay
//! target) is a whole number of seconds since the Unix epoch. Captures are
//! addressed by the 14-digit `YYYYMMDDhhmmss` form used by archive indexes.

use std::fmt;
use std::time::Duration;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const DIGITS14: &str = "%Y%m%d%H%M%S";
const RFC1123: &str = "%a, %d %b %Y %H:%M:%S GMT";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid timestamp {input:?}: {reason}")]
pub struct TimestampError {
    pub input: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Timestamp(i64::try_from(secs).unwrap_or(i64::MAX))
    }

    /// Parses the 14-digit archive form, e.g. `20190101120000`.
    pub fn parse_14(s: &str) -> Result<Self, TimestampError> {
        if s.len() != 14 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(TimestampError {
                input: s.to_string(),
                reason: "expected exactly 14 digits",
            });
        }
        NaiveDateTime::parse_from_str(s, DIGITS14)
            .map(|dt| Timestamp(dt.and_utc().timestamp()))
            .map_err(|_| TimestampError {
                input: s.to_string(),
                reason: "not a calendar datetime",
            })
    }

    pub fn to_14(self) -> String {
        self.datetime().format(DIGITS14).to_string()
    }

    /// Parses an RFC 1123 date (`Thu, 01 Jan 2037 00:00:00 GMT`). Other
    /// cookie-date shapes are not accepted.
    pub fn parse_rfc1123(s: &str) -> Option<Self> {
        NaiveDateTime::parse_from_str(s.trim(), RFC1123)
            .ok()
            .map(|dt| Timestamp(dt.and_utc().timestamp()))
    }

    pub fn to_rfc1123(self) -> String {
        self.datetime().format(RFC1123).to_string()
    }

    pub fn plus(self, d: Duration) -> Self {
        Timestamp(self.0.saturating_add(i64::try_from(d.as_secs()).unwrap_or(i64::MAX)))
    }

    pub fn plus_secs(self, secs: i64) -> Self {
        Timestamp(self.0.saturating_add(secs))
    }

    /// Absolute distance in seconds.
    pub fn distance(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }

    fn datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).unwrap_or(DateTime::<Utc>::MIN_UTC)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_14())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_14())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Timestamp::parse_14(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourteen_digit_round_trip() {
        let t = Timestamp::parse_14("20190101120000").unwrap();
        assert_eq!(t.unix(), 1_546_344_000);
        assert_eq!(t.to_14(), "20190101120000");
    }

    #[test]
    fn rejects_short_and_bogus() {
        assert!(Timestamp::parse_14("2019").is_err());
        assert!(Timestamp::parse_14("20191301000000").is_err());
        assert!(Timestamp::parse_14("2019010112000x").is_err());
    }

    #[test]
    fn rfc1123() {
        let t = Timestamp::parse_rfc1123("Thu, 01 Jan 2037 00:00:00 GMT").unwrap();
        assert_eq!(t.unix(), 2_114_380_800);
        assert_eq!(t.to_rfc1123(), "Thu, 01 Jan 2037 00:00:00 GMT");
        assert!(Timestamp::parse_rfc1123("Thursday, 01-Jan-37 00:00:00 GMT").is_none());
        assert!(Timestamp::parse_rfc1123("2037-01-01").is_none());
    }
}
