//! Cookie storage for one crawl session.
//!
//! The jar can cap every stored cookie's lifetime (`JarPolicy::max_ttl`)
//! regardless of what the server asked for. A zero cap means cookies are
//! never retained at all.

mod netscape;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::http::{CanonicalUri, Cookie};
use crate::time::Timestamp;

pub use netscape::{ImportReport, NETSCAPE_HEADER};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JarPolicy {
    /// Upper bound on any cookie's lifetime, measured from store time.
    #[serde(default, with = "opt_secs")]
    pub max_ttl: Option<Duration>,
    /// Drop every cookie, persistent ones included, at session end.
    #[serde(default)]
    pub session_scoped: bool,
}

impl JarPolicy {
    /// Cookies kept as long as the server says.
    pub fn faithful() -> Self {
        JarPolicy::default()
    }

    pub fn capped(ttl: Duration) -> Self {
        JarPolicy {
            max_ttl: Some(ttl),
            session_scoped: false,
        }
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(v: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => s.serialize_some(&d.as_secs()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<u64>::deserialize(d)?.map(Duration::from_secs))
    }
}

type Key = (String, String, String);

#[derive(Debug, Clone)]
struct Entry {
    cookie: Cookie,
    seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct CookieJar {
    entries: BTreeMap<Key, Entry>,
    policy: JarPolicy,
    next_seq: u64,
    last_prune: Option<Timestamp>,
}

fn key(c: &Cookie) -> Key {
    (c.name.clone(), c.domain.clone(), c.path.clone())
}

impl CookieJar {
    pub fn new(policy: JarPolicy) -> Self {
        CookieJar {
            policy,
            ..Default::default()
        }
    }

    pub fn policy(&self) -> &JarPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored cookies with their effective expiry, in key order.
    pub fn iter(&self) -> impl Iterator<Item = &Cookie> {
        self.entries.values().map(|e| &e.cookie)
    }

    pub fn get(&self, name: &str, domain: &str, path: &str) -> Option<&Cookie> {
        self.entries
            .get(&(name.to_string(), domain.to_string(), path.to_string()))
            .map(|e| &e.cookie)
    }

    /// Stores `cookie`, capping its expiry at `now + max_ttl`. A cookie whose
    /// effective expiry is not after `now` deletes its key instead. An
    /// overwrite keeps the original creation time.
    pub fn store(&mut self, mut cookie: Cookie, now: Timestamp) {
        let cap = self.policy.max_ttl.map(|ttl| now.plus(ttl));
        cookie.expires_at = match (cookie.expires_at, cap) {
            (Some(e), Some(c)) => Some(e.min(c)),
            (e, c) => e.or(c),
        };
        let k = key(&cookie);
        if cookie.is_expired(now) {
            self.entries.remove(&k);
            return;
        }
        match self.entries.get_mut(&k) {
            Some(existing) => {
                cookie.created_at = existing.cookie.created_at;
                existing.cookie = cookie;
            }
            None => {
                let seq = self.next_seq;
                self.next_seq += 1;
                self.entries.insert(k, Entry { cookie, seq });
            }
        }
    }

    /// `(name, value)` pairs to send to `uri`: longest path first, then
    /// oldest first. Only the first cookie of any given name is returned.
    pub fn cookies_for(&self, uri: &CanonicalUri, now: Timestamp) -> Vec<(String, String)> {
        let mut matching: Vec<&Entry> = self
            .entries
            .values()
            .filter(|e| {
                !e.cookie.is_expired(now) && e.cookie.domain_matches(uri.host()) && e.cookie.path_matches(uri.path())
            })
            .collect();
        matching.sort_by(|a, b| {
            b.cookie
                .path
                .len()
                .cmp(&a.cookie.path.len())
                .then(a.cookie.created_at.cmp(&b.cookie.created_at))
                .then(a.seq.cmp(&b.seq))
        });
        let mut out: Vec<(String, String)> = Vec::with_capacity(matching.len());
        for e in matching {
            if !out.iter().any(|(n, _)| *n == e.cookie.name) {
                out.push((e.cookie.name.clone(), e.cookie.value.clone()));
            }
        }
        out
    }

    /// Removes every entry whose effective expiry is at or before `now`.
    pub fn prune(&mut self, now: Timestamp) {
        self.entries.retain(|_, e| !e.cookie.is_expired(now));
        self.last_prune = Some(self.last_prune.map_or(now, |t| t.max(now)));
    }

    pub fn last_prune(&self) -> Option<Timestamp> {
        self.last_prune
    }

    /// Ends the browsing session: session cookies always go, persistent ones
    /// too when the policy is session-scoped.
    pub fn end_session(&mut self) {
        if self.policy.session_scoped {
            self.entries.clear();
        } else {
            self.entries.retain(|_, e| !e.cookie.is_session());
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{canonicalize, parse_set_cookie};
    use proptest::prelude::*;

    const T: Timestamp = Timestamp::from_unix(1_546_344_000);

    fn cookie(raw: &str, at: &str) -> Cookie {
        parse_set_cookie(raw, &canonicalize(at).unwrap(), T).unwrap()
    }

    fn uri(s: &str) -> CanonicalUri {
        canonicalize(s).unwrap()
    }

    #[test]
    fn session_cookie_persists_without_cap() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("lang=ar; Path=/", "https://twitter.com/?lang=ar"), T);
        assert_eq!(jar.len(), 1);
        let much_later = T.plus_secs(10 * 365 * 86_400);
        jar.prune(much_later);
        assert_eq!(
            jar.cookies_for(&uri("https://twitter.com/"), much_later),
            vec![("lang".into(), "ar".into())]
        );
    }

    #[test]
    fn zero_cap_keeps_nothing() {
        let mut jar = CookieJar::new(JarPolicy::capped(Duration::ZERO));
        jar.store(cookie("lang=ar; Path=/", "https://twitter.com/?lang=ar"), T);
        assert!(jar.is_empty());
        assert!(jar.get("lang", "twitter.com", "/").is_none());
    }

    #[test]
    fn cap_applies_to_session_and_persistent() {
        let mut jar = CookieJar::new(JarPolicy::capped(Duration::from_secs(300)));
        jar.store(cookie("a=1", "https://twitter.com/"), T);
        jar.store(cookie("b=1; Max-Age=60", "https://twitter.com/"), T);
        assert_eq!(
            jar.get("a", "twitter.com", "/").unwrap().expires_at,
            Some(T.plus_secs(300))
        );
        assert_eq!(
            jar.get("b", "twitter.com", "/").unwrap().expires_at,
            Some(T.plus_secs(60))
        );
    }

    #[test]
    fn overwrite_same_scope() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("lang=fr; Path=/", "https://twitter.com/?lang=fr"), T);
        jar.store(
            cookie("lang=kn; Path=/", "https://twitter.com/?lang=kn"),
            T.plus_secs(1),
        );
        assert_eq!(jar.len(), 1);
        let c = jar.get("lang", "twitter.com", "/").unwrap();
        assert_eq!(c.value, "kn");
        assert_eq!(c.created_at, T);
    }

    #[test]
    fn expired_store_deletes() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("lang=fr; Path=/", "https://twitter.com/"), T);
        jar.store(cookie("lang=; Path=/; Max-Age=0", "https://twitter.com/"), T);
        assert!(jar.is_empty());
    }

    #[test]
    fn scope_matching() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("lang=ar; Path=/", "https://twitter.com/"), T);
        assert_eq!(
            jar.cookies_for(&uri("https://twitter.com/"), T),
            vec![("lang".into(), "ar".into())]
        );
        assert!(jar.cookies_for(&uri("https://example.com/"), T).is_empty());
        assert!(jar.cookies_for(&uri("https://api.twitter.com/"), T).is_empty());
    }

    #[test]
    fn expiry_excludes() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("s=1; Max-Age=10", "https://twitter.com/"), T);
        let expiry = T.plus_secs(10);
        assert_eq!(
            jar.cookies_for(&uri("https://twitter.com/"), expiry.plus_secs(-1))
                .len(),
            1
        );
        assert!(jar
            .cookies_for(&uri("https://twitter.com/"), expiry.plus_secs(1))
            .is_empty());
    }

    #[test]
    fn ordering_longest_path_first_one_per_name() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("a=root; Path=/", "https://twitter.com/"), T);
        jar.store(cookie("b=deep; Path=/i/x", "https://twitter.com/"), T.plus_secs(5));
        jar.store(cookie("a=deep; Path=/i", "https://twitter.com/"), T.plus_secs(9));
        jar.store(cookie("c=root; Path=/", "https://twitter.com/"), T.plus_secs(1));
        let got = jar.cookies_for(&uri("https://twitter.com/i/x/y"), T.plus_secs(10));
        let names: Vec<_> = got.iter().map(|(n, v)| format!("{n}={v}")).collect();
        assert_eq!(names, ["b=deep", "a=deep", "c=root"]);
    }

    #[test]
    fn end_session() {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        jar.store(cookie("s=1", "https://twitter.com/"), T);
        jar.store(cookie("p=1; Max-Age=999", "https://twitter.com/"), T);
        jar.end_session();
        assert_eq!(jar.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["p"]);
        let mut jar = CookieJar::new(JarPolicy {
            max_ttl: None,
            session_scoped: true,
        });
        jar.store(cookie("p=1; Max-Age=999", "https://twitter.com/"), T);
        jar.end_session();
        assert!(jar.is_empty());
    }

    fn jar_strategy() -> impl Strategy<Value = (Vec<(u8, u8, Option<i64>)>, i64)> {
        (
            prop::collection::vec((0u8..6, 0u8..3, prop::option::of(-5i64..50)), 0..20),
            0i64..40,
        )
    }

    fn build(entries: &[(u8, u8, Option<i64>)]) -> CookieJar {
        let mut jar = CookieJar::new(JarPolicy::faithful());
        for (i, (name, path, max_age)) in entries.iter().enumerate() {
            let path = ["/", "/a", "/a/b"][*path as usize];
            let raw = match max_age {
                Some(m) => format!("n{name}=v{i}; Path={path}; Max-Age={m}"),
                None => format!("n{name}=v{i}; Path={path}"),
            };
            jar.store(parse_set_cookie(&raw, &uri("https://h.example/"), T).unwrap(), T);
        }
        jar
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn prune_idempotent((entries, dt) in jar_strategy()) {
            let now = T.plus_secs(dt);
            let mut once = build(&entries);
            once.prune(now);
            let mut twice = once.clone();
            twice.prune(now);
            let a: Vec<_> = once.iter().cloned().collect();
            let b: Vec<_> = twice.iter().cloned().collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn prune_matches_linear_scan((entries, dt) in jar_strategy()) {
            let now = T.plus_secs(dt);
            let jar = build(&entries);
            let expected: Vec<Cookie> = jar
                .iter()
                .filter(|c| match c.expires_at { Some(e) => e > now, None => true })
                .cloned()
                .collect();
            let mut pruned = jar.clone();
            pruned.prune(now);
            prop_assert_eq!(pruned.iter().cloned().collect::<Vec<_>>(), expected);
        }

        #[test]
        fn never_emitted_past_cap(ttl in 0u64..30, stores in prop::collection::vec((0u8..3, 0i64..20), 1..10), probe in 0i64..60) {
            let mut jar = CookieJar::new(JarPolicy::capped(Duration::from_secs(ttl)));
            let mut stored_at = std::collections::HashMap::new();
            let mut clock = T;
            for (name, step) in stores {
                clock = clock.plus_secs(step);
                let c = parse_set_cookie(&format!("c{name}=x"), &uri("https://h.example/"), clock).unwrap();
                jar.store(c, clock);
                stored_at.insert(format!("c{name}"), clock);
            }
            let now = clock.plus_secs(probe);
            for (name, _) in jar.cookies_for(&uri("https://h.example/"), now) {
                prop_assert!(now.unix() - stored_at[&name].unix() < ttl as i64);
            }
        }

        #[test]
        fn unique_names_and_single_key(k in 1usize..8) {
            let mut jar = CookieJar::new(JarPolicy::faithful());
            for i in 0..k {
                jar.store(parse_set_cookie(&format!("lang=l{i}; Path=/"), &uri("https://h.example/"), T).unwrap(), T);
            }
            jar.store(parse_set_cookie("lang=x; Path=/a", &uri("https://h.example/"), T).unwrap(), T);
            prop_assert_eq!(jar.iter().filter(|c| c.path == "/").count(), 1);
            let sent = jar.cookies_for(&uri("https://h.example/a/b"), T);
            prop_assert_eq!(sent.len(), 1);
        }
    }
}
