use std::collections::{HashSet, VecDeque};

use crate::http::CanonicalUri;

/// FIFO of URIs to fetch. A URI is queued at most once unless pushed
/// through [`Frontier::push_exempt`].
#[derive(Debug, Default, Clone)]
pub struct Frontier {
    queue: VecDeque<CanonicalUri>,
    seen: HashSet<CanonicalUri>,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues `uri` unless it was queued before. Returns whether it was.
    pub fn push(&mut self, uri: CanonicalUri) -> bool {
        if self.seen.insert(uri.clone()) {
            self.queue.push_back(uri);
            true
        } else {
            false
        }
    }

    /// Queues `uri` even if seen.
    pub fn push_exempt(&mut self, uri: CanonicalUri) {
        self.seen.insert(uri.clone());
        self.queue.push_back(uri);
    }

    pub fn pop(&mut self) -> Option<CanonicalUri> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn has_seen(&self, uri: &CanonicalUri) -> bool {
        self.seen.contains(uri)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::canonicalize;

    #[test]
    fn fifo_and_dedup() {
        let u = |s: &str| canonicalize(s).unwrap();
        let mut f = Frontier::new();
        assert!(f.push(u("https://a/1")));
        assert!(f.push(u("https://a/2")));
        assert!(!f.push(u("HTTPS://A/1")));
        f.push_exempt(u("https://a/1"));
        let order: Vec<String> = std::iter::from_fn(|| f.pop()).map(|x| x.to_string()).collect();
        assert_eq!(order, ["https://a/1", "https://a/2", "https://a/1"]);
        assert!(!f.push(u("https://a/2")));
        assert!(f.is_empty());
    }
}
