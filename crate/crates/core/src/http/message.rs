use serde::{Deserialize, Serialize};

/// Ordered header multimap. Field names are lowercased on insert and
/// repeated fields keep their arrival order; nothing is ever joined.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Headers(Vec<(String, String)>);

impl Headers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, name: &str, value: impl Into<String>) {
        self.0.push((name.to_ascii_lowercase(), value.into()));
    }

    pub fn with(mut self, name: &str, value: impl Into<String>) -> Self {
        self.append(name, value);
        self
    }

    /// Replaces every field called `name` with a single value.
    pub fn set(&mut self, name: &str, value: impl Into<String>) {
        self.remove(name);
        self.append(name, value);
    }

    pub fn remove(&mut self, name: &str) {
        let name = name.to_ascii_lowercase();
        self.0.retain(|(n, _)| *n != name);
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.get_all(name).next()
    }

    pub fn get_all<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a str> + 'a {
        let name = name.to_ascii_lowercase();
        self.0.iter().filter(move |(n, _)| *n == name).map(|(_, v)| v.as_str())
    }

    /// All values of `name` joined with `", "`, or `None` when absent.
    pub fn get_joined(&self, name: &str) -> Option<String> {
        let values: Vec<&str> = self.get_all(name).collect();
        if values.is_empty() {
            None
        } else {
            Some(values.join(", "))
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<N: AsRef<str>, V: Into<String>> FromIterator<(N, V)> for Headers {
    fn from_iter<I: IntoIterator<Item = (N, V)>>(iter: I) -> Self {
        let mut h = Headers::new();
        for (n, v) in iter {
            h.append(n.as_ref(), v);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpRequest {
    pub method: String,
    /// Absolute URI.
    pub uri: String,
    pub headers: Headers,
}

impl HttpRequest {
    pub fn get(uri: impl Into<String>) -> Self {
        HttpRequest {
            method: "GET".to_string(),
            uri: uri.into(),
            headers: Headers::new(),
        }
    }

    pub fn header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.append(name, value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Headers,
    #[serde(skip)]
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn new(status: u16) -> Self {
        debug_assert!((100..=599).contains(&status));
        HttpResponse {
            status,
            headers: Headers::new(),
            body: Vec::new(),
        }
    }

    pub fn header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.append(name, value);
        self
    }

    pub fn body(mut self, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self
    }

    /// Each `Set-Cookie` field on its own.
    pub fn set_cookies(&self) -> impl Iterator<Item = &str> {
        self.headers.get_all("set-cookie")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_lowercased_and_duplicates_kept() {
        let resp = HttpResponse::new(200)
            .header("Set-Cookie", "a=1")
            .header("SET-COOKIE", "b=2")
            .header("Content-Language", "fr");
        let all: Vec<_> = resp.set_cookies().collect();
        assert_eq!(all, ["a=1", "b=2"]);
        assert_eq!(resp.headers.get("content-language"), Some("fr"));
        assert!(resp.headers.iter().all(|(n, _)| n == n.to_ascii_lowercase()));
    }

    #[test]
    fn joined_and_set() {
        let mut h: Headers = [("Vary", "Cookie"), ("vary", "Accept-Language")].into_iter().collect();
        assert_eq!(h.get_joined("vary").unwrap(), "Cookie, Accept-Language");
        h.set("vary", "*");
        assert_eq!(h.len(), 1);
        assert_eq!(h.get_joined("x"), None);
    }
}
