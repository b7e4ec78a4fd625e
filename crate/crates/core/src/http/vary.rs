use super::message::{Headers, HttpResponse};

/// Request dimensions a response was negotiated on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarySpec {
    /// No `Vary` field, or only empty ones.
    Empty,
    /// `Vary: *` somewhere among the fields.
    All,
    /// Lowercased field names, first occurrence order, no duplicates.
    Fields(Vec<String>),
}

impl VarySpec {
    pub fn is_present(&self) -> bool {
        !matches!(self, VarySpec::Empty)
    }
}

/// Merges every `Vary` field of the response. `*` anywhere dominates.
pub fn parse_vary(response: &HttpResponse) -> VarySpec {
    parse_vary_headers(&response.headers)
}

pub fn parse_vary_headers(headers: &Headers) -> VarySpec {
    let mut fields: Vec<String> = Vec::new();
    for value in headers.get_all("vary") {
        for token in value.split(',') {
            let token = token.trim().to_ascii_lowercase();
            if token.is_empty() {
                continue;
            }
            if token == "*" {
                return VarySpec::All;
            }
            if !fields.contains(&token) {
                fields.push(token);
            }
        }
    }
    if fields.is_empty() {
        VarySpec::Empty
    } else {
        VarySpec::Fields(fields)
    }
}
