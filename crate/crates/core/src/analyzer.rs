//! Language measurements over archived captures.
//!
//! Languages are compared on their primary subtag (`en-US` counts as
//! `en`). Captures whose language cannot be determined count as `und`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::http::{primary_subtag, CanonicalUri};
use crate::replay::CompositeMemento;
use crate::store::{ArchiveRecord, ArchiveStore};

pub const UNDETERMINED: &str = "und";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LanguageReading {
    pub tag: Option<String>,
    /// Set when the header and the markup disagree.
    pub warning: Option<String>,
}

/// Content-Language wins, then `<html lang>`, else unknown.
pub fn language_of(record: &ArchiveRecord) -> LanguageReading {
    let header = record
        .response_headers
        .get("content-language")
        .and_then(|v| v.split(',').next())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(primary_subtag);
    let markup = html_lang(&record.body).map(|t| primary_subtag(&t));
    match (header, markup) {
        (Some(h), Some(m)) if h != m => LanguageReading {
            warning: Some(format!(
                "record {} ({}): Content-Language {h} but <html lang=\"{m}\">",
                record.id, record.uri
            )),
            tag: Some(h),
        },
        (h, m) => LanguageReading {
            tag: h.or(m),
            warning: None,
        },
    }
}

/// Value of the `lang` attribute on the first `<html>` tag.
pub fn html_lang(body: &[u8]) -> Option<String> {
    let text = String::from_utf8_lossy(body);
    let lower = text.to_ascii_lowercase();
    let start = lower.find("<html")?;
    let end = start + lower[start..].find('>')?;
    let tag = &lower[start + 5..end];
    let mut search = 0;
    while let Some(pos) = tag[search..].find("lang") {
        let at = search + pos;
        search = at + 4;
        if !tag[..at].ends_with(char::is_whitespace) {
            continue;
        }
        let rest = tag[at + 4..].trim_start();
        let Some(rest) = rest.strip_prefix('=') else { continue };
        let rest = rest.trim_start();
        let value = match rest.chars().next() {
            Some(q @ ('"' | '\'')) => rest[1..].split(q).next().unwrap_or(""),
            _ => rest.split(char::is_whitespace).next().unwrap_or(""),
        };
        return (!value.is_empty()).then(|| value.to_string());
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageDistribution {
    pub uri: CanonicalUri,
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LanguageDistribution {
    pub fn from_records<'a>(uri: CanonicalUri, records: impl IntoIterator<Item = &'a ArchiveRecord>) -> Self {
        let mut counts = BTreeMap::new();
        let mut warnings = Vec::new();
        let mut total = 0;
        for r in records {
            let reading = language_of(r);
            warnings.extend(reading.warning);
            *counts
                .entry(reading.tag.unwrap_or_else(|| UNDETERMINED.to_string()))
                .or_insert(0) += 1;
            total += 1;
        }
        LanguageDistribution {
            uri,
            counts,
            total,
            warnings,
        }
    }

    pub fn count(&self, tag: &str) -> usize {
        self.counts.get(&primary_subtag(tag)).copied().unwrap_or(0)
    }

    pub fn fraction(&self, tag: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(tag) as f64 / self.total as f64
        }
    }

    pub fn fractions(&self) -> BTreeMap<String, f64> {
        self.counts.keys().map(|t| (t.clone(), self.fraction(t))).collect()
    }

    /// Most frequent tag; ties go to the alphabetically first.
    pub fn modal(&self) -> Option<&str> {
        self.modal_where(|_| true)
    }

    /// Most frequent tag other than `excluded`.
    pub fn modal_excluding(&self, excluded: &str) -> Option<&str> {
        let excluded = primary_subtag(excluded);
        self.modal_where(|t| t != excluded && t != UNDETERMINED)
    }

    fn modal_where(&self, keep: impl Fn(&str) -> bool) -> Option<&str> {
        self.counts
            .iter()
            .filter(|(t, _)| keep(t))
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(t, _)| t.as_str())
    }

    /// Shannon entropy of the tag distribution, in bits.
    pub fn entropy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        self.counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum::<f64>()
            .max(0.0)
    }
}

/// Language counts over every capture of `uri`.
pub fn distribution(store: &ArchiveStore, uri: &CanonicalUri) -> LanguageDistribution {
    let records = store.lookup(uri).iter().filter_map(|e| store.get(e.id));
    LanguageDistribution::from_records(uri.clone(), records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Defaced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub root_uri: CanonicalUri,
    pub root_id: u64,
    pub root_language: Option<String>,
    pub languages_present: BTreeSet<String>,
    /// Parts whose language differs from the root's.
    pub violating_parts: Vec<(CanonicalUri, String)>,
    /// Parts that are missing or whose language is unknown.
    pub unresolved_parts: Vec<CanonicalUri>,
    pub verdict: Verdict,
}

/// Defaced iff root and parts together show two or more known languages.
pub fn detect_violations(composite: &CompositeMemento) -> ViolationReport {
    let root_language = language_of(&composite.root).tag;
    let mut languages_present: BTreeSet<String> = root_language.iter().cloned().collect();
    let mut violating_parts = Vec::new();
    let mut unresolved_parts = Vec::new();
    for part in &composite.parts {
        match part.record.as_ref().and_then(|r| language_of(r).tag) {
            Some(tag) => {
                if root_language.as_ref().is_some_and(|root| *root != tag) {
                    violating_parts.push((part.uri.clone(), tag.clone()));
                }
                languages_present.insert(tag);
            }
            None => unresolved_parts.push(part.uri.clone()),
        }
    }
    let verdict = if languages_present.len() > 1 {
        Verdict::Defaced
    } else {
        Verdict::Consistent
    };
    ViolationReport {
        root_uri: composite.root.uri.clone(),
        root_id: composite.root.id,
        root_language,
        languages_present,
        violating_parts,
        unresolved_parts,
        verdict,
    }
}

impl ViolationReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "root {} (record {})", self.root_uri, self.root_id);
        let _ = writeln!(
            s,
            "root language: {}",
            self.root_language.as_deref().unwrap_or(UNDETERMINED)
        );
        let langs: Vec<&str> = self.languages_present.iter().map(String::as_str).collect();
        let _ = writeln!(s, "languages present: {}", langs.join(", "));
        for (uri, tag) in &self.violating_parts {
            let _ = writeln!(s, "  violating part {uri} [{tag}]");
        }
        for uri in &self.unresolved_parts {
            let _ = writeln!(s, "  unresolved part {uri}");
        }
        let _ = writeln!(
            s,
            "verdict: {}",
            match self.verdict {
                Verdict::Consistent => "consistent",
                Verdict::Defaced => "defaced",
            }
        );
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub label: String,
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub fractions: BTreeMap<String, f64>,
    pub modal: Option<String>,
    /// Extra metric: a single number for how spread out the languages are.
    pub entropy_bits: f64,
}

impl DistributionSummary {
    pub fn new(label: &str, d: &LanguageDistribution) -> Self {
        DistributionSummary {
            label: label.to_string(),
            total: d.total,
            counts: d.counts.clone(),
            fractions: d.fractions(),
            modal: d.modal().map(str::to_string),
            entropy_bits: d.entropy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub uri: CanonicalUri,
    pub a: DistributionSummary,
    pub b: DistributionSummary,
    /// `a.entropy_bits - b.entropy_bits`
    pub entropy_difference: f64,
}

/// Compares the language distribution of `uri` in two archives.
pub fn bias_report(
    store_a: &ArchiveStore,
    label_a: &str,
    store_b: &ArchiveStore,
    label_b: &str,
    uri: &CanonicalUri,
) -> BiasReport {
    let a = DistributionSummary::new(label_a, &distribution(store_a, uri));
    let b = DistributionSummary::new(label_b, &distribution(store_b, uri));
    BiasReport {
        uri: uri.clone(),
        entropy_difference: a.entropy_bits - b.entropy_bits,
        a,
        b,
    }
}

impl BiasReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "language distribution of {}", self.uri);
        let tags: BTreeSet<&String> = self.a.counts.keys().chain(self.b.counts.keys()).collect();
        let (la, lb) = (&self.a.label, &self.b.label);
        let _ = writeln!(s, "{:<8} {:>16} {:>16}", "lang", la, lb);
        for t in tags {
            let cell = |d: &DistributionSummary| {
                format!(
                    "{} ({:.1}%)",
                    d.counts.get(t).copied().unwrap_or(0),
                    100.0 * d.fractions.get(t).copied().unwrap_or(0.0)
                )
            };
            let _ = writeln!(s, "{:<8} {:>16} {:>16}", t, cell(&self.a), cell(&self.b));
        }
        let _ = writeln!(s, "{:<8} {:>16} {:>16}", "total", self.a.total, self.b.total);
        let modal = |d: &DistributionSummary| d.modal.clone().unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<8} {:>16} {:>16}", "modal", modal(&self.a), modal(&self.b));
        let _ = writeln!(
            s,
            "{:<8} {:>16.4} {:>16.4}",
            "entropy", self.a.entropy_bits, self.b.entropy_bits
        );
        let _ = writeln!(
            s,
            "entropy difference ({la} - {lb}): {:.4} bits",
            self.entropy_difference
        );
        s
    }
}
