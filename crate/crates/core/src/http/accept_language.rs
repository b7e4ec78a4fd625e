/// Parses an `Accept-Language` value into `(tag, q)` pairs, highest q
/// first; equal weights keep their arrival order. Tags are lowercased, a
/// missing q is 1.0, and entries with an unparseable q are skipped.
pub fn parse_accept_language(header_value: &str) -> Vec<(String, f32)> {
    let mut out: Vec<(String, f32)> = header_value
        .split(',')
        .filter_map(|entry| {
            let mut parts = entry.split(';');
            let tag = parts.next()?.trim();
            if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '*') {
                return None;
            }
            let mut q = 1.0f32;
            for param in parts {
                let (k, v) = param.split_once('=')?;
                if k.trim().eq_ignore_ascii_case("q") {
                    q = v.trim().parse().ok().filter(|q: &f32| (0.0..=1.0).contains(q))?;
                }
            }
            Some((tag.to_ascii_lowercase(), q))
        })
        .collect();
    // stable: ties stay in arrival order
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Primary subtag of a language tag, lowercased (`en-US` → `en`).
pub fn primary_subtag(tag: &str) -> String {
    tag.split('-').next().unwrap_or(tag).to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tag() {
        assert_eq!(parse_accept_language("ur"), vec![("ur".to_string(), 1.0)]);
        assert!(parse_accept_language("").is_empty());
    }

    /// Reference ordering: selection-sort by q, scanning left to right so
    /// that the first of equal weights is picked first.
    fn q_sort_oracle(mut items: Vec<(String, f32)>) -> Vec<(String, f32)> {
        let mut out = Vec::new();
        while !items.is_empty() {
            let mut best = 0;
            for i in 1..items.len() {
                if items[i].1 > items[best].1 {
                    best = i;
                }
            }
            out.push(items.remove(best));
        }
        out
    }

    #[test]
    fn q_ordering() {
        let got = parse_accept_language("fr;q=0.8, kn");
        let expected = q_sort_oracle(vec![("fr".into(), 0.8), ("kn".into(), 1.0)]);
        assert_eq!(got, expected);
        assert_eq!(got, vec![("kn".to_string(), 1.0), ("fr".to_string(), 0.8)]);

        let raw = "de;q=0.5, EN-us, en;q=0.9, pt;q=0.5, *;q=0.1";
        let expected = q_sort_oracle(vec![
            ("de".into(), 0.5),
            ("en-us".into(), 1.0),
            ("en".into(), 0.9),
            ("pt".into(), 0.5),
            ("*".into(), 0.1),
        ]);
        assert_eq!(parse_accept_language(raw), expected);
    }

    #[test]
    fn garbage_skipped() {
        assert_eq!(
            parse_accept_language("fr;q=abc, ;q=1, k n, ar;q=2, ur;q=0.3"),
            vec![("ur".to_string(), 0.3)]
        );
    }

    #[test]
    fn primary() {
        assert_eq!(primary_subtag("en-US"), "en");
        assert_eq!(primary_subtag("KN"), "kn");
    }
}
