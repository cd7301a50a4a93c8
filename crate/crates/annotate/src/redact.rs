use cherry_core::model::Corpus;

pub const PLACEHOLDER: &str = "[source]";

/// Replaces outlet names, domains and article URLs with a placeholder.
/// Matching ignores ASCII case; longer needles win.
#[derive(Debug, Clone, Default)]
pub struct Redactor {
    needles: Vec<String>,
}

impl Redactor {
    pub fn new(needles: impl IntoIterator<Item = String>) -> Self {
        let mut needles: Vec<String> =
            needles.into_iter().map(|n| n.trim().to_ascii_lowercase()).filter(|n| !n.is_empty()).collect();
        needles.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        needles.dedup();
        Self { needles }
    }

    pub fn for_corpus(corpus: &Corpus) -> Self {
        let outlets = corpus.outlets.iter().flat_map(|o| {
            let bare = o.domain.trim_start_matches("www.").to_string();
            [o.name.clone(), o.domain.clone(), bare]
        });
        let urls = corpus.articles.iter().flat_map(|a| {
            let no_scheme = a.url.split_once("://").map_or(a.url.clone(), |(_, rest)| rest.to_string());
            [a.url.clone(), no_scheme]
        });
        Self::new(outlets.chain(urls))
    }

    pub fn apply(&self, text: &str) -> String {
        let lower = text.to_ascii_lowercase();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        'scan: while i < text.len() {
            for n in &self.needles {
                if lower[i..].starts_with(n.as_str()) {
                    out.push_str(PLACEHOLDER);
                    i += n.len();
                    continue 'scan;
                }
            }
            let ch = text[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
        out
    }

    /// True when no needle occurs in `text`.
    pub fn is_clean(&self, text: &str) -> bool {
        let lower = text.to_ascii_lowercase();
        !self.needles.iter().any(|n| lower.contains(n.as_str()))
    }
}
