//! Rule-based sentence splitting.
//!
//! A split happens after `.`, `!` or `?` (plus any trailing closing quotes or
//! brackets) when whitespace follows and the next word starts with an
//! upper-case letter or a digit. No split is made:
//!
//! - after a listed abbreviation (`Dr.`, `U.S.`, `p.m.`, ...),
//! - after a single capital initial (`J. Smith`),
//! - after a number prefix such as `No.` when a digit follows,
//! - anywhere strictly inside a paired quotation.
//!
//! Blank lines always end a sentence.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::model::{normalize_whitespace, Article, Statement};

const BUNDLED_ABBREVIATIONS: &str = include_str!("../../resources/abbreviations.txt");

/// Abbreviations that only hold before a numeral ("No. 5", "Fig. 2").
const NUMBER_PREFIXES: [&str; 5] = ["no.", "nos.", "fig.", "vol.", "art."];

const CLOSERS: [char; 7] = ['"', '\'', '\u{201D}', '\u{2019}', ')', ']', '\u{00BB}'];
const OPENERS: [char; 7] = ['"', '\'', '\u{201C}', '\u{2018}', '(', '[', '\u{00AB}'];

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_resource(BUNDLED_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Parses an abbreviation list: one entry per line, `#` starts a comment.
    pub fn from_resource(text: &str) -> Self {
        let abbreviations = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let l = l.to_lowercase();
                if l.ends_with('.') { l } else { format!("{l}.") }
            })
            .collect();
        Self { abbreviations }
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&token.to_lowercase())
    }

    /// Splits `text` into whitespace-normalized sentences. Joining the output
    /// with single spaces yields the whitespace-normalized input.
    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let quotes = quote_spans(&chars);
        let inside_quote = |byte: usize| quotes.iter().any(|&(s, e)| s < byte && byte < e);

        let mut cuts = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if c == '\n' && blank_line_follows(&chars, i) {
                cuts.push(chars[i].0);
                i += 1;
                continue;
            }
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let term = i;
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let single_period = c == '.' && j == term + 1;
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            i = j;
            if j >= chars.len() || !chars[j].1.is_whitespace() {
                continue;
            }
            let Some(next) = next_word_start(&chars, j) else { continue };
            let starts_sentence = next.is_uppercase() || next.is_ascii_digit();
            if !starts_sentence {
                continue;
            }
            let cut = chars[j].0;
            if inside_quote(cut) {
                continue;
            }
            if single_period {
                let token = token_before(text, &chars, term);
                if self.suppresses_split(&token, next) {
                    continue;
                }
            }
            cuts.push(cut);
        }

        let mut out = Vec::new();
        let mut start = 0;
        for cut in cuts.into_iter().chain(std::iter::once(text.len())) {
            let piece = normalize_whitespace(&text[start..cut]);
            if !piece.is_empty() {
                out.push(piece);
            }
            start = cut;
        }
        out
    }

    fn suppresses_split(&self, token: &str, next: char) -> bool {
        let lower = token.to_lowercase();
        if self.abbreviations.contains(&lower) {
            return true;
        }
        if NUMBER_PREFIXES.contains(&lower.as_str()) && next.is_ascii_digit() {
            return true;
        }
        // Single capital initial such as "J."
        let mut it = token.chars();
        matches!((it.next(), it.next(), it.next()), (Some(l), Some('.'), None) if l.is_uppercase())
    }
}

fn blank_line_follows(chars: &[(usize, char)], i: usize) -> bool {
    chars[i + 1..]
        .iter()
        .take_while(|(_, c)| c.is_whitespace())
        .any(|(_, c)| *c == '\n')
}

fn next_word_start(chars: &[(usize, char)], from: usize) -> Option<char> {
    chars[from..]
        .iter()
        .map(|&(_, c)| c)
        .find(|c| !c.is_whitespace() && !OPENERS.contains(c))
}

/// The whitespace-delimited token ending at the period at `term`, with leading
/// quotes/brackets removed.
fn token_before(text: &str, chars: &[(usize, char)], term: usize) -> String {
    let mut k = term;
    while k > 0 && !chars[k - 1].1.is_whitespace() {
        k -= 1;
    }
    let start = chars[k].0;
    let end = chars[term].0 + 1;
    text[start..end].trim_start_matches(|c| OPENERS.contains(&c)).to_string()
}

/// Byte spans `(open, end)` of properly paired quotations; `end` is just past
/// the closing mark. Unpaired marks produce no span.
fn quote_spans(chars: &[(usize, char)]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut straight: Option<usize> = None;
    let mut curly: Option<usize> = None;
    for &(pos, c) in chars {
        match c {
            '"' => match straight.take() {
                Some(open) => spans.push((open, pos + 1)),
                None => straight = Some(pos),
            },
            '\u{201C}' => curly = Some(pos),
            '\u{201D}' => {
                if let Some(open) = curly.take() {
                    spans.push((open, pos + '\u{201D}'.len_utf8()));
                }
            }
            _ => {}
        }
    }
    spans
}

fn default_splitter() -> &'static SentenceSplitter {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

/// Splits an article body into statements with contiguous ordinals.
pub fn segment_statements(article: &Article) -> Vec<Statement> {
    segment_with(default_splitter(), article)
}

pub fn segment_with(splitter: &SentenceSplitter, article: &Article) -> Vec<Statement> {
    splitter
        .split(&article.body)
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let ordinal = i as u32;
            Statement {
                id: Statement::derive_id(&article.id, ordinal),
                article_id: article.id.clone(),
                ordinal,
                word_count: text.split_whitespace().count() as u32,
                text,
            }
        })
        .collect()
}

/// Splits free text (e.g. a context passage) with the bundled rules.
pub fn split_sentences(text: &str) -> Vec<String> {
    default_splitter().split(text)
}
