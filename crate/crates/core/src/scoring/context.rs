use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::model::{Article, BiasCategory, Corpus, Event};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextPolicy {
    /// One article from a Center outlet.
    NeutralSingle,
    /// A left and a right article summarized together.
    BiasedPairSummarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub policy: ContextPolicy,
    pub max_words: usize,
    #[serde(default)]
    pub summarize_to_words: Option<usize>,
}

impl ContextSpec {
    pub fn neutral(max_words: usize) -> Self {
        Self { policy: ContextPolicy::NeutralSingle, max_words, summarize_to_words: None }
    }

    pub fn biased_pair(max_words: usize, summarize_to_words: usize) -> Self {
        Self { policy: ContextPolicy::BiasedPairSummarized, max_words, summarize_to_words: Some(summarize_to_words) }
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.max_words == 0 {
            return Err(ScoringError::InvalidSpec("max_words must be positive".into()));
        }
        if let Some(s) = self.summarize_to_words {
            if s < self.max_words {
                return Err(ScoringError::InvalidSpec(format!(
                    "summarize_to_words {s} is below max_words {}",
                    self.max_words
                )));
            }
        }
        Ok(())
    }
}

pub trait Summarizer: Send + Sync {
    fn summarize(&self, text: &str, target_words: usize) -> Result<String, ScoringError>;
}

/// The leading `k` whitespace-separated words of `text`, as a slice of the
/// original. Text with at most `k` words is returned unchanged.
pub fn trim_words(text: &str, k: usize) -> &str {
    let mut words = 0;
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_word = false;
        } else if !in_word {
            if words == k {
                return text[..i].trim_end();
            }
            in_word = true;
            words += 1;
        }
    }
    text
}

fn earliest<'a>(articles: impl Iterator<Item = &'a Article>) -> Option<&'a Article> {
    articles.min_by(|a, b| (a.published_at, &a.id).cmp(&(b.published_at, &b.id)))
}

/// Earliest article of the event whose outlet is in one of `bands`, trying
/// the bands in order.
fn pick<'a>(event: &Event, corpus: &'a Corpus, bands: &[BiasCategory]) -> Option<&'a Article> {
    let index = corpus.index();
    bands.iter().find_map(|band| {
        earliest(
            event
                .article_ids
                .iter()
                .filter_map(|id| index.articles.get(id.as_str()).copied())
                .filter(|a| index.outlets.get(a.outlet_id.as_str()).is_some_and(|o| o.bias_category == *band)),
        )
    })
}

/// The article used as neutral context for an event: the earliest one from a
/// Center outlet.
pub fn context_article<'a>(event: &Event, corpus: &'a Corpus) -> Option<&'a Article> {
    pick(event, corpus, &[BiasCategory::Center])
}

pub fn build_context(
    event: &Event,
    corpus: &Corpus,
    spec: &ContextSpec,
    summarizer: Option<&dyn Summarizer>,
) -> Result<String, ScoringError> {
    spec.validate()?;
    let unavailable = |band: &str| ScoringError::ContextUnavailable { event: event.id.clone(), band: band.into() };
    match spec.policy {
        ContextPolicy::NeutralSingle => {
            let article = pick(event, corpus, &[BiasCategory::Center]).ok_or_else(|| unavailable("Center"))?;
            Ok(trim_words(&article.body, spec.max_words).to_string())
        }
        ContextPolicy::BiasedPairSummarized => {
            let summarizer = summarizer.ok_or(ScoringError::NoSummarizer)?;
            let left = pick(event, corpus, &[BiasCategory::Left, BiasCategory::LeftCenter]).ok_or_else(|| unavailable("Left"))?;
            let right =
                pick(event, corpus, &[BiasCategory::Right, BiasCategory::RightCenter]).ok_or_else(|| unavailable("Right"))?;
            let joined = format!("{}\n\n{}", left.body, right.body);
            let target = spec.summarize_to_words.unwrap_or(spec.max_words);
            let summary = summarizer.summarize(&joined, target)?;
            Ok(trim_words(&summary, spec.max_words).to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{article, outlet};
    use crate::model::TimeWindow;
    use std::sync::Mutex;

    #[test]
    fn trims_to_words() {
        assert_eq!(trim_words("a b  c\nd", 2), "a b");
        assert_eq!(trim_words("  a b", 1), "  a");
        assert_eq!(trim_words("a b c", 3), "a b c");
        assert_eq!(trim_words("a b c ", 3), "a b c ");
        assert_eq!(trim_words("a b c", 10), "a b c");
        assert_eq!(trim_words("a b", 0), "");
        assert_eq!(trim_words("", 5), "");
    }

    #[test]
    fn thousand_word_article_trimmed_to_hundred() {
        let body: Vec<String> = (0..1000).map(|i| format!("w{i}")).collect();
        let text = body.join(" ");
        let t = trim_words(&text, 100);
        assert_eq!(t.split_whitespace().count(), 100);
        assert_eq!(t, body[..100].join(" "));
    }

    struct Recorder(Mutex<Vec<(String, usize)>>);

    impl Summarizer for Recorder {
        fn summarize(&self, text: &str, target_words: usize) -> Result<String, ScoringError> {
            self.0.lock().unwrap().push((text.to_string(), target_words));
            Ok("summary words here and more".into())
        }
    }

    fn corpus(bands: &[(&str, BiasCategory)]) -> (Corpus, Event) {
        let mut c = Corpus::default();
        for (i, (id, band)) in bands.iter().enumerate() {
            c.outlets.push(outlet(id, *band));
            let (a, _) = article(id, "story", 2 + i as u32, &[&format!("Body from {id}.")]);
            c.articles.push(a);
        }
        let mut ids: Vec<String> = c.articles.iter().map(|a| a.id.clone()).collect();
        ids.sort();
        let e = Event {
            id: Event::derive_id(&ids),
            title: "t".into(),
            article_ids: ids,
            window: TimeWindow { start: c.articles[0].published_at, end: c.articles.last().unwrap().published_at },
        };
        (c, e)
    }

    #[test]
    fn neutral_uses_center_article() {
        let (c, e) = corpus(&[("l", BiasCategory::Left), ("c", BiasCategory::Center), ("c2", BiasCategory::Center)]);
        let ctx = build_context(&e, &c, &ContextSpec::neutral(100), None).unwrap();
        assert_eq!(ctx, "Body from c.");
    }

    #[test]
    fn missing_band_is_named() {
        let (c, e) = corpus(&[("l", BiasCategory::Left), ("r", BiasCategory::Right)]);
        let err = build_context(&e, &c, &ContextSpec::neutral(100), None).unwrap_err();
        assert!(matches!(&err, ScoringError::ContextUnavailable { band, .. } if band == "Center"));
        let (c, e) = corpus(&[("l", BiasCategory::Left), ("c", BiasCategory::Center)]);
        let rec = Recorder(Mutex::new(vec![]));
        let err = build_context(&e, &c, &ContextSpec::biased_pair(10, 50), Some(&rec)).unwrap_err();
        assert!(matches!(&err, ScoringError::ContextUnavailable { band, .. } if band == "Right"));
    }

    #[test]
    fn biased_pair_is_left_then_right() {
        let (c, e) = corpus(&[("r", BiasCategory::Right), ("c", BiasCategory::Center), ("l", BiasCategory::LeftCenter)]);
        let rec = Recorder(Mutex::new(vec![]));
        let ctx = build_context(&e, &c, &ContextSpec::biased_pair(3, 200), Some(&rec)).unwrap();
        assert_eq!(ctx, "summary words here");
        let calls = rec.0.lock().unwrap();
        assert_eq!(calls.as_slice(), [("Body from l.\n\nBody from r.".to_string(), 200)]);
        assert!(matches!(
            build_context(&e, &c, &ContextSpec::biased_pair(3, 200), None),
            Err(ScoringError::NoSummarizer)
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(ContextSpec::neutral(0).validate().is_err());
        assert!(ContextSpec::biased_pair(100, 50).validate().is_err());
        assert!(ContextSpec::biased_pair(100, 100).validate().is_ok());
    }
}
