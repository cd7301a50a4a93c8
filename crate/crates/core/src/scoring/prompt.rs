//! Yes/no importance judgments from a chat-completion model, and a
//! summarizer over the same wire client.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ImportanceScore, ImportanceScorer, ScoringError, Summarizer, DEFAULT_THRESHOLD};
use crate::http::{JsonClient, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ScoringError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatConfig {
    pub url: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout() -> u64 {
    120
}
fn default_in_flight() -> usize {
    2
}

impl ChatConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self { url: url.into(), timeout_secs: default_timeout(), max_in_flight: default_in_flight(), retry: RetryPolicy::default() }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    content: String,
}

/// `POST /chat {"messages", "temperature": 0}` returning `{"content"}`.
#[derive(Debug)]
pub struct HttpChatClient {
    client: JsonClient,
}

impl HttpChatClient {
    pub fn new(config: &ChatConfig) -> Result<Self, ScoringError> {
        let client =
            JsonClient::new(&config.url, Duration::from_secs(config.timeout_secs), config.retry, config.max_in_flight)?;
        Ok(Self { client })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ScoringError> {
        let resp: ChatResponse = self.client.post("/chat", &ChatRequest { messages, temperature: 0.0 })?;
        Ok(resp.content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub context: String,
    pub statement: String,
    pub important: bool,
}

/// Replaces `{name}` placeholders in one pass, so substituted text is never
/// re-scanned.
fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let token = format!("{{{name}}}");
            if tail.starts_with(&token) {
                out.push_str(value);
                rest = &tail[token.len()..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    /// Uses `{context}`, `{statement}` and `{demonstrations}`.
    pub prompt: String,
    /// Uses `{context}`, `{statement}` and `{answer}`.
    pub demonstration: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            prompt: include_str!("../../resources/prompt_template.txt").to_string(),
            demonstration: include_str!("../../resources/demonstration_template.txt").to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn render(&self, statement: &str, context: &str, demonstrations: &[Demonstration]) -> String {
        let demos: String = demonstrations
            .iter()
            .map(|d| {
                let answer = if d.important { "yes" } else { "no" };
                render(&self.demonstration, &[("context", &d.context), ("statement", &d.statement), ("answer", answer)])
            })
            .collect();
        render(&self.prompt, &[("context", context), ("statement", statement), ("demonstrations", &demos)])
    }
}

/// Leading yes/no word of a reply, ignoring case, quotes and punctuation.
fn parse_answer(reply: &str) -> Option<bool> {
    let word: String = reply
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

const REASK: &str = "Reply with yes or no only.";

pub struct PromptScorer<C: ChatClient> {
    client: C,
    template: PromptTemplate,
    demonstrations: Vec<Demonstration>,
}

impl<C: ChatClient> PromptScorer<C> {
    pub fn zero_shot(client: C) -> Self {
        Self { client, template: PromptTemplate::default(), demonstrations: Vec::new() }
    }

    pub fn few_shot(client: C, demonstrations: Vec<Demonstration>) -> Self {
        Self { client, template: PromptTemplate::default(), demonstrations }
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn prompt(&self, statement: &str, context: &str) -> String {
        self.template.render(statement, context, &self.demonstrations)
    }
}

impl<C: ChatClient> ImportanceScorer for PromptScorer<C> {
    fn name(&self) -> &str {
        if self.demonstrations.is_empty() { "prompt-zero-shot" } else { "prompt-few-shot" }
    }

    fn score(&self, statement: &str, context: &str) -> Result<ImportanceScore, ScoringError> {
        let mut messages = vec![ChatMessage::user(self.prompt(statement, context))];
        let first = self.client.complete(&messages)?;
        let answer = match parse_answer(&first) {
            Some(a) => a,
            None => {
                messages.push(ChatMessage::assistant(first));
                messages.push(ChatMessage::user(REASK));
                let second = self.client.complete(&messages)?;
                parse_answer(&second).ok_or(ScoringError::Unparsable { raw: second })?
            }
        };
        Ok(ImportanceScore::new(if answer { 1.0 } else { 0.0 }, DEFAULT_THRESHOLD))
    }
}

/// Up to `n` demonstrations, half important and half not where the pool
/// allows, topped up from the other label otherwise. Deterministic in `seed`.
pub fn select_demonstrations(pool: &[Demonstration], n: usize, seed: u64) -> Vec<Demonstration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<&Demonstration> = pool.iter().filter(|d| d.important).collect();
    let mut neg: Vec<&Demonstration> = pool.iter().filter(|d| !d.important).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let want_pos = n.div_ceil(2);
    let take_pos = want_pos.min(pos.len()).max(n.saturating_sub(neg.len())).min(pos.len());
    let take_neg = (n - take_pos).min(neg.len());
    let mut chosen: Vec<Demonstration> =
        pos[..take_pos].iter().chain(&neg[..take_neg]).map(|d| (*d).clone()).collect();
    chosen.shuffle(&mut rng);
    chosen
}

/// Summarizes text through a chat model with a fixed instruction.
pub struct ChatSummarizer<C: ChatClient> {
    client: C,
}

impl<C: ChatClient> ChatSummarizer<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }

    pub fn instruction(text: &str, target_words: usize) -> String {
        format!(
            "Combine the following news articles about one story into a single summary of at most {target_words} words. \
             Keep concrete facts and attributions.\n\n{text}"
        )
    }
}

impl<C: ChatClient> Summarizer for ChatSummarizer<C> {
    fn summarize(&self, text: &str, target_words: usize) -> Result<String, ScoringError> {
        self.client.complete(&[ChatMessage::user(Self::instruction(text, target_words))])
    }
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ScoringError> {
        (**self).complete(messages)
    }
}
