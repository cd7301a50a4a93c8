//! Builds providers and scorers from configuration.

use std::collections::HashMap;
use std::path::Path;

use cherry_core::scoring::{
    select_demonstrations, ChatSummarizer, Demonstration, HttpChatClient, ImportanceScorer, LexRankScorer, LookupScorer,
    PromptScorer, RemoteClassifier, Summarizer,
};
use cherry_core::textproc::{EmbeddingProvider, HashedNgramProvider, RemoteEmbeddingProvider};

use crate::config::{EmbeddingConfig, RunConfig, ScorerConfig};
use crate::error::CliError;

pub fn embedding(cfg: &EmbeddingConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    Ok(match cfg {
        EmbeddingConfig::Hashed { dimension } => Box::new(HashedNgramProvider::new(*dimension)),
        EmbeddingConfig::Remote(r) => Box::new(RemoteEmbeddingProvider::connect(r).map_err(CliError::runtime)?),
    })
}

/// The fixed important set: one statement per non-blank line.
pub fn lookup_table(path: &Path) -> Result<HashMap<String, f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(|l| (l.to_string(), 1.0)).collect())
}

pub fn scorer(cfg: &ScorerConfig, run: &RunConfig) -> Result<Box<dyn ImportanceScorer>, CliError> {
    Ok(match cfg {
        ScorerConfig::Lexrank { params } => Box::new(LexRankScorer { params: *params }),
        ScorerConfig::Remote(r) => Box::new(RemoteClassifier::new(r).map_err(CliError::runtime)?),
        ScorerConfig::Prompt { chat, demonstrations, demonstration_count } => {
            let client = HttpChatClient::new(chat).map_err(CliError::runtime)?;
            match demonstrations {
                None => Box::new(PromptScorer::zero_shot(client)),
                Some(path) => {
                    let pool: Vec<Demonstration> = crate::io::read_jsonl(path)?;
                    let chosen = select_demonstrations(&pool, *demonstration_count, run.seeds.demonstrations);
                    Box::new(PromptScorer::few_shot(client, chosen))
                }
            }
        }
        ScorerConfig::Lookup { important, threshold } => Box::new(LookupScorer::new(lookup_table(important)?, *threshold)),
    })
}

pub fn summarizer(run: &RunConfig) -> Result<Option<Box<dyn Summarizer>>, CliError> {
    match &run.summarizer {
        None => Ok(None),
        Some(chat) => Ok(Some(Box::new(ChatSummarizer::new(HttpChatClient::new(chat).map_err(CliError::runtime)?)))),
    }
}
