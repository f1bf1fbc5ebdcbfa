//! Text normalization: HTML stripping, tokenization, stopword removal and
//! Porter stemming, composed into [`normalize`].

mod html;
mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TermBag;
use crate::error::{Error, Result};

pub use html::strip_html;
pub use porter::stem;

const SMART_STOPLIST: &str = include_str!("smart_stoplist.txt");

/// Environment variable naming a stoplist file to use instead of the
/// built-in SMART list.
pub const STOPLIST_ENV: &str = "QREFORM_STOPLIST";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub stoplist: BTreeSet<String>,
    pub stemming_enabled: bool,
    pub keep_numeric_tokens: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            stoplist: smart_stoplist(),
            stemming_enabled: true,
            keep_numeric_tokens: true,
        }
    }
}

impl NormalizationConfig {
    /// No stopwords, no stemming: terms are exactly the lowercase tokens.
    pub fn raw() -> Self {
        NormalizationConfig {
            stoplist: BTreeSet::new(),
            stemming_enabled: false,
            keep_numeric_tokens: true,
        }
    }

    pub fn with_stemming(mut self, enabled: bool) -> Self {
        self.stemming_enabled = enabled;
        self
    }

    pub fn with_stoplist(mut self, stoplist: BTreeSet<String>) -> Self {
        self.stoplist = stoplist;
        self
    }

    /// Short hex digest identifying this configuration in report headers.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, self.keep_numeric_tokens)
    }

    pub fn normalize(&self, text: &str) -> TermBag {
        normalize(text, self)
    }
}

/// Lowercase tokens split on every non-alphanumeric character.
pub fn tokenize(text: &str, keep_numeric_tokens: bool) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .filter(|tok| keep_numeric_tokens || !tok.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .collect()
}

/// tokenize, drop stopwords, stem (when enabled), count.
pub fn normalize(text: &str, config: &NormalizationConfig) -> TermBag {
    config
        .tokenize(text)
        .into_iter()
        .filter(|tok| !config.stoplist.contains(tok))
        .map(|tok| if config.stemming_enabled { stem(&tok) } else { tok })
        .collect()
}

/// Normalizes raw HTML (or plain text, which passes through untouched).
pub fn normalize_html(html: &str, config: &NormalizationConfig) -> TermBag {
    normalize(&strip_html(html), config)
}

/// The built-in SMART stopword list.
pub fn smart_stoplist() -> BTreeSet<String> {
    parse_stoplist(SMART_STOPLIST)
}

/// One word per line, `#` starts a comment. Entries are run through the
/// tokenizer so contractions such as `don't` contribute their pieces.
pub fn parse_stoplist(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|entry| tokenize(entry, true))
        .collect()
}

pub fn load_stoplist(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stoplist(&text))
}
