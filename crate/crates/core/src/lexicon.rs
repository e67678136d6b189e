//! Editable word lists used by the parser and the search engine: the synonym
//! table and the stop-phrase list. Defaults are compiled in from `data/` and
//! can be replaced by files with the same formats.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_SYNONYMS: &str = include_str!("../data/synonyms.json");
const DEFAULT_STOP_PHRASES: &str = include_str!("../data/stop_phrases.txt");

/// A label family selected by slope sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// Labels whose angle mode is above the flat threshold.
    Positive,
    /// Labels whose angle mode is below the negative flat threshold.
    Negative,
    /// Labels whose angle mode is within the flat threshold.
    Flat,
}

impl Family {
    pub fn selects(self, mode: f64, flat_threshold: f64) -> bool {
        match self {
            Family::Positive => mode > flat_threshold,
            Family::Negative => mode < -flat_threshold,
            Family::Flat => mode.abs() <= flat_threshold,
        }
    }
}

/// What a synonym expands to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SynonymTarget {
    /// A vocabulary word, e.g. `"tanked" → "tanking"`.
    Token(String),
    /// A whole slope family, e.g. `"up" → +slope`.
    Family(Family),
}

impl SynonymTarget {
    fn parse(s: &str) -> SynonymTarget {
        match s.trim() {
            "+slope" => SynonymTarget::Family(Family::Positive),
            "-slope" | "\u{2212}slope" => SynonymTarget::Family(Family::Negative),
            "flat" => SynonymTarget::Family(Family::Flat),
            other => SynonymTarget::Token(other.to_lowercase()),
        }
    }
}

/// Map from a lowercase word or phrase to vocabulary words or family
/// selectors (`"+slope"`, `"-slope"`, `"flat"`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynonymTable {
    entries: BTreeMap<String, Vec<SynonymTarget>>,
}

impl SynonymTable {
    pub fn from_json_str(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        Ok(SynonymTable {
            entries: raw
                .into_iter()
                .map(|(k, v)| {
                    let key = k.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
                    (key, v.iter().map(|t| SynonymTarget::parse(t)).collect())
                })
                .collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&[SynonymTarget]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Longest key length in words.
    pub fn max_phrase_words(&self) -> usize {
        self.entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(1)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl std::str::FromStr for SynonymTable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_json_str(s)
    }
}

/// Built-in synonym table.
pub fn default_synonyms() -> SynonymTable {
    SynonymTable::from_json_str(DEFAULT_SYNONYMS).expect("bundled synonyms are valid")
}

/// Phrases removed from queries before classification. Plain text, one
/// phrase per line; blank lines and `#` comments are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StopPhrases {
    /// Word sequences, longest first.
    phrases: Vec<Vec<String>>,
    words: BTreeSet<String>,
}

impl StopPhrases {
    pub fn from_text(text: &str) -> Self {
        let mut phrases: Vec<Vec<String>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split_whitespace().map(str::to_lowercase).collect())
            .collect();
        phrases.sort_by(|a: &Vec<String>, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        phrases.dedup();
        let words = phrases
            .iter()
            .filter(|p| p.len() == 1)
            .map(|p| p[0].clone())
            .collect();
        StopPhrases { phrases, words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    /// Length in words of the longest stop phrase starting at `words[0]`.
    pub fn match_len(&self, words: &[&str]) -> usize {
        self.phrases
            .iter()
            .find(|p| p.len() <= words.len() && p.iter().zip(words).all(|(a, b)| a == b))
            .map_or(0, Vec::len)
    }

    pub fn is_stop_word(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

/// Built-in stop phrases.
pub fn default_stop_phrases() -> StopPhrases {
    StopPhrases::from_text(DEFAULT_STOP_PHRASES)
}
