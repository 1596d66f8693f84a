//! English detection with a character-trigram profile and a stopword ratio.
//!
//! The confidence for a text is the larger of two signals: the cosine similarity between
//! the text's trigram counts and the profile's trigram frequencies, and the fraction of the
//! text's words found in the profile stopword list. Texts with too few letters are left
//! undetermined.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::Stopwords;

const ENGLISH_SAMPLE: &str = include_str!("../resources/english_sample.txt");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Minimum confidence for an `english` decision.
    pub accept: f64,
    /// Texts with fewer alphabetic characters are `undetermined`.
    pub min_chars: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { accept: 0.22, min_chars: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageDecision {
    English,
    NonEnglish,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub decision: LanguageDecision,
    pub confidence: f64,
}

impl Detection {
    pub fn is_english(&self) -> bool {
        self.decision == LanguageDecision::English
    }
}

/// Trigram frequency profile for one language.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageProfile {
    pub language_tag: String,
    trigram_weights: BTreeMap<String, f64>,
    stopwords: BTreeSet<String>,
    norm: f64,
}

/// On-disk profile layout.
#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    language_tag: String,
    trigrams: Vec<(String, f64)>,
    stopwords: Vec<String>,
}

/// Letters-only words of `text`, lowercased.
fn letter_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Space-padded character trigrams of every word of `text`, with counts.
fn trigram_counts(text: &str) -> BTreeMap<String, f64> {
    let words: Vec<String> = letter_words(text).collect();
    trigram_counts_of(words.iter().map(String::as_str))
}

fn trigram_counts_of<'a>(words: impl Iterator<Item = &'a str>) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    let mut buf: Vec<char> = Vec::new();
    for word in words {
        buf.clear();
        buf.push(' ');
        buf.extend(word.chars());
        buf.push(' ');
        for w in buf.windows(3) {
            *counts.entry(w.iter().collect::<String>()).or_insert(0.0) += 1.0;
        }
    }
    counts
}

fn l2(v: &BTreeMap<String, f64>) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

impl LanguageProfile {
    pub fn new(language_tag: impl Into<String>, trigram_weights: BTreeMap<String, f64>, stopwords: BTreeSet<String>) -> Result<Self> {
        if trigram_weights.is_empty() {
            return Err(Error::Config("language profile has no trigrams".into()));
        }
        if trigram_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("trigram weights must be finite and non-negative".into()));
        }
        let total: f64 = trigram_weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("trigram weights sum to {total}, expected 1")));
        }
        let norm = l2(&trigram_weights);
        Ok(Self {
            language_tag: language_tag.into(),
            trigram_weights,
            stopwords,
            norm,
        })
    }

    /// Builds a profile from a sample text.
    ///
    /// Weights are the relative frequencies of padded trigrams over the sample's distinct
    /// words, so a handful of very common function words does not dominate the profile.
    pub fn from_sample(language_tag: &str, sample: &str, stopwords: &Stopwords) -> Result<Self> {
        let vocabulary: BTreeSet<String> = letter_words(sample).collect();
        let mut counts = trigram_counts_of(vocabulary.iter().map(String::as_str));
        let total: f64 = counts.values().sum();
        if total == 0.0 {
            return Err(Error::Config("sample text has no letters".into()));
        }
        counts.values_mut().for_each(|c| *c /= total);
        Self::new(language_tag, counts, stopwords.iter().map(str::to_string).collect())
    }

    /// The shipped English profile, built from the bundled sample and stopword list.
    pub fn english() -> Self {
        Self::from_sample("en", ENGLISH_SAMPLE, &Stopwords::english())
            .expect("bundled english sample is valid")
    }

    pub fn trigram_weights(&self) -> &BTreeMap<String, f64> {
        &self.trigram_weights
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn to_json(&self) -> Result<String> {
        let trigrams: Vec<_> = self.trigram_weights.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let file = ProfileFile {
            language_tag: self.language_tag.clone(),
            trigrams,
            stopwords: self.stopwords.iter().cloned().collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ProfileFile = serde_json::from_str(json)?;
        let mut weights = BTreeMap::new();
        for (k, v) in file.trigrams {
            if k.chars().count() != 3 {
                return Err(Error::Config(format!("trigram {k:?} is not three characters")));
            }
            weights.insert(k, v);
        }
        Self::new(file.language_tag, weights, file.stopwords.into_iter().map(|s| s.to_lowercase()).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    fn cosine(&self, counts: &BTreeMap<String, f64>) -> f64 {
        let norm = l2(counts);
        if norm == 0.0 || self.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = counts
            .iter()
            .filter_map(|(t, c)| self.trigram_weights.get(t).map(|w| c * w))
            .sum();
        (dot / (norm * self.norm)).clamp(0.0, 1.0)
    }

    fn stopword_ratio(&self, text: &str) -> f64 {
        let (mut words, mut hits) = (0usize, 0usize);
        for w in text
            .split(|c: char| !(c.is_alphabetic() || c == '\'' || c == '\u{2019}'))
            .map(|w| w.trim_matches(['\'', '\u{2019}']))
            .filter(|w| !w.is_empty())
        {
            words += 1;
            if self.stopwords.contains(&w.replace('\u{2019}', "'").to_lowercase()) {
                hits += 1;
            }
        }
        if words == 0 {
            0.0
        } else {
            hits as f64 / words as f64
        }
    }
}

/// Classifies `text` as English, non-English or undetermined.
pub fn detect_english(text: &str, profile: &LanguageProfile, cfg: &DetectorConfig) -> Detection {
    let usable = text.chars().filter(|c| c.is_alphabetic()).count();
    if usable == 0 {
        return Detection {
            decision: LanguageDecision::Undetermined,
            confidence: 0.0,
        };
    }
    let confidence = profile
        .cosine(&trigram_counts(text))
        .max(profile.stopword_ratio(text));
    let decision = if usable < cfg.min_chars {
        LanguageDecision::Undetermined
    } else if confidence >= cfg.accept {
        LanguageDecision::English
    } else {
        LanguageDecision::NonEnglish
    };
    Detection { decision, confidence }
}

/// Runs detection over many texts in parallel; output order matches input order.
pub fn detect_all<S: AsRef<str> + Sync>(texts: &[S], profile: &LanguageProfile, cfg: &DetectorConfig) -> Vec<Detection> {
    use rayon::prelude::*;
    texts.par_iter().map(|t| detect_english(t.as_ref(), profile, cfg)).collect()
}
