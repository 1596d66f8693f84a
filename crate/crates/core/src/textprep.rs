//! Text normalization and tokenization.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../resources/stopwords_en.txt");

/// Minimum token length kept by [`tokenize`].
pub const MIN_TOKEN_LEN: usize = 2;

/// Lowercase stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list (152 entries).
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses one token per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl FromIterator<String> for Stopwords {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.to_lowercase()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stemming {
    #[default]
    None,
    SuffixStrip,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Character count of the text the tokens were taken from.
    pub source_length: usize,
}

impl TokenStream {
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

fn strip_html_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos + 1..];
        let body_len = tail
            .char_indices()
            .take_while(|&(i, c)| i < 10 && (c.is_ascii_alphanumeric() || (i == 0 && c == '#')))
            .count();
        if body_len > 0 && tail[body_len..].starts_with(';') {
            rest = &tail[body_len + 1..];
        } else {
            out.push('&');
            rest = tail;
        }
    }
    out.push_str(rest);
    out
}

fn collapse_repeats(s: &str, max_run: usize) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev = None;
    let mut run = 0;
    for c in s.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= max_run {
            out.push(c);
        }
    }
    out
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_url_start(word: &str) -> bool {
    word.starts_with("http://") || word.starts_with("https://") || word.starts_with("www.")
}

/// Removes URL words, leaving the separating spaces around them in place.
fn strip_urls(s: &str) -> String {
    s.split(' ')
        .map(|w| if is_url_start(w) { "" } else { w })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonicalizes raw review text.
///
/// Applies Unicode NFC, lowercasing, HTML entity removal, collapsing of any run of four or
/// more identical characters down to three, and whitespace collapsing. URL words are
/// removed last, so the spaces that surrounded them remain.
pub fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    let lowered = nfc
        .to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'");
    let no_entities = strip_html_entities(&lowered);
    let collapsed = collapse_repeats(&no_entities, 3);
    strip_urls(&collapse_whitespace(&collapsed))
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| b"aeiouy".contains(&b))
}

/// Conservative suffix stripping. Rules, first match wins:
///
/// | suffix | guard                                            |
/// |--------|--------------------------------------------------|
/// | `'s`   | always                                           |
/// | `ing`  | stem ≥ 3 chars and contains a vowel              |
/// | `ed`   | stem ≥ 3 chars and contains a vowel              |
/// | `ly`   | stem ≥ 3 chars                                   |
/// | `es`   | stem ends in `sh`, `ch`, `x`, `z` or `ss`        |
/// | `s`    | word ≥ 4 chars, not ending in `ss`, `us` or `is` |
pub fn strip_suffix(token: &str) -> String {
    if let Some(stem) = token.strip_suffix("'s") {
        return stem.to_string();
    }
    if let Some(stem) = token.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix("ed") {
        if stem.len() >= 3 && has_vowel(stem) {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix("ly") {
        if stem.len() >= 3 {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix("es") {
        if ["sh", "ch", "x", "z", "ss"].iter().any(|s| stem.ends_with(s)) {
            return stem.to_string();
        }
    }
    if token.len() >= 4
        && token.ends_with('s')
        && !["ss", "us", "is"].iter().any(|s| token.ends_with(s))
    {
        return token[..token.len() - 1].to_string();
    }
    token.to_string()
}

fn keep(token: &str, stopwords: &Stopwords) -> bool {
    token.len() >= MIN_TOKEN_LEN
        && token.as_bytes()[0].is_ascii_lowercase()
        && !stopwords.contains(token)
}

/// Splits normalized text into terms.
///
/// Word characters are ASCII letters, digits and apostrophes; apostrophes at either end of
/// a word are trimmed. Tokens shorter than two characters, starting with a digit, or present
/// in `stopwords` are dropped.
pub fn tokenize(normalized: &str, stopwords: &Stopwords, stemming: Stemming) -> TokenStream {
    let mut tokens = Vec::new();
    for raw in normalized.split(|c: char| !(c.is_ascii_alphanumeric() || c == '\'')) {
        let word = raw.trim_matches('\'').to_ascii_lowercase();
        if !keep(&word, stopwords) {
            continue;
        }
        let word = match stemming {
            Stemming::None => word,
            Stemming::SuffixStrip => {
                let stem = strip_suffix(&word);
                if !keep(&stem, stopwords) {
                    continue;
                }
                stem
            }
        };
        tokens.push(word);
    }
    TokenStream {
        tokens,
        source_length: normalized.chars().count(),
    }
}

/// Normalization plus tokenization under one configuration.
#[derive(Debug, Clone)]
pub struct TextPipeline {
    pub stopwords: Stopwords,
    pub stemming: Stemming,
}

impl Default for TextPipeline {
    fn default() -> Self {
        Self {
            stopwords: Stopwords::english(),
            stemming: Stemming::None,
        }
    }
}

impl TextPipeline {
    pub fn process(&self, raw: &str) -> TokenStream {
        tokenize(&normalize_text(raw), &self.stopwords, self.stemming)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_lowercases_only() {
        assert_eq!(normalize_text("GARBAGE!!!"), "garbage!!!");
    }

    #[test]
    fn normalize_collapses_per_character_runs() {
        assert_eq!(normalize_text("soooooo"), "sooo");
        assert_eq!(normalize_text("huehuehuehuehue"), "huehuehuehuehue");
        assert_eq!(normalize_text("noooo!!!!!"), "nooo!!!");
    }

    #[test]
    fn normalize_strips_urls_in_place() {
        assert_eq!(normalize_text("visit http://x.co now"), "visit  now");
        assert_eq!(normalize_text("see www.example.com"), "see ");
    }

    #[test]
    fn normalize_strips_entities_and_whitespace() {
        assert_eq!(normalize_text("fun &amp;  cheap&#39;s\n\tok"), "fun cheaps ok");
        assert_eq!(normalize_text("a & b"), "a & b");
        // NFC: e + combining acute becomes a single code point
        assert_eq!(normalize_text("Cafe\u{301}"), "caf\u{e9}");
    }

    #[test]
    fn tokenize_drops_stopwords() {
        let sw: Stopwords = ["for", "my"].iter().map(|s| s.to_string()).collect();
        let ts = tokenize("thanks for ruining my childhood", &sw, Stemming::None);
        assert_eq!(ts.tokens, ["thanks", "ruining", "childhood"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("", &Stopwords::english(), Stemming::None).tokens.is_empty());
    }

    #[test]
    fn tokenize_table_review() {
        let p = TextPipeline::default();
        let ts = p.process("Awfuly boring gameplay, primitive graphics, many connections errors...");
        for t in ["boring", "gameplay", "primitive", "graphics"] {
            assert!(ts.tokens.iter().any(|x| x == t), "missing {t}");
        }
        // misspellings stay as written
        assert!(ts.tokens.iter().any(|x| x == "awfuly"));
    }

    #[test]
    fn tokenize_apostrophes_and_digits() {
        let ts = tokenize("'quoted' don't 2077 cyberpunk2077 x", &Stopwords::empty(), Stemming::None);
        assert_eq!(ts.tokens, ["quoted", "don't", "cyberpunk2077"]);
    }

    #[test]
    fn suffix_strip_table() {
        let cases = [
            ("servers", "server"),
            ("crashes", "crash"),
            ("boxes", "box"),
            ("ruined", "ruin"),
            ("ruining", "ruin"),
            ("totally", "total"),
            ("boss", "boss"),
            ("bonus", "bonus"),
            ("this", "this"),
            ("red", "red"),
            ("sing", "sing"),
            ("blizzard's", "blizzard"),
            ("gas", "gas"),
        ];
        for (word, stem) in cases {
            assert_eq!(strip_suffix(word), stem, "{word}");
        }
    }

    #[test]
    fn bundled_stopwords() {
        let sw = Stopwords::english();
        assert!(sw.len() >= 140 && sw.len() <= 160);
        assert!(sw.contains("the"));
        for kept in ["game", "new", "old", "false", "hope", "money"] {
            assert!(!sw.contains(kept), "{kept} must not be a stopword");
        }
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "[a-zA-Z0-9 ,.!?'\\-]{0,80}") {
            let sw = Stopwords::english();
            let first = tokenize(&normalize_text(&text), &sw, Stemming::None);
            let second = tokenize(&first.join(), &sw, Stemming::None);
            prop_assert_eq!(&first.tokens, &second.tokens);
        }

        #[test]
        fn tokens_are_lowercase_and_not_stopwords(text in "\\PC{0,80}") {
            let sw = Stopwords::english();
            for stemming in [Stemming::None, Stemming::SuffixStrip] {
                let ts = tokenize(&normalize_text(&text), &sw, stemming);
                for t in &ts.tokens {
                    prop_assert!(!sw.contains(t));
                    let b = t.as_bytes();
                    prop_assert!(b[0].is_ascii_lowercase());
                    prop_assert!(b.iter().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == b'\''));
                }
            }
        }
    }
}
