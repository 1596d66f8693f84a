//! Term ranking from a trained multinomial Naive Bayes model, concept categories and
//! wordcloud export.

mod wordcloud;

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::MnbParams;
use crate::vectorize::vocabulary_hash;
use crate::Label;

pub use wordcloud::{export_wordcloud, PlacedTerm, WeightEntry, Wordcloud, WordcloudConfig};

pub const UNCATEGORIZED: &str = "uncategorized";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// By `θ(t | RB)`.
    #[default]
    Conditional,
    /// By `ln(θ(t | RB) / θ(t | NonRB))`.
    Distinctive,
}

impl std::str::FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional" => Ok(Self::Conditional),
            "distinctive" => Ok(Self::Distinctive),
            other => Err(Error::InvalidArgument(format!(
                "unknown rank mode {other:?} (expected conditional or distinctive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub term: String,
    pub rb_conditional_prob: f64,
    pub distinctiveness: f64,
}

impl RankedTerm {
    pub fn key(&self, mode: RankMode) -> f64 {
        match mode {
            RankMode::Conditional => self.rb_conditional_prob,
            RankMode::Distinctive => self.distinctiveness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRanking {
    pub mode: RankMode,
    pub vocabulary_hash: String,
    pub entries: Vec<RankedTerm>,
}

/// Top `top_k` vocabulary terms, key descending with lexicographic tie-break.
///
/// `terms` is the model's vocabulary in feature-index order; its hash must equal
/// `expected_hash`, the hash recorded when the model was trained.
pub fn rank_terms(
    params: &MnbParams,
    terms: &[String],
    expected_hash: &str,
    mode: RankMode,
    top_k: usize,
) -> Result<TermRanking> {
    let actual = vocabulary_hash(terms);
    if actual != expected_hash {
        return Err(Error::VocabularyMismatch {
            expected: expected_hash.to_string(),
            actual,
        });
    }
    if terms.len() != params.n_features() {
        return Err(Error::LengthMismatch {
            what: "vocabulary vs model features",
            left: terms.len(),
            right: params.n_features(),
        });
    }
    let rb = &params.feature_log_prob[Label::Rb.index()];
    let non = &params.feature_log_prob[Label::NonRb.index()];
    let mut entries: Vec<RankedTerm> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| RankedTerm {
            term: t.clone(),
            rb_conditional_prob: rb[i].exp(),
            distinctiveness: rb[i] - non[i],
        })
        .collect();
    entries.sort_by(|a, b| {
        b.key(mode)
            .total_cmp(&a.key(mode))
            .then_with(|| a.term.cmp(&b.term))
    });
    entries.truncate(top_k);
    Ok(TermRanking {
        mode,
        vocabulary_hash: expected_hash.to_string(),
        entries,
    })
}

/// Ordered mapping from category name to member terms. A term belongs to the first
/// category listing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptLexicon(pub IndexMap<String, Vec<String>>);

impl Default for ConceptLexicon {
    fn default() -> Self {
        let groups: [(&str, &[&str]); 5] = [
            ("companies", &["blizzard", "activision", "rockstar", "company"]),
            ("originality", &["original", "classic", "new", "old", "remaster", "childhood"]),
            ("economic", &["money", "refund", "spend", "cash"]),
            ("sentiment", &["garbage", "terrible", "disgusting", "trash"]),
            ("frustration", &["false", "promise", "shame", "hope", "lie"]),
        ];
        Self(
            groups
                .iter()
                .map(|(c, ts)| (c.to_string(), ts.iter().map(|t| t.to_string()).collect()))
                .collect(),
        )
    }
}

impl ConceptLexicon {
    pub fn empty() -> Self {
        Self(IndexMap::new())
    }

    /// JSON object `{category: [terms...]}`; category order is preserved.
    pub fn from_json(json: &str) -> Result<Self> {
        let lex: Self = serde_json::from_str(json)?;
        if lex.0.contains_key(UNCATEGORIZED) {
            return Err(Error::Config(format!("lexicon category name {UNCATEGORIZED:?} is reserved")));
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn category_of(&self, term: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, terms)| terms.iter().any(|t| t == term))
            .map(|(c, _)| c.as_str())
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.0.values().flatten().all(|t| seen.insert(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub category: String,
    /// In ranking order.
    pub terms: Vec<String>,
    pub share: f64,
}

/// One row per lexicon category in lexicon order, then `uncategorized`.
pub fn categorize_terms(ranking: &TermRanking, lexicon: &ConceptLexicon) -> Result<Vec<CategoryShare>> {
    if ranking.entries.is_empty() {
        return Err(Error::InvalidArgument("cannot categorize an empty ranking".into()));
    }
    let mut rows: Vec<CategoryShare> = lexicon
        .categories()
        .chain(std::iter::once(UNCATEGORIZED))
        .map(|c| CategoryShare {
            category: c.to_string(),
            terms: Vec::new(),
            share: 0.0,
        })
        .collect();
    for e in &ranking.entries {
        let slot = lexicon
            .category_of(&e.term)
            .and_then(|c| lexicon.0.get_index_of(c))
            .unwrap_or(rows.len() - 1);
        rows[slot].terms.push(e.term.clone());
    }
    let n = ranking.entries.len() as f64;
    for r in &mut rows {
        r.share = r.terms.len() as f64 / n;
    }
    Ok(rows)
}
