//! TF-IDF vectorization over a capped vocabulary.
//!
//! Conventions: raw term counts, smoothed idf `ln((1 + N) / (1 + df)) + 1`, L2-normalized
//! rows, no sublinear tf. The vocabulary keeps the `max_features` terms with the highest
//! total occurrence count (ties broken lexicographically) and assigns column indices in
//! lexicographic term order.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textprep::TokenStream;

pub const DEFAULT_MAX_FEATURES: usize = 1000;
pub const TFIDF_ARTIFACT_VERSION: u32 = 1;

/// Sparse row with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    /// Builds a vector from `(index, value)` pairs, sorting by index and summing duplicates.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut v = SparseVec::default();
        for (i, x) in pairs {
            if v.indices.last() == Some(&i) {
                *v.values.last_mut().unwrap() += x;
            } else {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    /// Dense to sparse, keeping non-zero entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut v = SparseVec::default();
        for (i, &x) in dense.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i as u32);
                v.values.push(x);
            }
        }
        v
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut d = vec![0.0; n_cols];
        for (i, x) in self.iter() {
            d[i] = x;
        }
        d
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &x)| (i as usize, x))
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, x)| x * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().map(|&i| i as usize)
    }
}

/// One sparse row per document; rows stay aligned with their labels, zero rows included.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub rows: Vec<SparseVec>,
    pub n_cols: usize,
}

impl DocTermMatrix {
    pub fn new(rows: Vec<SparseVec>, n_cols: usize) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.max_index().is_some_and(|m| m >= n_cols)) {
            return Err(Error::InvalidArgument(format!("row {bad} has a column index ≥ {n_cols}")));
        }
        Ok(Self { rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    terms: Vec<String>,
    vocabulary: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    idf: Vec<f64>,
    n_documents_fitted: usize,
    max_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: String,
    pub df: usize,
    pub idf: f64,
    pub index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TfidfArtifact {
    version: u32,
    max_features: usize,
    terms: Vec<TermEntry>,
    n_documents_fitted: usize,
}

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Hex SHA-256 over the vocabulary terms in column order, newline-separated.
pub fn vocabulary_hash<S: AsRef<str>>(terms: &[S]) -> String {
    let mut h = Sha256::new();
    for t in terms {
        h.update(t.as_ref().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Fits the vocabulary and idf weights on `corpus`.
pub fn fit_vocabulary(corpus: &[TokenStream], max_features: usize) -> Result<TfidfModel> {
    if corpus.is_empty() {
        return Err(Error::Config("cannot fit a vocabulary on an empty corpus".into()));
    }
    if max_features == 0 {
        return Err(Error::Config("max_features must be at least 1".into()));
    }

    let mut totals: HashMap<&str, (usize, usize)> = HashMap::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (doc_idx, doc) in corpus.iter().enumerate() {
        for t in &doc.tokens {
            let e = totals.entry(t.as_str()).or_insert((0, 0));
            e.0 += 1;
            // count each term once per document
            let last = seen.entry(t.as_str()).or_insert(usize::MAX);
            if *last != doc_idx {
                *last = doc_idx;
                e.1 += 1;
            }
        }
    }

    let mut ranked: Vec<(&str, usize, usize)> = totals.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_features);
    ranked.sort_by(|a, b| a.0.cmp(b.0));

    let n = corpus.len();
    let terms: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
    let document_frequency: Vec<usize> = ranked.iter().map(|r| r.2).collect();
    let idf = document_frequency.iter().map(|&df| smoothed_idf(n, df)).collect();
    let vocabulary = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(TfidfModel {
        terms,
        vocabulary,
        document_frequency,
        idf,
        n_documents_fitted: n,
        max_features,
    })
}

impl TfidfModel {
    pub fn n_features(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn document_frequency(&self) -> &[usize] {
        &self.document_frequency
    }

    pub fn n_documents_fitted(&self) -> usize {
        self.n_documents_fitted
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn vocabulary_hash(&self) -> String {
        vocabulary_hash(&self.terms)
    }

    /// TF-IDF row for one document. Out-of-vocabulary tokens are ignored; a document with no
    /// vocabulary tokens maps to the zero vector.
    pub fn transform(&self, doc: &TokenStream) -> SparseVec {
        let pairs = doc
            .tokens
            .iter()
            .filter_map(|t| self.vocabulary.get(t.as_str()))
            .map(|&i| (i as u32, 1.0))
            .collect();
        let mut v = SparseVec::from_pairs(pairs);
        for (idx, w) in v.indices.iter().zip(v.values.iter_mut()) {
            *w *= self.idf[*idx as usize];
        }
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|w| *w /= norm);
        }
        v
    }

    pub fn transform_all(&self, docs: &[TokenStream]) -> DocTermMatrix {
        use rayon::prelude::*;
        DocTermMatrix {
            rows: docs.par_iter().map(|d| self.transform(d)).collect(),
            n_cols: self.n_features(),
        }
    }

    pub fn entries(&self) -> Vec<TermEntry> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| TermEntry {
                term: t.clone(),
                df: self.document_frequency[i],
                idf: self.idf[i],
                index: i,
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let artifact = TfidfArtifact {
            version: TFIDF_ARTIFACT_VERSION,
            max_features: self.max_features,
            terms: self.entries(),
            n_documents_fitted: self.n_documents_fitted,
        };
        Ok(serde_json::to_string_pretty(&artifact)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let a: TfidfArtifact = serde_json::from_str(json)?;
        if a.version != TFIDF_ARTIFACT_VERSION {
            return Err(Error::ArtifactVersion {
                found: a.version,
                expected: TFIDF_ARTIFACT_VERSION,
            });
        }
        let mut entries = a.terms;
        entries.sort_by_key(|e| e.index);
        if entries.iter().enumerate().any(|(i, e)| e.index != i) {
            return Err(Error::Config("tf-idf artifact indices are not dense 0..V".into()));
        }
        if entries.windows(2).any(|w| w[0].term >= w[1].term) {
            return Err(Error::Config("tf-idf artifact terms are not in lexicographic order".into()));
        }
        let terms: Vec<String> = entries.iter().map(|e| e.term.clone()).collect();
        Ok(TfidfModel {
            vocabulary: terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect(),
            document_frequency: entries.iter().map(|e| e.df).collect(),
            idf: entries.iter().map(|e| e.idf).collect(),
            terms,
            n_documents_fitted: a.n_documents_fitted,
            max_features: a.max_features,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(tokens: &[&str]) -> TokenStream {
        TokenStream {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            source_length: 0,
        }
    }

    #[test]
    fn single_document_idf_is_one() {
        let m = fit_vocabulary(&[ts(&["a", "b", "b"])], 10).unwrap();
        assert!(m.idf().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn cap_keeps_most_frequent() {
        let m = fit_vocabulary(&[ts(&["a", "b", "a"]), ts(&["b", "c"])], 2).unwrap();
        assert_eq!(m.terms(), ["a", "b"]);
        assert_eq!(m.document_frequency(), [1, 2]);
    }

    #[test]
    fn ties_at_the_cap_break_lexicographically() {
        let m = fit_vocabulary(&[ts(&["z", "y", "x"])], 2).unwrap();
        assert_eq!(m.terms(), ["x", "y"]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(fit_vocabulary(&[], 10), Err(Error::Config(_))));
    }

    #[test]
    fn five_document_fixture_matches_formula() {
        let corpus = [
            ts(&["refund", "money", "garbage"]),
            ts(&["garbage", "garbage", "servers"]),
            ts(&["fun", "story"]),
            ts(&["money", "refund", "refund"]),
            ts(&["story", "servers", "fun", "garbage"]),
        ];
        let m = fit_vocabulary(&corpus, 100).unwrap();
        // brute force: df by scanning every document for every term
        for (i, term) in m.terms().iter().enumerate() {
            let df = corpus.iter().filter(|d| d.tokens.contains(term)).count();
            let expected = (6.0 / (1.0 + df as f64)).ln() + 1.0;
            assert!((m.idf()[i] - expected).abs() < 1e-12, "{term}");
        }
        assert_eq!(m.terms(), ["fun", "garbage", "money", "refund", "servers", "story"]);
    }

    #[test]
    fn zero_vector_for_out_of_vocabulary() {
        let m = fit_vocabulary(&[ts(&["a"])], 10).unwrap();
        let v = m.transform(&ts(&["q", "r"]));
        assert!(v.is_zero());
        assert_eq!(v.nnz(), 0);
    }

    #[test]
    fn single_term_normalizes_to_one() {
        let m = fit_vocabulary(&[ts(&["a", "b"]), ts(&["b"]), ts(&["c"])], 10).unwrap();
        let v = m.transform(&ts(&["a"]));
        assert_eq!(v.values, [1.0]);
    }

    #[test]
    fn hand_computed_row() {
        // corpus {[a,b], [a,c], [c]}: idf_a = ln(4/3)+1, idf_b = ln(4/2)+1
        let m = fit_vocabulary(&[ts(&["a", "b"]), ts(&["a", "c"]), ts(&["c"])], 10).unwrap();
        let v = m.transform(&ts(&["a", "a", "b"]));
        let wa = 2.0 * ((4.0f64 / 3.0).ln() + 1.0);
        let wb = 1.0 * (2.0f64.ln() + 1.0);
        let n = (wa * wa + wb * wb).sqrt();
        assert_eq!(v.indices, [0, 1]);
        assert!((v.values[0] - wa / n).abs() < 1e-12);
        assert!((v.values[1] - wb / n).abs() < 1e-12);
    }

    #[test]
    fn artifact_roundtrip() {
        let m = fit_vocabulary(&[ts(&["b", "a"]), ts(&["c", "a"])], 10).unwrap();
        let back = TfidfModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.vocabulary_hash(), m.vocabulary_hash());
        let bumped = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(TfidfModel::from_json(&bumped), Err(Error::ArtifactVersion { .. })));
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        let term = prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]).prop_map(String::from);
        prop::collection::vec(prop::collection::vec(term, 0..12), 1..8)
    }

    proptest! {
        #[test]
        fn rows_are_unit_or_zero(corpus in corpus_strategy(), cap in 1usize..10) {
            let docs: Vec<TokenStream> = corpus.into_iter().map(|t| TokenStream { tokens: t, source_length: 0 }).collect();
            let m = fit_vocabulary(&docs, cap).unwrap();
            prop_assert!(m.n_features() <= cap);
            for d in &docs {
                let v = m.transform(d);
                prop_assert!(v.values.iter().all(|&x| x >= 0.0));
                if !v.is_zero() {
                    prop_assert!((v.norm() - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn duplicating_tokens_is_scale_invariant(corpus in corpus_strategy()) {
            let docs: Vec<TokenStream> = corpus.into_iter().map(|t| TokenStream { tokens: t, source_length: 0 }).collect();
            let m = fit_vocabulary(&docs, 5).unwrap();
            for d in &docs {
                let mut doubled = d.clone();
                doubled.tokens.extend(d.tokens.clone());
                let (a, b) = (m.transform(d), m.transform(&doubled));
                prop_assert_eq!(&a.indices, &b.indices);
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn fitting_is_deterministic_and_order_free(corpus in corpus_strategy()) {
            let docs: Vec<TokenStream> = corpus.into_iter().map(|t| TokenStream { tokens: t, source_length: 0 }).collect();
            let m1 = fit_vocabulary(&docs, 4).unwrap();
            let mut rev = docs.clone();
            rev.reverse();
            let m2 = fit_vocabulary(&rev, 4).unwrap();
            prop_assert_eq!(m1.terms(), m2.terms());
            prop_assert_eq!(m1.idf(), m2.idf());
        }
    }
}
