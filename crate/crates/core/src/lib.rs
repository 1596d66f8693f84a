//! Review-bombing analysis for score-aggregator user reviews.
//!
//! The pipeline runs in stages, each of which can be driven on its own:
//!
//! 1. [`ingest`] parses raw review dumps into validated records and per-game aggregates.
//! 2. [`langid`] decides which user reviews are written in English.
//! 3. [`dataset`] selects review-bombing candidate titles by their critic/user score gap
//!    and labels individual reviews.
//! 4. [`textprep`] and [`vectorize`] turn review texts into TF-IDF document vectors.
//! 5. [`models`] trains Multinomial Naive Bayes and logistic regression classifiers,
//!    [`eval`] selects hyperparameters by stratified cross-validation and reports metrics.
//! 6. [`insights`] ranks vocabulary terms by their weight in the review-bombing class and
//!    exports wordcloud data.
//!
//! [`cli`] wires the stages together behind the `reviewbomb` binary.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod insights;
pub mod langid;
pub mod models;
pub mod score;
pub mod textprep;
pub mod vectorize;

pub use error::{Error, Result};
pub use score::Score;

/// Binary class label. `Rb` is listed first in every class ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Label {
    #[serde(rename = "RB")]
    Rb,
    #[serde(rename = "NonRB")]
    NonRb,
}

impl Label {
    /// Class order used by every model and report: `[RB, NonRB]`.
    pub const ORDER: [Label; 2] = [Label::Rb, Label::NonRb];

    pub fn index(self) -> usize {
        match self {
            Label::Rb => 0,
            Label::NonRb => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        Label::ORDER[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Rb => "RB",
            Label::NonRb => "NonRB",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
