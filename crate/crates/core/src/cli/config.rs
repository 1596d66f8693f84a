use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{CandidateCriteria, CorpusConfig};
use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::ingest::{AggregateOptions, ColumnMapping};
use crate::insights::{ConceptLexicon, RankMode, WordcloudConfig};
use crate::langid::{DetectorConfig, LanguageProfile};
use crate::models::{Hyperparams, TrainOptions};
use crate::textprep::{Stemming, Stopwords, TextPipeline};
use crate::vectorize::DEFAULT_MAX_FEATURES;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextOptions {
    /// Newline-separated stopword file; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    pub stemming: Stemming,
}

/// Every setting of a run. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Review CSV.
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub columns: ColumnMapping,
    pub aggregation: AggregateOptions,
    pub language: DetectorConfig,
    /// Language profile JSON; the bundled English profile when absent.
    pub language_profile: Option<PathBuf>,
    pub criteria: CandidateCriteria,
    pub corpus: CorpusConfig,
    pub text: TextOptions,
    pub max_features: usize,
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub mnb_alphas: Vec<f64>,
    pub logreg_lambdas: Vec<f64>,
    pub training: TrainOptions,
    pub rank_mode: RankMode,
    pub top_k: usize,
    /// Concept lexicon JSON; the bundled five-category lexicon when absent.
    pub lexicon: Option<PathBuf>,
    pub wordcloud: WordcloudConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
            columns: ColumnMapping::default(),
            aggregation: AggregateOptions::default(),
            language: DetectorConfig::default(),
            language_profile: None,
            criteria: CandidateCriteria::default(),
            corpus: CorpusConfig::default(),
            text: TextOptions::default(),
            max_features: DEFAULT_MAX_FEATURES,
            test_fraction: 0.2,
            cv_folds: 5,
            mnb_alphas: vec![1.0, 0.5, 0.1, 0.01, 0.001],
            logreg_lambdas: vec![1.0, 0.1, 0.01],
            training: TrainOptions::default(),
            rank_mode: RankMode::Conditional,
            top_k: 50,
            lexicon: None,
            wordcloud: WordcloudConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks value ranges and that every optional resource path exists.
    pub fn validate(&self) -> Result<()> {
        self.criteria.validate()?;
        if self.max_features == 0 {
            return Err(Error::Config("max_features must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(format!("cv_folds must be at least 2, got {}", self.cv_folds)));
        }
        if self.mnb_alphas.is_empty() && self.logreg_lambdas.is_empty() {
            return Err(Error::Config("both model grids are empty".into()));
        }
        for path in [&self.text.stopwords, &self.lexicon, &self.language_profile].into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::MissingFile(path.clone()));
            }
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            seed: self.seed,
            stratified: true,
        }
    }

    pub fn mnb_grid(&self) -> Vec<Hyperparams> {
        self.mnb_alphas.iter().map(|&alpha| Hyperparams::Mnb { alpha }).collect()
    }

    pub fn logreg_grid(&self) -> Vec<Hyperparams> {
        self.logreg_lambdas.iter().map(|&lambda| Hyperparams::Logreg { lambda }).collect()
    }

    pub fn text_pipeline(&self) -> Result<TextPipeline> {
        let stopwords = match &self.text.stopwords {
            Some(p) => Stopwords::load(p)?,
            None => Stopwords::english(),
        };
        Ok(TextPipeline {
            stopwords,
            stemming: self.text.stemming,
        })
    }

    pub fn language_profile(&self) -> Result<LanguageProfile> {
        match &self.language_profile {
            Some(p) => LanguageProfile::load(p),
            None => Ok(LanguageProfile::english()),
        }
    }

    pub fn concept_lexicon(&self) -> Result<ConceptLexicon> {
        match &self.lexicon {
            Some(p) => ConceptLexicon::load(p),
            None => Ok(ConceptLexicon::default()),
        }
    }
}
