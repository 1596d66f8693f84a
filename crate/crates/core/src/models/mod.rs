//! Classifiers over TF-IDF document vectors.
//!
//! [`Hyperparams`] selects and configures a model; [`train`] fits it; the resulting
//! [`TrainedModel`] implements [`Classifier`]. Additional model families plug in by adding a
//! variant to both enums.

pub mod logreg;
pub mod mnb;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorize::{DocTermMatrix, SparseVec};
use crate::Label;

pub use logreg::{logistic_gradient, logistic_loss, predict_logreg, sigmoid, train_logreg, LogRegConfig, LogRegParams, LogRegPrediction};
pub use mnb::{predict_mnb, train_mnb, MnbParams, MnbPrediction};

pub const MODEL_ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mnb,
    Logreg,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::Logreg => "logreg",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "mnb" => Ok(ModelKind::Mnb),
            "logreg" => Ok(ModelKind::Logreg),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown model {other:?} (expected mnb or logreg)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hyperparams {
    Mnb { alpha: f64 },
    Logreg { lambda: f64 },
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Mnb { .. } => ModelKind::Mnb,
            Hyperparams::Logreg { .. } => ModelKind::Logreg,
        }
    }
}

impl std::fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hyperparams::Mnb { alpha } => write!(f, "alpha={alpha}"),
            Hyperparams::Logreg { lambda } => write!(f, "lambda={lambda}"),
        }
    }
}

/// Settings shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    pub logreg_tolerance: f64,
    pub logreg_max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let d = LogRegConfig::default();
        Self {
            logreg_tolerance: d.tolerance,
            logreg_max_iterations: d.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Per-class scores in `[RB, NonRB]` order: log joints for MNB, probabilities for
    /// logistic regression.
    pub class_scores: [f64; 2],
}

pub trait Classifier: Send + Sync {
    fn predict(&self, x: &SparseVec) -> Prediction;

    fn predict_all(&self, x: &DocTermMatrix) -> Vec<Label> {
        x.rows.iter().map(|r| self.predict(r).label).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainedModel {
    Mnb(MnbParams),
    Logreg(LogRegParams),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Mnb(_) => ModelKind::Mnb,
            TrainedModel::Logreg(_) => ModelKind::Logreg,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        match self {
            TrainedModel::Mnb(p) => Hyperparams::Mnb { alpha: p.alpha },
            TrainedModel::Logreg(p) => Hyperparams::Logreg { lambda: p.lambda },
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Mnb(p) => p.n_features(),
            TrainedModel::Logreg(p) => p.weights.len(),
        }
    }

    pub fn as_mnb(&self) -> Option<&MnbParams> {
        match self {
            TrainedModel::Mnb(p) => Some(p),
            TrainedModel::Logreg(_) => None,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict(&self, x: &SparseVec) -> Prediction {
        match self {
            TrainedModel::Mnb(p) => {
                let r = predict_mnb(p, x);
                Prediction { label: r.label, class_scores: r.log_joint }
            }
            TrainedModel::Logreg(p) => {
                let r = predict_logreg(p, x);
                Prediction {
                    label: r.label,
                    class_scores: [r.probability, 1.0 - r.probability],
                }
            }
        }
    }
}

/// Fits the model described by `hp`.
pub fn train(x: &DocTermMatrix, y: &[Label], hp: Hyperparams, opts: &TrainOptions) -> Result<TrainedModel> {
    match hp {
        Hyperparams::Mnb { alpha } => train_mnb(x, y, alpha).map(TrainedModel::Mnb),
        Hyperparams::Logreg { lambda } => train_logreg(
            x,
            y,
            &LogRegConfig {
                lambda,
                tolerance: opts.logreg_tolerance,
                max_iterations: opts.logreg_max_iterations,
            },
        )
        .map(TrainedModel::Logreg),
    }
}

/// Serialized model, bound to the vocabulary it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub model_kind: ModelKind,
    pub hyperparameters: Hyperparams,
    pub parameters: TrainedModel,
    pub vocabulary_hash: String,
}

impl ModelArtifact {
    pub fn new(model: TrainedModel, vocabulary_hash: String) -> Self {
        Self {
            version: MODEL_ARTIFACT_VERSION,
            model_kind: model.kind(),
            hyperparameters: model.hyperparams(),
            parameters: model,
            vocabulary_hash,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let a: ModelArtifact = serde_json::from_str(json)?;
        if a.version != MODEL_ARTIFACT_VERSION {
            return Err(Error::ArtifactVersion {
                found: a.version,
                expected: MODEL_ARTIFACT_VERSION,
            });
        }
        if a.parameters.kind() != a.model_kind || a.hyperparameters.kind() != a.model_kind {
            return Err(Error::Config(format!(
                "model artifact declares {} but carries {} parameters",
                a.model_kind,
                a.parameters.kind()
            )));
        }
        Ok(a)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    /// Fails unless `vocabulary_hash` matches the hash recorded at training time.
    pub fn check_vocabulary(&self, vocabulary_hash: &str) -> Result<()> {
        if self.vocabulary_hash == vocabulary_hash {
            Ok(())
        } else {
            Err(Error::VocabularyMismatch {
                expected: self.vocabulary_hash.clone(),
                actual: vocabulary_hash.to_string(),
            })
        }
    }
}
