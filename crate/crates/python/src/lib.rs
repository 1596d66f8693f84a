//! Python bindings: text preparation, language detection, TF-IDF, classifiers, evaluation
//! helpers, term ranking and the command pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use reviewbomb_core::cli::stages::{predict_texts, rb_probability};
use reviewbomb_core::cli::{self as core_cli, PreprocessArtifact, RunConfig};
use reviewbomb_core::dataset::label_for_score;
use reviewbomb_core::eval::{compute_metrics as core_metrics, kfold_indices as core_kfold, stratified_split as core_split, SplitSpec};
use reviewbomb_core::insights::{rank_terms, RankMode};
use reviewbomb_core::langid::{detect_english as core_detect, DetectorConfig, LanguageDecision, LanguageProfile};
use reviewbomb_core::models::{self, Classifier, Hyperparams, ModelArtifact, ModelKind, TrainOptions, TrainedModel};
use reviewbomb_core::textprep::{normalize_text as core_normalize, Stemming, TextPipeline, TokenStream};
use reviewbomb_core::vectorize::{fit_vocabulary, TfidfModel};
use reviewbomb_core::{Error, Label, Score};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::MissingFile(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        Error::Invariant(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_label(s: &str) -> PyResult<Label> {
    match s {
        "RB" => Ok(Label::Rb),
        "NonRB" => Ok(Label::NonRb),
        other => Err(PyValueError::new_err(format!("unknown label {other:?} (expected \"RB\" or \"NonRB\")"))),
    }
}

fn parse_labels(labels: &[String]) -> PyResult<Vec<Label>> {
    labels.iter().map(|l| parse_label(l)).collect()
}

/// Converts a serializable value into plain Python objects through JSON.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn pipeline(stemming: bool) -> TextPipeline {
    TextPipeline {
        stemming: if stemming { Stemming::SuffixStrip } else { Stemming::None },
        ..TextPipeline::default()
    }
}

#[pyfunction]
fn normalize_text(text: &str) -> String {
    core_normalize(text)
}

/// Normalized, stopword-filtered tokens.
#[pyfunction]
#[pyo3(signature = (text, stemming = false))]
fn tokenize(text: &str, stemming: bool) -> Vec<String> {
    pipeline(stemming).process(text).tokens
}

/// `(decision, confidence)` with decision one of "english", "non_english", "undetermined".
#[pyfunction]
fn detect_english(text: &str) -> (String, f64) {
    let d = core_detect(text, &LanguageProfile::english(), &DetectorConfig::default());
    let decision = match d.decision {
        LanguageDecision::English => "english",
        LanguageDecision::NonEnglish => "non_english",
        LanguageDecision::Undetermined => "undetermined",
    };
    (decision.to_string(), d.confidence)
}

/// "RB" when `score` (0–10) is at or below `threshold`.
#[pyfunction]
#[pyo3(signature = (score, threshold = 1.0))]
fn label_score(score: f64, threshold: f64) -> String {
    label_for_score(Score::from_f64(score), Score::from_f64(threshold)).to_string()
}

/// `(train_indices, test_indices)`.
#[pyfunction]
#[pyo3(signature = (labels, test_fraction = 0.2, seed = 42))]
fn stratified_split(labels: Vec<String>, test_fraction: f64, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let y = parse_labels(&labels)?;
    let s = core_split(&y, &SplitSpec { test_fraction, seed, stratified: true }).map_err(to_py)?;
    Ok((s.train, s.test))
}

#[pyfunction]
#[pyo3(signature = (labels, k = 5, seed = 42))]
fn kfold_indices(labels: Vec<String>, k: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
    core_kfold(&parse_labels(&labels)?, k, seed).map_err(to_py)
}

/// Accuracy, per-class and macro precision/recall/F1 and confusion matrices as a dict.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, y_true: Vec<String>, y_pred: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let m = core_metrics(&parse_labels(&y_true)?, &parse_labels(&y_pred)?).map_err(to_py)?;
    to_python(py, &m)
}

/// TF-IDF vectorizer with a capped vocabulary.
#[pyclass(module = "reviewbomb")]
struct Vectorizer {
    model: TfidfModel,
    pipeline: TextPipeline,
}

#[pymethods]
impl Vectorizer {
    #[staticmethod]
    #[pyo3(signature = (texts, max_features = 1000, stemming = false))]
    fn fit(texts: Vec<String>, max_features: usize, stemming: bool) -> PyResult<Self> {
        let pipeline = pipeline(stemming);
        let docs: Vec<TokenStream> = texts.iter().map(|t| pipeline.process(t)).collect();
        let model = fit_vocabulary(&docs, max_features).map_err(to_py)?;
        Ok(Self { model, pipeline })
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.model.terms().to_vec()
    }

    #[getter]
    fn idf(&self) -> Vec<f64> {
        self.model.idf().to_vec()
    }

    #[getter]
    fn vocabulary_hash(&self) -> String {
        self.model.vocabulary_hash()
    }

    /// Sparse row as `{column: weight}`.
    fn transform(&self, text: &str) -> Vec<(usize, f64)> {
        self.model.transform(&self.pipeline.process(text)).iter().collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.model.to_json().map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.model.n_features()
    }
}

/// A trained classifier tied to the vectorizer it was fitted with.
#[pyclass(module = "reviewbomb")]
struct Model {
    model: TrainedModel,
    tfidf: TfidfModel,
    pipeline: TextPipeline,
}

fn train_with(vectorizer: &Vectorizer, texts: &[String], labels: &[String], hp: Hyperparams) -> PyResult<Model> {
    let y = parse_labels(labels)?;
    let docs: Vec<TokenStream> = texts.iter().map(|t| vectorizer.pipeline.process(t)).collect();
    let x = vectorizer.model.transform_all(&docs);
    let model = models::train(&x, &y, hp, &TrainOptions::default()).map_err(to_py)?;
    Ok(Model {
        model,
        tfidf: vectorizer.model.clone(),
        pipeline: vectorizer.pipeline.clone(),
    })
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (vectorizer, texts, labels, alpha = 0.01))]
    fn train_mnb(vectorizer: &Vectorizer, texts: Vec<String>, labels: Vec<String>, alpha: f64) -> PyResult<Self> {
        train_with(vectorizer, &texts, &labels, Hyperparams::Mnb { alpha })
    }

    #[staticmethod]
    #[pyo3(signature = (vectorizer, texts, labels, lam = 0.01))]
    fn train_logreg(vectorizer: &Vectorizer, texts: Vec<String>, labels: Vec<String>, lam: f64) -> PyResult<Self> {
        train_with(vectorizer, &texts, &labels, Hyperparams::Logreg { lambda: lam })
    }

    /// Loads `tfidf_model.json`, `preprocess.json` and `model_<kind>.json` from a run directory.
    #[staticmethod]
    #[pyo3(signature = (out_dir, kind = "mnb"))]
    fn load(out_dir: PathBuf, kind: &str) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(to_py)?;
        let tfidf = TfidfModel::load(&out_dir.join(core_cli::TFIDF_MODEL)).map_err(to_py)?;
        let pre_path = out_dir.join(core_cli::PREPROCESS);
        let pre_text = std::fs::read_to_string(&pre_path).map_err(|e| PyFileNotFoundError::new_err(format!("{}: {e}", pre_path.display())))?;
        let pre: PreprocessArtifact = serde_json::from_str(&pre_text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let artifact = ModelArtifact::load(&out_dir.join(core_cli::model_file(kind))).map_err(to_py)?;
        artifact.check_vocabulary(&tfidf.vocabulary_hash()).map_err(to_py)?;
        Ok(Self {
            model: artifact.parameters,
            tfidf,
            pipeline: pre.pipeline(),
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.model.kind().to_string()
    }

    /// `(label, P(RB))`.
    fn predict(&self, text: &str) -> (String, f64) {
        let p = self.model.predict(&self.tfidf.transform(&self.pipeline.process(text)));
        (p.label.to_string(), rb_probability(&self.model, p.class_scores))
    }

    fn predict_many<'py>(&self, py: Python<'py>, texts: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        to_python(py, &predict_texts(&refs, &self.pipeline, &self.tfidf, &self.model))
    }

    /// Top terms of an MNB model; `mode` is "conditional" or "distinctive".
    #[pyo3(signature = (mode = "conditional", top_k = 50))]
    fn rank_terms<'py>(&self, py: Python<'py>, mode: &str, top_k: usize) -> PyResult<Bound<'py, PyAny>> {
        let mode: RankMode = mode.parse().map_err(to_py)?;
        let params = self
            .model
            .as_mnb()
            .ok_or_else(|| PyValueError::new_err("term ranking needs a multinomial Naive Bayes model"))?;
        let hash = self.tfidf.vocabulary_hash();
        let ranking = rank_terms(params, self.tfidf.terms(), &hash, mode, top_k).map_err(to_py)?;
        to_python(py, &ranking.entries)
    }

    fn to_json(&self) -> PyResult<String> {
        ModelArtifact::new(self.model.clone(), self.tfidf.vocabulary_hash()).to_json().map_err(to_py)
    }
}

/// Runs a pipeline command ("ingest", "build-dataset", "train", "rank-terms",
/// "export-figures", "predict" or "pipeline") and returns its manifest as a dict.
///
/// `config` is a JSON string in the run-configuration format; `input` has the same meaning
/// as the command-line `--input` flag.
#[pyfunction]
#[pyo3(signature = (command, config = None, input = None, out_dir = None, model = "mnb"))]
fn run<'py>(
    py: Python<'py>,
    command: &str,
    config: Option<&str>,
    input: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    model: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match config {
        Some(json) => RunConfig::from_json(json).map_err(to_py)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    let cmd = match command {
        "ingest" | "pipeline" => {
            if input.is_some() {
                cfg.input = input;
            }
            if command == "ingest" {
                core_cli::Command::Ingest
            } else {
                core_cli::Command::Pipeline
            }
        }
        "build-dataset" => core_cli::Command::BuildDataset { records: input },
        "train" => core_cli::Command::Train { corpus: input },
        "rank-terms" => core_cli::Command::RankTerms,
        "export-figures" => core_cli::Command::ExportFigures,
        "predict" => core_cli::Command::Predict {
            input: input.ok_or_else(|| PyValueError::new_err("predict needs an input text file"))?,
            model: model.parse().map_err(to_py)?,
        },
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let manifest = core_cli::run(&cmd, &cfg).map_err(to_py)?;
    to_python(py, &manifest)
}

/// Default run configuration as a JSON string.
#[pyfunction]
fn default_config() -> PyResult<String> {
    RunConfig::default().to_json().map_err(to_py)
}

#[pymodule]
pub fn reviewbomb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_text, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(detect_english, m)?)?;
    m.add_function(wrap_pyfunction!(label_score, m)?)?;
    m.add_function(wrap_pyfunction!(stratified_split, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_indices, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_class::<Vectorizer>()?;
    m.add_class::<Model>()?;
    Ok(())
}
