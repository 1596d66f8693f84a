//! In-memory pipeline stages. The command layer wraps these with artifact IO.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::dataset::{
    build_corpus, corpus_stats, select_candidates, CandidateSelection, LabeledCorpus, StatsReport, Zone,
};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, grid_search, stratified_split, EvalReport, GridSearchResult, Split};
use crate::ingest::{aggregate_games, GameAggregate, ProvidedScores, ReviewRecord, ReviewerKind};
use crate::langid::{detect_all, LanguageDecision, LanguageProfile};
use crate::models::{Classifier, ModelKind, TrainedModel};
use crate::textprep::{TextPipeline, TokenStream};
use crate::vectorize::{fit_vocabulary, TfidfModel};
use crate::Label;

/// English flags aligned with the ingested records. Critic reviews are never flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageFlags {
    pub n_records: usize,
    pub n_user_reviews: usize,
    pub n_english: usize,
    /// User reviews too short or without letters to decide; counted as not English.
    pub n_undetermined: usize,
    pub english: Vec<bool>,
}

pub fn detect_languages(records: &[ReviewRecord], profile: &LanguageProfile, cfg: &RunConfig) -> LanguageFlags {
    let user: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].reviewer_kind == ReviewerKind::User)
        .collect();
    let texts: Vec<&str> = user.iter().map(|&i| records[i].review_text.as_str()).collect();
    let detections = detect_all(&texts, profile, &cfg.language);
    let mut english = vec![false; records.len()];
    let mut n_undetermined = 0;
    for (&i, d) in user.iter().zip(&detections) {
        english[i] = d.is_english();
        if d.decision == LanguageDecision::Undetermined {
            n_undetermined += 1;
        }
    }
    LanguageFlags {
        n_records: records.len(),
        n_user_reviews: user.len(),
        n_english: english.iter().filter(|e| **e).count(),
        n_undetermined,
        english,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(flatten)]
    pub aggregate: GameAggregate,
    /// Absent for games lacking either score.
    pub zone: Option<Zone>,
    pub candidate: bool,
}

#[derive(Debug, Clone)]
pub struct DatasetOutput {
    pub aggregates: Vec<GameAggregate>,
    pub selection: CandidateSelection,
    pub corpus: LabeledCorpus,
    pub stats: StatsReport,
}

impl DatasetOutput {
    pub fn aggregate_rows(&self) -> Vec<AggregateRow> {
        self.aggregates
            .iter()
            .map(|g| AggregateRow {
                aggregate: g.clone(),
                zone: self.selection.zone(&g.game_id),
                candidate: self.selection.is_candidate(&g.game_id),
            })
            .collect()
    }
}

pub fn selection_from_rows(rows: &[AggregateRow]) -> CandidateSelection {
    let mut sel = CandidateSelection::default();
    for r in rows {
        if let Some(z) = r.zone {
            sel.zones.insert(r.aggregate.game_id.clone(), z);
        }
        if r.candidate {
            sel.candidates.insert(r.aggregate.game_id.clone());
        }
    }
    sel
}

pub fn build_dataset(
    records: &[ReviewRecord],
    english: &[bool],
    provided: &BTreeMap<String, ProvidedScores>,
    cfg: &RunConfig,
) -> Result<DatasetOutput> {
    cfg.criteria.validate()?;
    let aggregates = aggregate_games(records, Some(english), provided, cfg.aggregation)?;
    let selection = select_candidates(&aggregates, &cfg.criteria);
    let corpus = build_corpus(records, english, &selection, &cfg.corpus)?;
    let stats = corpus_stats(records, english, &aggregates, &selection)?;
    Ok(DatasetOutput {
        aggregates,
        selection,
        corpus,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub split: Split,
    pub tfidf: TfidfModel,
    /// Per model family, MNB first.
    pub searches: Vec<GridSearchResult>,
    pub reports: Vec<EvalReport>,
}

impl TrainOutput {
    pub fn report(&self, kind: ModelKind) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.model_kind == kind)
    }

    pub fn model(&self, kind: ModelKind) -> Option<&TrainedModel> {
        self.searches.iter().map(|s| &s.model).find(|m| m.kind() == kind)
    }
}

pub fn tokenize_all(texts: &[&str], pipeline: &TextPipeline) -> Vec<TokenStream> {
    texts.par_iter().map(|t| pipeline.process(t)).collect()
}

/// Stratified split, TF-IDF fitted on the training part, grid search with k-fold CV per
/// model family, refit and holdout evaluation.
pub fn train_and_evaluate(corpus: &LabeledCorpus, pipeline: &TextPipeline, cfg: &RunConfig) -> Result<TrainOutput> {
    let labels = corpus.labels();
    let counts = corpus.class_counts();
    if counts.contains(&0) {
        return Err(Error::SingleClass(format!(
            "corpus has {} RB and {} NonRB entries",
            counts[0], counts[1]
        )));
    }
    let split = stratified_split(&labels, &cfg.split_spec())?;
    let tokens = tokenize_all(&corpus.texts(), pipeline);
    let pick = |idx: &[usize]| -> (Vec<TokenStream>, Vec<Label>) {
        idx.iter().map(|&i| (tokens[i].clone(), labels[i])).unzip()
    };
    let (train_docs, y_train) = pick(&split.train);
    let (test_docs, y_test) = pick(&split.test);
    let tfidf = fit_vocabulary(&train_docs, cfg.max_features)?;
    let x_train = tfidf.transform_all(&train_docs);
    let x_test = tfidf.transform_all(&test_docs);

    let mut searches = Vec::new();
    let mut reports = Vec::new();
    for (kind, grid) in [(ModelKind::Mnb, cfg.mnb_grid()), (ModelKind::Logreg, cfg.logreg_grid())] {
        if grid.is_empty() {
            continue;
        }
        log::info!("grid search {kind}: {} settings x {} folds", grid.len(), cfg.cv_folds);
        let search = grid_search(&x_train, &y_train, &grid, cfg.cv_folds, cfg.seed, &cfg.training, None)?;
        let holdout = compute_metrics(&y_test, &search.model.predict_all(&x_test))?;
        reports.push(EvalReport {
            model_kind: kind,
            chosen_hyperparameters: search.best,
            n_train: split.train.len(),
            n_test: split.test.len(),
            cv_folds: cfg.cv_folds,
            cv_mean_scores: search.points.clone(),
            cv_best_accuracy: search.best_cv_accuracy(),
            holdout,
            seed: cfg.seed,
        });
        searches.push(search);
    }
    Ok(TrainOutput {
        split,
        tfidf,
        searches,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewPrediction {
    pub line: usize,
    pub label: Label,
    /// Posterior probability of RB.
    pub rb_score: f64,
    pub text: String,
}

/// `P(RB)` from a prediction's class scores.
pub fn rb_probability(model: &TrainedModel, class_scores: [f64; 2]) -> f64 {
    match model {
        // softmax over the two log joints
        TrainedModel::Mnb(_) => 1.0 / (1.0 + (class_scores[1] - class_scores[0]).exp()),
        TrainedModel::Logreg(_) => class_scores[0],
    }
}

pub fn predict_texts(
    texts: &[&str],
    pipeline: &TextPipeline,
    tfidf: &TfidfModel,
    model: &TrainedModel,
) -> Vec<ReviewPrediction> {
    let tokens = tokenize_all(texts, pipeline);
    tokens
        .par_iter()
        .zip(texts)
        .enumerate()
        .map(|(i, (doc, text))| {
            let p = model.predict(&tfidf.transform(doc));
            ReviewPrediction {
                line: i + 1,
                label: p.label,
                rb_score: rb_probability(model, p.class_scores),
                text: text.to_string(),
            }
        })
        .collect()
}
