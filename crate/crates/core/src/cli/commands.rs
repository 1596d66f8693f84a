use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stages::{
    build_dataset, detect_languages, predict_texts, selection_from_rows, train_and_evaluate, AggregateRow,
    LanguageFlags,
};
use super::workspace::{Manifest, Workspace};
use super::RunConfig;
use crate::dataset::{
    export_scatter_data, export_score_histograms, histograms_csv, scatter_csv, LabeledCorpus, StatsReport,
};
use crate::error::{Error, Result};
use crate::eval::{confusion_csv, EvalReport};
use crate::ingest::{parse_reviews_csv, read_records_jsonl, write_records_jsonl, ProvidedScores};
use crate::insights::{categorize_terms, export_wordcloud, rank_terms, CategoryShare};
use crate::models::{ModelArtifact, ModelKind};
use crate::textprep::{Stemming, TextPipeline};
use crate::vectorize::TfidfModel;

pub const RECORDS: &str = "records.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const PROVIDED_SCORES: &str = "provided_scores.json";
pub const LANGUAGE_FLAGS: &str = "language_flags.json";
pub const AGGREGATES: &str = "aggregates.json";
pub const CORPUS: &str = "corpus.jsonl";
pub const STATS_JSON: &str = "stats.json";
pub const STATS_CSV: &str = "stats.csv";
pub const TFIDF_MODEL: &str = "tfidf_model.json";
pub const PREPROCESS: &str = "preprocess.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const TERM_RANKING: &str = "term_ranking.json";
pub const CATEGORIES_JSON: &str = "categories.json";
pub const CATEGORIES_CSV: &str = "categories.csv";
pub const WORDCLOUD_JSON: &str = "wordcloud.json";
pub const WORDCLOUD_SVG: &str = "wordcloud.svg";
pub const SCATTER_JSON: &str = "scatter.json";
pub const SCATTER_CSV: &str = "scatter.csv";
pub const HISTOGRAMS_JSON: &str = "histograms.json";
pub const HISTOGRAMS_CSV: &str = "histograms.csv";
pub const CONFUSION_CSV: &str = "confusion_matrix.csv";
pub const PREDICTIONS: &str = "predictions.jsonl";

pub fn model_file(kind: ModelKind) -> String {
    format!("model_{kind}.json")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Review CSV from the config `input`.
    Ingest,
    /// Records file; `records.jsonl` in the output directory by default.
    BuildDataset { records: Option<PathBuf> },
    /// Corpus file; `corpus.jsonl` in the output directory by default.
    Train { corpus: Option<PathBuf> },
    RankTerms,
    ExportFigures,
    /// One review per line.
    Predict { input: PathBuf, model: ModelKind },
    Pipeline,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::BuildDataset { .. } => "build-dataset",
            Command::Train { .. } => "train",
            Command::RankTerms => "rank-terms",
            Command::ExportFigures => "export-figures",
            Command::Predict { .. } => "predict",
            Command::Pipeline => "pipeline",
        }
    }
}

/// Tokenization settings captured at training time so prediction matches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessArtifact {
    pub stemming: Stemming,
    /// Sorted.
    pub stopwords: Vec<String>,
}

impl PreprocessArtifact {
    pub fn from_pipeline(p: &TextPipeline) -> Self {
        let mut stopwords: Vec<String> = p.stopwords.iter().map(str::to_string).collect();
        stopwords.sort();
        Self {
            stemming: p.stemming,
            stopwords,
        }
    }

    pub fn pipeline(&self) -> TextPipeline {
        TextPipeline {
            stopwords: self.stopwords.iter().cloned().collect(),
            stemming: self.stemming,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_corpus: usize,
    /// `[RB, NonRB]`.
    pub class_counts: [usize; 2],
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub vocabulary_hash: String,
    pub models: BTreeMap<ModelKind, EvalReport>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn stats_csv(s: &StatsReport) -> Result<String> {
    let value = serde_json::to_value(s)?;
    let mut out = String::from("metric,value\n");
    let obj = value.as_object().ok_or_else(|| Error::Invariant("stats report is not an object".into()))?;
    for (k, v) in obj {
        match v {
            serde_json::Value::Object(years) => {
                for (year, n) in years {
                    let _ = writeln!(out, "{k}.{year},{n}");
                }
            }
            serde_json::Value::Null => {
                let _ = writeln!(out, "{k},");
            }
            other => {
                let _ = writeln!(out, "{k},{other}");
            }
        }
    }
    Ok(out)
}

fn categories_csv(rows: &[CategoryShare]) -> String {
    let mut out = String::from("category,n_terms,share,terms\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", csv_field(&r.category), r.terms.len(), r.share, csv_field(&r.terms.join(" ")));
    }
    out
}

fn read_json<T: serde::de::DeserializeOwned>(ws: &mut Workspace, path: &Path) -> Result<T> {
    let text = ws.read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))
}

fn require(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }
    Ok(())
}

fn input_csv(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("no input CSV given (use --input or the config \"input\" field)".into()))
}

fn stage_ingest(ws: &mut Workspace, cfg: &RunConfig, csv: &Path) -> Result<()> {
    let out = parse_reviews_csv(csv, &cfg.columns)?;
    ws.note_input(csv)?;
    let path = ws.path(RECORDS);
    write_records_jsonl(&path, &out.records)?;
    ws.register(RECORDS)?;
    ws.write_json(INGEST_REPORT, &out.report)?;
    ws.write_json(PROVIDED_SCORES, &out.provided)?;
    let r = &out.report;
    println!(
        "ingest: {} rows read, {} records, {} tbd skipped, {} unparseable skipped",
        r.rows_read, r.records_emitted, r.tbd_skipped, r.parse_skipped
    );
    Ok(())
}

fn stage_build(ws: &mut Workspace, cfg: &RunConfig, records_path: &Path) -> Result<()> {
    let provided_path = records_path.with_file_name(PROVIDED_SCORES);
    let records = read_records_jsonl(records_path)?;
    ws.note_input(records_path)?;
    let provided: BTreeMap<String, ProvidedScores> = read_json(ws, &provided_path)?;
    let profile = cfg.language_profile()?;
    let flags = detect_languages(&records, &profile, cfg);
    let out = build_dataset(&records, &flags.english, &provided, cfg)?;

    ws.write_json(LANGUAGE_FLAGS, &flags)?;
    ws.write_json(AGGREGATES, &out.aggregate_rows())?;
    let corpus_path = ws.path(CORPUS);
    out.corpus.write_jsonl(&corpus_path)?;
    ws.register(CORPUS)?;
    ws.write_json(STATS_JSON, &out.stats)?;
    ws.write_text(STATS_CSV, &stats_csv(&out.stats)?)?;
    let [rb, non] = out.corpus.class_counts();
    println!(
        "build-dataset: {} of {} user reviews English, {} candidate games, corpus {} RB / {} NonRB",
        flags.n_english, flags.n_user_reviews, out.stats.n_candidate_games, rb, non
    );
    Ok(())
}

fn stage_train(ws: &mut Workspace, cfg: &RunConfig, corpus_path: &Path) -> Result<()> {
    let corpus = LabeledCorpus::read_jsonl(corpus_path)?;
    ws.note_input(corpus_path)?;
    let pipeline = cfg.text_pipeline()?;
    let out = train_and_evaluate(&corpus, &pipeline, cfg)?;
    let hash = out.tfidf.vocabulary_hash();

    ws.write_text(TFIDF_MODEL, &(out.tfidf.to_json()? + "\n"))?;
    ws.write_json(PREPROCESS, &PreprocessArtifact::from_pipeline(&pipeline))?;
    for s in &out.searches {
        let artifact = ModelArtifact::new(s.model.clone(), hash.clone());
        ws.write_text(&model_file(s.model.kind()), &(artifact.to_json()? + "\n"))?;
    }
    let summary = EvalSummary {
        n_corpus: corpus.len(),
        class_counts: corpus.class_counts(),
        n_train: out.split.train.len(),
        n_test: out.split.test.len(),
        n_features: out.tfidf.n_features(),
        vocabulary_hash: hash,
        models: out.reports.iter().map(|r| (r.model_kind, r.clone())).collect(),
    };
    ws.write_json(EVAL_REPORT, &summary)?;
    println!("train: {} train / {} test, {} features", summary.n_train, summary.n_test, summary.n_features);
    for r in &out.reports {
        print!("{}", r.summary());
    }
    Ok(())
}

fn stage_rank(ws: &mut Workspace, cfg: &RunConfig) -> Result<()> {
    let tfidf = TfidfModel::from_json(&ws.read_to_string(&ws.path(TFIDF_MODEL))?)?;
    let artifact = ModelArtifact::from_json(&ws.read_to_string(&ws.path(&model_file(ModelKind::Mnb)))?)?;
    artifact.check_vocabulary(&tfidf.vocabulary_hash())?;
    let params = artifact
        .parameters
        .as_mnb()
        .ok_or_else(|| Error::Config("term ranking needs a multinomial Naive Bayes model".into()))?;
    let lexicon = cfg.concept_lexicon()?;
    let ranking = rank_terms(params, tfidf.terms(), &artifact.vocabulary_hash, cfg.rank_mode, cfg.top_k)?;
    let categories = categorize_terms(&ranking, &lexicon)?;
    let cloud = export_wordcloud(&ranking, &lexicon, cfg.top_k, &cfg.wordcloud)?;

    ws.write_json(TERM_RANKING, &ranking)?;
    ws.write_json(CATEGORIES_JSON, &categories)?;
    ws.write_text(CATEGORIES_CSV, &categories_csv(&categories))?;
    ws.write_json(WORDCLOUD_JSON, &cloud.weights)?;
    ws.write_text(WORDCLOUD_SVG, &cloud.to_svg())?;
    let top: Vec<&str> = ranking.entries.iter().take(10).map(|e| e.term.as_str()).collect();
    println!("rank-terms: top terms {}", top.join(", "));
    if cloud.omitted > 0 {
        println!("rank-terms: {} terms did not fit on the wordcloud canvas", cloud.omitted);
    }
    Ok(())
}

fn stage_figures(ws: &mut Workspace) -> Result<()> {
    let rows: Vec<AggregateRow> = read_json(ws, &ws.path(AGGREGATES))?;
    let records_path = ws.path(RECORDS);
    let records = read_records_jsonl(&records_path)?;
    ws.note_input(&records_path)?;
    let flags: LanguageFlags = read_json(ws, &ws.path(LANGUAGE_FLAGS))?;
    let eval: EvalSummary = read_json(ws, &ws.path(EVAL_REPORT))?;

    let selection = selection_from_rows(&rows);
    let aggregates: Vec<_> = rows.into_iter().map(|r| r.aggregate).collect();
    let scatter = export_scatter_data(&aggregates, &selection);
    let histograms = export_score_histograms(&records, &flags.english, &selection)?;
    let confusion = confusion_csv(eval.models.iter().map(|(k, r)| (k.as_str(), &r.holdout)));

    ws.write_json(SCATTER_JSON, &scatter)?;
    ws.write_text(SCATTER_CSV, &scatter_csv(&scatter)?)?;
    ws.write_json(HISTOGRAMS_JSON, &histograms)?;
    ws.write_text(HISTOGRAMS_CSV, &histograms_csv(&histograms)?)?;
    ws.write_text(CONFUSION_CSV, &confusion)?;
    println!("export-figures: {} scatter rows", scatter.len());
    Ok(())
}

fn stage_predict(ws: &mut Workspace, input: &Path, kind: ModelKind) -> Result<()> {
    let text = ws.read_to_string(input)?;
    let tfidf = TfidfModel::from_json(&ws.read_to_string(&ws.path(TFIDF_MODEL))?)?;
    let pre: PreprocessArtifact = read_json(ws, &ws.path(PREPROCESS))?;
    let artifact = ModelArtifact::from_json(&ws.read_to_string(&ws.path(&model_file(kind)))?)?;
    artifact.check_vocabulary(&tfidf.vocabulary_hash())?;

    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let texts: Vec<&str> = lines.iter().map(|(_, l)| *l).collect();
    let mut preds = predict_texts(&texts, &pre.pipeline(), &tfidf, &artifact.parameters);
    for (p, (line, _)) in preds.iter_mut().zip(&lines) {
        p.line = *line;
    }
    ws.write_jsonl(PREDICTIONS, &preds)?;
    for p in &preds {
        println!("{}\t{:.4}\t{}", p.label, p.rb_score, p.text);
    }
    Ok(())
}

/// Input files a command needs before anything is written.
fn required_inputs(command: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = &cfg.out_dir;
    Ok(match command {
        Command::Ingest | Command::Pipeline => vec![input_csv(cfg)?.to_path_buf()],
        Command::BuildDataset { records } => {
            let r = records.clone().unwrap_or_else(|| out.join(RECORDS));
            vec![r.with_file_name(PROVIDED_SCORES), r]
        }
        Command::Train { corpus } => vec![corpus.clone().unwrap_or_else(|| out.join(CORPUS))],
        Command::RankTerms => vec![out.join(TFIDF_MODEL), out.join(model_file(ModelKind::Mnb))],
        Command::ExportFigures => [AGGREGATES, RECORDS, LANGUAGE_FLAGS, EVAL_REPORT]
            .iter()
            .map(|n| out.join(n))
            .collect(),
        Command::Predict { input, model } => vec![
            input.clone(),
            out.join(TFIDF_MODEL),
            out.join(PREPROCESS),
            out.join(model_file(*model)),
        ],
    })
}

/// Runs one command against `cfg.out_dir` and writes its manifest. Inputs are checked
/// before the output directory is touched.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    require(&required_inputs(command, cfg)?)?;
    let mut ws = Workspace::open(&cfg.out_dir)?;
    match command {
        Command::Ingest => stage_ingest(&mut ws, cfg, input_csv(cfg)?)?,
        Command::BuildDataset { records } => {
            let path = records.clone().unwrap_or_else(|| ws.path(RECORDS));
            stage_build(&mut ws, cfg, &path)?
        }
        Command::Train { corpus } => {
            let path = corpus.clone().unwrap_or_else(|| ws.path(CORPUS));
            stage_train(&mut ws, cfg, &path)?
        }
        Command::RankTerms => stage_rank(&mut ws, cfg)?,
        Command::ExportFigures => stage_figures(&mut ws)?,
        Command::Predict { input, model } => stage_predict(&mut ws, input, *model)?,
        Command::Pipeline => {
            stage_ingest(&mut ws, cfg, input_csv(cfg)?)?;
            let records = ws.path(RECORDS);
            stage_build(&mut ws, cfg, &records)?;
            let corpus = ws.path(CORPUS);
            stage_train(&mut ws, cfg, &corpus)?;
            stage_rank(&mut ws, cfg)?;
            stage_figures(&mut ws)?;
        }
    }
    ws.finish(command.name(), cfg)
}
