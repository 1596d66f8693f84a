//! CSV ingestion of raw aggregator review dumps.
//!
//! A [`ColumnMapping`] names the physical CSV columns for each logical field. Rows whose
//! score or text is the `TBD` placeholder are dropped and counted; rows with unparseable
//! scores or reviewer kinds are dropped and counted as parse failures. If more than half of
//! the rows fail to parse the input is rejected as malformed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::Score;

/// Minimum number of ratings the aggregator needs before it publishes a score.
pub const MIN_RATINGS_FOR_SCORE: usize = 4;

const TBD: &str = "tbd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewerKind {
    User,
    Critic,
}

impl ReviewerKind {
    fn parse(raw: &str) -> Option<Self> {
        let v = raw.trim().to_lowercase();
        if v.contains("critic") || v.contains("professional") || v.contains("press") {
            Some(ReviewerKind::Critic)
        } else if v.contains("user") || v.contains("player") {
            Some(ReviewerKind::User)
        } else {
            None
        }
    }
}

/// One review row after ingestion.
///
/// Critic scores are stored on the 0–10 scale (the raw 0–100 value divided by 10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub game_id: String,
    pub game_title: String,
    pub release_year: Option<i32>,
    pub reviewer_kind: ReviewerKind,
    pub score: Score,
    pub review_text: String,
    pub review_date: Option<NaiveDate>,
}

/// Numeric scale of a dataset-provided aggregate score column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScale {
    /// 0–100, divided by 10 on ingestion.
    Hundred,
    /// Already 0–10.
    Ten,
}

/// Maps logical fields to physical CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    /// Stable game key. When unmapped, the id is derived from title and release year.
    pub game_id: Option<String>,
    pub title: String,
    pub release_year: Option<String>,
    pub reviewer_kind: String,
    pub score: String,
    pub text: String,
    pub review_date: Option<String>,
    /// Published per-game Metascore, if the dump carries one.
    pub metascore: Option<String>,
    pub metascore_scale: ScoreScale,
    /// Published per-game average user score, if the dump carries one.
    pub user_score: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            game_id: None,
            title: "Game Title".into(),
            release_year: Some("Year Released".into()),
            reviewer_kind: "Reviewer Type".into(),
            score: "Rating".into(),
            text: "Review".into(),
            review_date: Some("Review Date".into()),
            metascore: None,
            metascore_scale: ScoreScale::Hundred,
            user_score: None,
        }
    }
}

/// Row counts from one ingestion run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub records_emitted: usize,
    pub tbd_skipped: usize,
    pub parse_skipped: usize,
}

/// Per-game aggregate scores published in the dump itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvidedScores {
    pub metascore: Option<Score>,
    pub user_score: Option<Score>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    pub records: Vec<ReviewRecord>,
    pub report: IngestReport,
    /// Keyed by game id; only games with at least one provided value appear.
    pub provided: BTreeMap<String, ProvidedScores>,
}

struct ResolvedColumns {
    game_id: Option<usize>,
    title: usize,
    release_year: Option<usize>,
    reviewer_kind: usize,
    score: usize,
    text: usize,
    review_date: Option<usize>,
    metascore: Option<usize>,
    user_score: Option<usize>,
}

impl ResolvedColumns {
    fn resolve(headers: &csv::StringRecord, m: &ColumnMapping) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let mut missing = Vec::new();
        let mut required = |name: &str| match find(name) {
            Some(i) => i,
            None => {
                missing.push(name.to_string());
                usize::MAX
            }
        };
        let title = required(&m.title);
        let reviewer_kind = required(&m.reviewer_kind);
        let score = required(&m.score);
        let text = required(&m.text);
        let mut optional = |name: &Option<String>| match name {
            Some(n) => match find(n) {
                Some(i) => Some(i),
                None => {
                    missing.push(n.clone());
                    None
                }
            },
            None => None,
        };
        let cols = ResolvedColumns {
            game_id: optional(&m.game_id),
            title,
            release_year: optional(&m.release_year),
            reviewer_kind,
            score,
            text,
            review_date: optional(&m.review_date),
            metascore: optional(&m.metascore),
            user_score: optional(&m.user_score),
        };
        if missing.is_empty() {
            Ok(cols)
        } else {
            Err(Error::MissingColumns(missing))
        }
    }
}

fn is_tbd(v: &str) -> bool {
    v.trim().eq_ignore_ascii_case(TBD)
}

fn field(row: &csv::StringRecord, idx: usize) -> &str {
    row.get(idx).unwrap_or("")
}

fn parse_year(raw: &str) -> Option<i32> {
    // first run of exactly four digits in a plausible range
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 4 {
                let y: i32 = raw[start..i].parse().ok()?;
                if (1950..=2100).contains(&y) {
                    return Some(y);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    if raw.is_empty() || is_tbd(raw) {
        return None;
    }
    const FORMATS: [&str; 6] = ["%Y-%m-%d", "%b %d, %Y", "%B %d, %Y", "%d/%m/%Y", "%m/%d/%Y", "%Y/%m/%d"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
        .or_else(|| raw.get(..10).and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()))
}

fn parse_number(raw: &str) -> Option<f64> {
    let v: f64 = raw.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses a row score. User scores are 0–10, critic scores 0–100.
fn parse_score(raw: &str, kind: ReviewerKind) -> Option<Score> {
    let v = parse_number(raw)?;
    let score = match kind {
        ReviewerKind::User => Score::from_f64(v),
        ReviewerKind::Critic => Score::from_tenths(v.round() as i32),
    };
    score.in_range().then_some(score)
}

fn parse_aggregate(raw: &str, scale: ScoreScale) -> Option<Score> {
    if is_tbd(raw) {
        return None;
    }
    let v = parse_number(raw)?;
    let score = match scale {
        ScoreScale::Hundred => Score::from_tenths(v.round() as i32),
        ScoreScale::Ten => Score::from_f64(v),
    };
    score.in_range().then_some(score)
}

fn derive_game_id(title: &str, year: Option<i32>) -> String {
    match year {
        Some(y) => format!("{title} ({y})"),
        None => title.to_string(),
    }
}

/// Parses a review CSV file.
pub fn parse_reviews_csv(path: &Path, mapping: &ColumnMapping) -> Result<IngestOutput> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reviews_reader(BufReader::new(file), mapping)
}

/// Parses review CSV data from any reader. See [`parse_reviews_csv`].
pub fn parse_reviews_reader<R: std::io::Read>(reader: R, mapping: &ColumnMapping) -> Result<IngestOutput> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = ResolvedColumns::resolve(&headers, mapping)?;

    let mut out = IngestOutput::default();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(true) => {}
            Ok(false) => break,
            // a row that is not valid UTF-8 or CSV is a parse failure, not a fatal error
            Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                out.report.rows_read += 1;
                out.report.parse_skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        out.report.rows_read += 1;

        let title = field(&row, cols.title).trim();
        let release_year = cols.release_year.and_then(|i| parse_year(field(&row, i)));
        let game_id = match cols.game_id {
            Some(i) => field(&row, i).trim().to_string(),
            None => derive_game_id(title, release_year),
        };
        if game_id.is_empty() || title.is_empty() {
            out.report.parse_skipped += 1;
            continue;
        }

        let provided = ProvidedScores {
            metascore: cols.metascore.and_then(|i| parse_aggregate(field(&row, i), mapping.metascore_scale)),
            user_score: cols.user_score.and_then(|i| parse_aggregate(field(&row, i), ScoreScale::Ten)),
        };
        if provided.metascore.is_some() || provided.user_score.is_some() {
            let slot = out.provided.entry(game_id.clone()).or_default();
            slot.metascore = slot.metascore.or(provided.metascore);
            slot.user_score = slot.user_score.or(provided.user_score);
        }

        let raw_score = field(&row, cols.score);
        let raw_text = field(&row, cols.text);
        if is_tbd(raw_score) || is_tbd(raw_text) {
            out.report.tbd_skipped += 1;
            continue;
        }
        let Some(kind) = ReviewerKind::parse(field(&row, cols.reviewer_kind)) else {
            out.report.parse_skipped += 1;
            continue;
        };
        let Some(score) = parse_score(raw_score, kind) else {
            out.report.parse_skipped += 1;
            continue;
        };

        out.records.push(ReviewRecord {
            game_id,
            game_title: title.to_string(),
            release_year,
            reviewer_kind: kind,
            score,
            review_text: raw_text.trim().to_string(),
            review_date: cols.review_date.and_then(|i| parse_date(field(&row, i))),
        });
    }
    out.report.records_emitted = out.records.len();

    if out.report.rows_read > 0 && out.report.parse_skipped * 2 > out.report.rows_read {
        return Err(Error::MalformedInput(format!(
            "{} of {} rows could not be parsed",
            out.report.parse_skipped, out.report.rows_read
        )));
    }
    Ok(out)
}

/// Which source wins when both a recomputed and a dataset-provided aggregate exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    PreferDataset,
    PreferComputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateOptions {
    pub metascore_source: ScoreSource,
    pub user_score_source: ScoreSource,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            metascore_source: ScoreSource::PreferDataset,
            user_score_source: ScoreSource::PreferComputed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameAggregate {
    pub game_id: String,
    pub game_title: String,
    pub release_year: Option<i32>,
    pub metascore: Option<Score>,
    pub avg_user_score: Option<Score>,
    pub n_critic_reviews: usize,
    pub n_user_reviews: usize,
    pub n_english_user_reviews: usize,
}

impl GameAggregate {
    /// `metascore − avg_user_score` in tenths, when both are present.
    pub fn gap(&self) -> Option<i32> {
        Some(self.metascore?.tenths() - self.avg_user_score?.tenths())
    }
}

fn pick(source: ScoreSource, computed: Option<Score>, provided: Option<Score>) -> Option<Score> {
    match source {
        ScoreSource::PreferDataset => provided.or(computed),
        ScoreSource::PreferComputed => computed.or(provided),
    }
}

/// Builds one aggregate per distinct game id, ordered by game id.
///
/// `english`, when given, is aligned with `records` and marks user reviews detected as
/// English; without it every English count is zero.
pub fn aggregate_games(
    records: &[ReviewRecord],
    english: Option<&[bool]>,
    provided: &BTreeMap<String, ProvidedScores>,
    opts: AggregateOptions,
) -> Result<Vec<GameAggregate>> {
    if let Some(mask) = english {
        if mask.len() != records.len() {
            return Err(Error::LengthMismatch {
                what: "english mask vs records",
                left: mask.len(),
                right: records.len(),
            });
        }
    }

    #[derive(Default)]
    struct Acc<'a> {
        title: &'a str,
        year: Option<i32>,
        critic: Vec<Score>,
        user: Vec<Score>,
        english: usize,
    }

    let mut games: BTreeMap<&str, Acc> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let acc = games.entry(r.game_id.as_str()).or_insert_with(|| Acc {
            title: &r.game_title,
            year: r.release_year,
            ..Default::default()
        });
        acc.year = acc.year.or(r.release_year);
        match r.reviewer_kind {
            ReviewerKind::Critic => acc.critic.push(r.score),
            ReviewerKind::User => {
                acc.user.push(r.score);
                if english.is_some_and(|m| m[i]) {
                    acc.english += 1;
                }
            }
        }
    }

    let published = |scores: &[Score]| {
        if scores.len() >= MIN_RATINGS_FOR_SCORE {
            Score::mean(scores.iter().copied())
        } else {
            None
        }
    };

    Ok(games
        .into_iter()
        .map(|(id, acc)| {
            let given = provided.get(id).copied().unwrap_or_default();
            GameAggregate {
                game_id: id.to_string(),
                game_title: acc.title.to_string(),
                release_year: acc.year,
                metascore: pick(opts.metascore_source, published(&acc.critic), given.metascore),
                avg_user_score: pick(opts.user_score_source, published(&acc.user), given.user_score),
                n_critic_reviews: acc.critic.len(),
                n_user_reviews: acc.user.len(),
                n_english_user_reviews: acc.english,
            }
        })
        .collect())
}

/// Writes records as JSON Lines, one record per line.
pub fn write_records_jsonl(path: &Path, records: &[ReviewRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records_jsonl(path: &Path) -> Result<Vec<ReviewRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
