//! Candidate selection, review labeling, corpus statistics and figure data.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GameAggregate, ReviewRecord, ReviewerKind};
use crate::{Label, Score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateCriteria {
    pub min_english_reviews: usize,
    /// Minimum `metascore − avg_user_score`.
    pub gap_threshold: Score,
    pub require_both_scores: bool,
}

impl Default for CandidateCriteria {
    fn default() -> Self {
        Self {
            min_english_reviews: 5,
            gap_threshold: Score::from_tenths(40),
            require_both_scores: true,
        }
    }
}

impl CandidateCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.gap_threshold.tenths() <= 0 {
            return Err(Error::Config(format!("gap_threshold must be positive, got {}", self.gap_threshold)));
        }
        if self.min_english_reviews == 0 {
            return Err(Error::Config("min_english_reviews must be at least 1".into()));
        }
        if !self.require_both_scores {
            return Err(Error::Config(
                "require_both_scores = false is not supported: the score gap needs both scores".into(),
            ));
        }
        Ok(())
    }

    pub fn is_candidate(&self, g: &GameAggregate) -> bool {
        g.n_english_user_reviews >= self.min_english_reviews
            && g.gap().is_some_and(|gap| gap >= self.gap_threshold.tenths())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Users rate the game above critics.
    UserPreferred,
    CriticPreferred,
    RbCandidate,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::UserPreferred => "user_preferred",
            Zone::CriticPreferred => "critic_preferred",
            Zone::RbCandidate => "rb_candidate",
        }
    }
}

/// Zone per game with both scores, plus the candidate set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSelection {
    pub zones: BTreeMap<String, Zone>,
    pub candidates: BTreeSet<String>,
}

impl CandidateSelection {
    pub fn is_candidate(&self, game_id: &str) -> bool {
        self.candidates.contains(game_id)
    }

    pub fn zone(&self, game_id: &str) -> Option<Zone> {
        self.zones.get(game_id).copied()
    }
}

pub fn select_candidates(aggregates: &[GameAggregate], criteria: &CandidateCriteria) -> CandidateSelection {
    let mut sel = CandidateSelection::default();
    for g in aggregates {
        let (Some(meta), Some(user)) = (g.metascore, g.avg_user_score) else {
            continue;
        };
        let zone = if criteria.is_candidate(g) {
            sel.candidates.insert(g.game_id.clone());
            Zone::RbCandidate
        } else if user > meta {
            Zone::UserPreferred
        } else {
            Zone::CriticPreferred
        };
        sel.zones.insert(g.game_id.clone(), zone);
    }
    sel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionMode {
    /// Both classes come from candidate games: RB at or below the label threshold, NonRB above.
    #[default]
    WithinCandidates,
    /// RB from candidate games; NonRB from low-scored reviews of non-candidate games.
    #[serde(alias = "controls")]
    CandidatesVsNegativeControls,
}

impl std::str::FromStr for ConstructionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within_candidates" => Ok(Self::WithinCandidates),
            "controls" | "candidates_vs_negative_controls" => Ok(Self::CandidatesVsNegativeControls),
            other => Err(Error::InvalidArgument(format!(
                "unknown construction mode {other:?} (expected within_candidates or controls)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub label_threshold: Score,
    pub construction_mode: ConstructionMode,
    /// Upper score bound for NonRB control reviews in the controls mode.
    pub control_threshold: Score,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            label_threshold: Score::from_tenths(10),
            construction_mode: ConstructionMode::WithinCandidates,
            control_threshold: Score::from_tenths(30),
        }
    }
}

pub fn label_for_score(score: Score, threshold: Score) -> Label {
    if score <= threshold {
        Label::Rb
    } else {
        Label::NonRb
    }
}

pub fn label_review(record: &ReviewRecord, cfg: &CorpusConfig) -> Label {
    label_for_score(record.score, cfg.label_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub game_id: String,
    pub score: Score,
    pub label: Label,
    pub review_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub label_rule_threshold: Score,
    pub construction_mode: ConstructionMode,
    pub entries: Vec<CorpusEntry>,
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.review_text.as_str()).collect()
    }

    /// `[n_RB, n_NonRB]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0, 0];
        for e in &self.entries {
            c[e.label.index()] += 1;
        }
        c
    }

    /// First line is a header object with the corpus settings; each following line is one entry.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = serde_json::json!({
            "label_rule_threshold": self.label_rule_threshold,
            "construction_mode": self.construction_mode,
            "n_entries": self.entries.len(),
        });
        let mut write = |line: String| writeln!(w, "{line}").map_err(|e| Error::io(path, e));
        write(header.to_string())?;
        for e in &self.entries {
            write(serde_json::to_string(e)?)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            label_rule_threshold: Score,
            construction_mode: ConstructionMode,
            n_entries: usize,
        }
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::MalformedInput(format!("{}: empty corpus file", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&first)?;
        let mut entries = Vec::with_capacity(header.n_entries);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if !line.trim().is_empty() {
                entries.push(serde_json::from_str(&line)?);
            }
        }
        if entries.len() != header.n_entries {
            return Err(Error::MalformedInput(format!(
                "{}: header announces {} entries, found {}",
                path.display(),
                header.n_entries,
                entries.len()
            )));
        }
        Ok(Self {
            label_rule_threshold: header.label_rule_threshold,
            construction_mode: header.construction_mode,
            entries,
        })
    }
}

fn check_mask(records: &[ReviewRecord], english: &[bool]) -> Result<()> {
    if records.len() != english.len() {
        return Err(Error::LengthMismatch {
            what: "records vs english mask",
            left: records.len(),
            right: english.len(),
        });
    }
    Ok(())
}

fn english_user_reviews<'a>(
    records: &'a [ReviewRecord],
    english: &'a [bool],
) -> impl Iterator<Item = &'a ReviewRecord> + 'a {
    records
        .iter()
        .zip(english)
        .filter(|(r, en)| **en && r.reviewer_kind == ReviewerKind::User)
        .map(|(r, _)| r)
}

/// Labeled corpus from English user reviews with non-blank text, in record order.
pub fn build_corpus(
    records: &[ReviewRecord],
    english: &[bool],
    selection: &CandidateSelection,
    cfg: &CorpusConfig,
) -> Result<LabeledCorpus> {
    check_mask(records, english)?;
    let mut entries = Vec::new();
    for r in english_user_reviews(records, english) {
        if r.review_text.trim().is_empty() {
            continue;
        }
        let candidate = selection.is_candidate(&r.game_id);
        let label = match cfg.construction_mode {
            ConstructionMode::WithinCandidates if candidate => Some(label_review(r, cfg)),
            ConstructionMode::WithinCandidates => None,
            ConstructionMode::CandidatesVsNegativeControls => {
                if candidate && r.score <= cfg.label_threshold {
                    Some(Label::Rb)
                } else if !candidate && r.score <= cfg.control_threshold {
                    Some(Label::NonRb)
                } else {
                    None
                }
            }
        };
        if let Some(label) = label {
            entries.push(CorpusEntry {
                game_id: r.game_id.clone(),
                score: r.score,
                label,
                review_text: r.review_text.clone(),
            });
        }
    }
    Ok(LabeledCorpus {
        label_rule_threshold: cfg.label_threshold,
        construction_mode: cfg.construction_mode,
        entries,
    })
}

/// Counts over English user reviews. Non-candidate games are games with at least one English
/// user review that are not candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_games: usize,
    pub n_user_reviews: usize,
    pub n_english_user_reviews: usize,
    pub n_candidate_games: usize,
    pub n_candidate_reviews: usize,
    pub n_non_candidate_games: usize,
    pub n_non_candidate_reviews: usize,
    pub mean_reviews_per_candidate_game: Option<f64>,
    pub mean_reviews_per_non_candidate_game: Option<f64>,
    /// Share of non-candidate review scores strictly below 3.0.
    pub non_candidate_share_below_3: Option<f64>,
    /// Candidate games per release year; `"unknown"` when the year is missing.
    pub candidates_per_year: BTreeMap<String, usize>,
}

pub fn corpus_stats(
    records: &[ReviewRecord],
    english: &[bool],
    aggregates: &[GameAggregate],
    selection: &CandidateSelection,
) -> Result<StatsReport> {
    check_mask(records, english)?;
    let mut per_game: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut cand_reviews, mut non_reviews, mut non_low) = (0usize, 0usize, 0usize);
    for r in english_user_reviews(records, english) {
        *per_game.entry(&r.game_id).or_default() += 1;
        if selection.is_candidate(&r.game_id) {
            cand_reviews += 1;
        } else {
            non_reviews += 1;
            if r.score < Score::from_tenths(30) {
                non_low += 1;
            }
        }
    }
    let n_candidate_games = selection.candidates.len();
    let n_non_candidate_games = per_game.keys().filter(|g| !selection.is_candidate(g)).count();
    let mean = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);

    let mut candidates_per_year = BTreeMap::new();
    for g in aggregates.iter().filter(|g| selection.is_candidate(&g.game_id)) {
        let key = g.release_year.map_or_else(|| "unknown".to_string(), |y| y.to_string());
        *candidates_per_year.entry(key).or_default() += 1;
    }
    let n_user_reviews = records.iter().filter(|r| r.reviewer_kind == ReviewerKind::User).count();

    Ok(StatsReport {
        n_games: aggregates.len(),
        n_user_reviews,
        n_english_user_reviews: cand_reviews + non_reviews,
        n_candidate_games,
        n_candidate_reviews: cand_reviews,
        n_non_candidate_games,
        n_non_candidate_reviews: non_reviews,
        mean_reviews_per_candidate_game: mean(cand_reviews, n_candidate_games),
        mean_reviews_per_non_candidate_game: mean(non_reviews, n_non_candidate_games),
        non_candidate_share_below_3: mean(non_low, non_reviews),
        candidates_per_year,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub game_id: String,
    pub game_title: String,
    pub release_year: Option<i32>,
    pub metascore: Score,
    pub avg_user_score: Score,
    /// `metascore − avg_user_score`.
    pub gap: Score,
    pub zone: Zone,
}

/// One row per game that has both scores, in aggregate order.
pub fn export_scatter_data(aggregates: &[GameAggregate], selection: &CandidateSelection) -> Vec<ScatterRow> {
    aggregates
        .iter()
        .filter_map(|g| {
            Some(ScatterRow {
                game_id: g.game_id.clone(),
                game_title: g.game_title.clone(),
                release_year: g.release_year,
                metascore: g.metascore?,
                avg_user_score: g.avg_user_score?,
                gap: Score::from_tenths(g.gap()?),
                zone: selection.zone(&g.game_id)?,
            })
        })
        .collect()
}

pub const N_BINS: usize = 11;

/// Counts per integer bin `floor(score)`, bins 0 through 10.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub population: String,
    pub bins: [usize; N_BINS],
    pub total: usize,
}

impl ScoreHistogram {
    pub fn from_scores(population: &str, scores: impl IntoIterator<Item = Score>) -> Self {
        let mut bins = [0; N_BINS];
        let mut total = 0;
        for s in scores {
            bins[s.bin()] += 1;
            total += 1;
        }
        Self {
            population: population.to_string(),
            bins,
            total,
        }
    }

    /// Most populated bin; the lowest bin wins ties. `None` for an empty histogram.
    pub fn mode(&self) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        let max = *self.bins.iter().max()?;
        self.bins.iter().position(|&c| c == max)
    }
}

/// English user review scores of candidate games and of non-candidate games.
pub fn export_score_histograms(
    records: &[ReviewRecord],
    english: &[bool],
    selection: &CandidateSelection,
) -> Result<[ScoreHistogram; 2]> {
    check_mask(records, english)?;
    let (cand, non): (Vec<_>, Vec<_>) =
        english_user_reviews(records, english).partition(|r| selection.is_candidate(&r.game_id));
    Ok([
        ScoreHistogram::from_scores("candidate", cand.iter().map(|r| r.score)),
        ScoreHistogram::from_scores("non_candidate", non.iter().map(|r| r.score)),
    ])
}

fn csv_to_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invariant(format!("csv buffer flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

/// Columns: game_id, game_title, release_year, metascore, avg_user_score, gap, zone.
pub fn scatter_csv(rows: &[ScatterRow]) -> Result<String> {
    csv_to_string(|w| {
        w.write_record(["game_id", "game_title", "release_year", "metascore", "avg_user_score", "gap", "zone"])?;
        for r in rows {
            w.write_record([
                r.game_id.clone(),
                r.game_title.clone(),
                r.release_year.map(|y| y.to_string()).unwrap_or_default(),
                r.metascore.to_string(),
                r.avg_user_score.to_string(),
                r.gap.to_string(),
                r.zone.as_str().to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Columns: population, bin, count.
pub fn histograms_csv(histograms: &[ScoreHistogram]) -> Result<String> {
    csv_to_string(|w| {
        w.write_record(["population", "bin", "count"])?;
        for h in histograms {
            for (bin, count) in h.bins.iter().enumerate() {
                w.write_record([h.population.clone(), bin.to_string(), count.to_string()])?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agg(id: &str, meta: Option<i32>, user: Option<i32>, english: usize) -> GameAggregate {
        GameAggregate {
            game_id: id.into(),
            game_title: id.into(),
            release_year: Some(2019),
            metascore: meta.map(Score),
            avg_user_score: user.map(Score),
            n_critic_reviews: 10,
            n_user_reviews: english,
            n_english_user_reviews: english,
        }
    }

    fn review(game: &str, score: i32, text: &str) -> ReviewRecord {
        ReviewRecord {
            game_id: game.into(),
            game_title: game.into(),
            release_year: Some(2019),
            reviewer_kind: ReviewerKind::User,
            score: Score(score),
            review_text: text.into(),
            review_date: None,
        }
    }

    #[test]
    fn gap_of_exactly_four_is_a_candidate() {
        let sel = select_candidates(&[agg("a", Some(70), Some(30), 10)], &CandidateCriteria::default());
        assert!(sel.is_candidate("a"));
        assert_eq!(sel.zone("a"), Some(Zone::RbCandidate));
    }

    #[test]
    fn gap_of_three_is_not() {
        let sel = select_candidates(&[agg("a", Some(40), Some(10), 10)], &CandidateCriteria::default());
        assert!(!sel.is_candidate("a"));
        assert_eq!(sel.zone("a"), Some(Zone::CriticPreferred));
    }

    #[test]
    fn large_gap() {
        let g = agg("a", Some(79), Some(9), 10);
        assert_eq!(g.gap(), Some(70));
        assert!(select_candidates(&[g], &CandidateCriteria::default()).is_candidate("a"));
    }

    #[test]
    fn too_few_english_reviews() {
        let sel = select_candidates(&[agg("a", Some(90), Some(10), 4)], &CandidateCriteria::default());
        assert!(!sel.is_candidate("a"));
        assert_eq!(sel.zone("a"), Some(Zone::CriticPreferred));
    }

    #[test]
    fn missing_scores_have_no_zone() {
        let sel = select_candidates(
            &[agg("a", None, Some(10), 50), agg("b", Some(50), Some(80), 50)],
            &CandidateCriteria::default(),
        );
        assert_eq!(sel.zone("a"), None);
        assert_eq!(sel.zone("b"), Some(Zone::UserPreferred));
        assert!(sel.candidates.is_empty());
    }

    #[test]
    fn criteria_validation() {
        assert!(CandidateCriteria::default().validate().is_ok());
        let bad = [
            CandidateCriteria { gap_threshold: Score(0), ..Default::default() },
            CandidateCriteria { min_english_reviews: 0, ..Default::default() },
            CandidateCriteria { require_both_scores: false, ..Default::default() },
        ];
        assert!(bad.iter().all(|c| c.validate().is_err()));
    }

    #[test]
    fn label_boundaries() {
        let t = CorpusConfig::default().label_threshold;
        assert_eq!(label_for_score(Score(10), t), Label::Rb);
        assert_eq!(label_for_score(Score(11), t), Label::NonRb);
        assert_eq!(label_for_score(Score(0), t), Label::Rb);
    }

    fn fixture() -> (Vec<ReviewRecord>, Vec<bool>, CandidateSelection) {
        let records = vec![
            review("cand", 0, "terrible company greed"),
            review("cand", 10, "refund please"),
            review("cand", 80, "actually quite fun"),
            review("cand", 20, "   "),
            review("other", 20, "buggy mess honestly"),
            review("other", 90, "great game"),
            review("cand", 0, "texto en otro idioma"),
        ];
        let english = vec![true, true, true, true, true, true, false];
        let sel = CandidateSelection {
            zones: [("cand".to_string(), Zone::RbCandidate), ("other".to_string(), Zone::CriticPreferred)].into(),
            candidates: ["cand".to_string()].into(),
        };
        (records, english, sel)
    }

    #[test]
    fn within_candidates_corpus() {
        let (records, english, sel) = fixture();
        let c = build_corpus(&records, &english, &sel, &CorpusConfig::default()).unwrap();
        let got: Vec<(i32, Label)> = c.entries.iter().map(|e| (e.score.0, e.label)).collect();
        assert_eq!(got, vec![(0, Label::Rb), (10, Label::Rb), (80, Label::NonRb)]);
        assert!(c.entries.iter().all(|e| e.game_id == "cand"));
    }

    #[test]
    fn controls_corpus() {
        let (records, english, sel) = fixture();
        let cfg = CorpusConfig {
            construction_mode: ConstructionMode::CandidatesVsNegativeControls,
            ..Default::default()
        };
        let c = build_corpus(&records, &english, &sel, &cfg).unwrap();
        let got: Vec<(&str, Label)> = c.entries.iter().map(|e| (e.game_id.as_str(), e.label)).collect();
        assert_eq!(got, vec![("cand", Label::Rb), ("cand", Label::Rb), ("other", Label::NonRb)]);
        assert_eq!(c.class_counts(), [2, 1]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("controls".parse::<ConstructionMode>().unwrap(), ConstructionMode::CandidatesVsNegativeControls);
        assert_eq!("within_candidates".parse::<ConstructionMode>().unwrap(), ConstructionMode::WithinCandidates);
        assert!("both".parse::<ConstructionMode>().is_err());
        let cfg: CorpusConfig = serde_json::from_str(r#"{"construction_mode":"controls"}"#).unwrap();
        assert_eq!(cfg.construction_mode, ConstructionMode::CandidatesVsNegativeControls);
    }

    #[test]
    fn two_game_means() {
        let mut records: Vec<ReviewRecord> = (0..4).map(|_| review("cand", 5, "x")).collect();
        records.extend((0..2).map(|_| review("other", 25, "y")));
        let english = vec![true; 6];
        let aggs = vec![agg("cand", Some(80), Some(5), 4), agg("other", Some(70), Some(60), 2)];
        let sel = select_candidates(&aggs, &CandidateCriteria { min_english_reviews: 4, ..Default::default() });
        let s = corpus_stats(&records, &english, &aggs, &sel).unwrap();
        assert_eq!(s.mean_reviews_per_candidate_game, Some(4.0));
        assert_eq!(s.mean_reviews_per_non_candidate_game, Some(2.0));
        assert_eq!(s.n_candidate_reviews, 4);
        assert_eq!(s.non_candidate_share_below_3, Some(1.0));
        assert_eq!(s.candidates_per_year, [("2019".to_string(), 1)].into());
    }

    #[test]
    fn histogram_bins() {
        let h = ScoreHistogram::from_scores("x", [Score(0), Score(0), Score(100)]);
        assert_eq!(h.bins[0], 2);
        assert_eq!(h.bins[10], 1);
        assert_eq!(h.bins.iter().sum::<usize>(), 3);
        assert_eq!(h.mode(), Some(0));
        assert_eq!(ScoreHistogram::from_scores("e", []).mode(), None);
    }

    #[test]
    fn scatter_rows() {
        let aggs = vec![agg("a", Some(79), Some(9), 10), agg("b", None, Some(50), 10)];
        let sel = select_candidates(&aggs, &CandidateCriteria::default());
        let rows = export_scatter_data(&aggs, &sel);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].zone, Zone::RbCandidate);
        assert_eq!(rows[0].gap, Score(70));
        assert!(export_scatter_data(&[], &sel).is_empty());
        let csv = scatter_csv(&rows).unwrap();
        assert_eq!(csv, "game_id,game_title,release_year,metascore,avg_user_score,gap,zone\na,a,2019,7.9,0.9,7.0,rb_candidate\n");
    }

    #[test]
    fn corpus_jsonl_roundtrip() {
        let (records, english, sel) = fixture();
        let c = build_corpus(&records, &english, &sel, &CorpusConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("corpus.jsonl");
        c.write_jsonl(&p).unwrap();
        assert_eq!(LabeledCorpus::read_jsonl(&p).unwrap(), c);
    }

    fn arb_aggs() -> impl Strategy<Value = Vec<GameAggregate>> {
        prop::collection::vec(
            (prop::option::of(0..=100i32), prop::option::of(0..=100i32), 0usize..20),
            0..40,
        )
        .prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (m, u, n))| agg(&format!("g{i:03}"), m, u, n))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn raising_gap_never_adds_candidates(aggs in arb_aggs(), lo in 1..60i32, extra in 0..40i32) {
            let low = select_candidates(&aggs, &CandidateCriteria { gap_threshold: Score(lo), ..Default::default() });
            let high = select_candidates(&aggs, &CandidateCriteria { gap_threshold: Score(lo + extra), ..Default::default() });
            prop_assert!(high.candidates.is_subset(&low.candidates));
        }

        #[test]
        fn zones_cover_games_with_both_scores(aggs in arb_aggs()) {
            let sel = select_candidates(&aggs, &CandidateCriteria::default());
            for g in &aggs {
                prop_assert_eq!(sel.zone(&g.game_id).is_some(), g.metascore.is_some() && g.avg_user_score.is_some());
            }
        }

        #[test]
        fn histogram_total(scores in prop::collection::vec(0..=100i32, 0..100)) {
            let h = ScoreHistogram::from_scores("p", scores.iter().map(|&s| Score(s)));
            prop_assert_eq!(h.bins.iter().sum::<usize>(), scores.len());
        }
    }
}
