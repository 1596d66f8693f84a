//! Stratified splitting, k-fold cross-validation, grid search and classification metrics.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, Classifier, Hyperparams, TrainOptions, TrainedModel};
use crate::vectorize::DocTermMatrix;
use crate::Label;

const SPLIT_STREAM: u128 = 1;
const FOLD_STREAM: u128 = 2;

/// PCG generator for one purpose-specific stream of the root seed.
pub fn rng_for(seed: u64, stream: u128) -> Pcg64 {
    Pcg64::new(u128::from(seed), stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Ascending.
    pub train: Vec<usize>,
    /// Ascending.
    pub test: Vec<usize>,
}

fn class_indices(y: &[Label]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, l) in y.iter().enumerate() {
        out[l.index()].push(i);
    }
    out
}

fn round_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

/// Train/test split. With stratification each class contributes
/// `round(class_size × test_fraction)` test samples, chosen by a seeded shuffle within the
/// class.
pub fn stratified_split(y: &[Label], spec: &SplitSpec) -> Result<Split> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must be in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let mut rng = rng_for(spec.seed, SPLIT_STREAM);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let classes = class_indices(y);
        for (c, members) in classes.iter().enumerate() {
            if members.len() < 2 {
                return Err(Error::ClassTooSmall {
                    class: Label::from_index(c).to_string(),
                    size: members.len(),
                    required: 2,
                });
            }
        }
        classes.into()
    } else {
        vec![(0..y.len()).collect()]
    };

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut members in groups {
        members.shuffle(&mut rng);
        let n_test = round_count(members.len(), spec.test_fraction);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified k-fold partition of `0..y.len()`. Each fold is ascending.
pub fn kfold_indices(y: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = rng_for(seed, FOLD_STREAM);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (c, mut members) in class_indices(y).into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: Label::from_index(c).to_string(),
                size: members.len(),
                required: k,
            });
        }
        members.shuffle(&mut rng);
        for (i, idx) in members.iter().enumerate() {
            folds[(offset + i) % k].push(*idx);
        }
        // continue where this class stopped so total fold sizes stay within one
        offset = (offset + members.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Reported to a grid-search observer before each fold is trained.
#[derive(Debug)]
pub struct FoldEvent<'a> {
    pub setting_index: usize,
    pub fold: usize,
    /// Row indices into the grid-search input.
    pub train_indices: &'a [usize],
    pub validation_indices: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub hyperparameters: Hyperparams,
    pub fold_accuracies: Vec<f64>,
    /// Absent when a fold failed to train.
    pub mean_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub best: Hyperparams,
    pub points: Vec<GridPointResult>,
    /// Refit on the whole grid-search input with the best setting.
    pub model: TrainedModel,
}

impl GridSearchResult {
    pub fn best_cv_accuracy(&self) -> f64 {
        self.points[self.best_index].mean_accuracy.unwrap_or(f64::NAN)
    }
}

fn accuracy(truth: &[Label], pred: &[Label]) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Grid search by mean k-fold validation accuracy. Ties go to the earliest grid entry. A
/// setting whose training fails on any fold is recorded with its error and skipped.
pub fn grid_search(
    x: &DocTermMatrix,
    y: &[Label],
    grid: &[Hyperparams],
    k: usize,
    seed: u64,
    opts: &TrainOptions,
    observer: Option<&(dyn Fn(&FoldEvent) + Sync)>,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: x.n_rows(),
            right: y.len(),
        });
    }
    let folds = kfold_indices(y, k, seed)?;
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = (0..k)
        .map(|f| {
            let train = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect::<Vec<_>>();
            (train, &folds[f])
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|s| (0..k).map(move |f| (s, f))).collect();
    let outcomes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(s, f)| {
            let (train_idx, val_idx) = (&splits[f].0, splits[f].1);
            if let Some(obs) = observer {
                obs(&FoldEvent {
                    setting_index: s,
                    fold: f,
                    train_indices: train_idx,
                    validation_indices: val_idx,
                });
            }
            let y_train: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
            let y_val: Vec<Label> = val_idx.iter().map(|&i| y[i]).collect();
            let model = models::train(&x.select(train_idx), &y_train, grid[s], opts)?;
            Ok(accuracy(&y_val, &model.predict_all(&x.select(val_idx))))
        })
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    for (s, hp) in grid.iter().enumerate() {
        let mut fold_accuracies = Vec::with_capacity(k);
        let mut error = None;
        for r in &outcomes[s * k..(s + 1) * k] {
            match r {
                Ok(a) => fold_accuracies.push(*a),
                Err(e) if error.is_none() => error = Some(e.to_string()),
                Err(_) => {}
            }
        }
        let mean_accuracy = error
            .is_none()
            .then(|| fold_accuracies.iter().sum::<f64>() / k as f64);
        if let Some(e) = &error {
            log::warn!("grid point {hp} failed: {e}");
        }
        points.push(GridPointResult {
            hyperparameters: *hp,
            fold_accuracies,
            mean_accuracy,
            error,
        });
    }

    let mut best_index = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(m) = p.mean_accuracy {
            if best_index.is_none_or(|b: usize| m > points[b].mean_accuracy.unwrap()) {
                best_index = Some(i);
            }
        }
    }
    let best_index = best_index.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "every grid setting failed; first error: {}",
            points[0].error.as_deref().unwrap_or("unknown")
        ))
    })?;
    let best = grid[best_index];
    let model = models::train(x, y, best, opts)?;
    Ok(GridSearchResult {
        best_index,
        best,
        points,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Binary classification metrics in `[RB, NonRB]` class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 2],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// `confusion_counts[true][predicted]`.
    pub confusion_counts: [[usize; 2]; 2],
    /// Counts divided by their row sum; an empty row stays zero.
    pub confusion_normalized: [[f64; 2]; 2],
    /// Quantities that had a zero denominator and were set to 0.
    pub zero_division: Vec<String>,
}

fn ratio(num: usize, den: usize, name: String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(y_true: &[Label], y_pred: &[Label]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            what: "true vs predicted labels",
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("cannot compute metrics on zero samples".into()));
    }
    let mut cm = [[0usize; 2]; 2];
    for (t, p) in y_true.iter().zip(y_pred) {
        cm[t.index()][p.index()] += 1;
    }
    let mut flags = Vec::new();
    let per_class = [0, 1].map(|c| {
        let label = Label::from_index(c);
        let tp = cm[c][c];
        let predicted = cm[0][c] + cm[1][c];
        let support = cm[c][0] + cm[c][1];
        let precision = ratio(tp, predicted, format!("precision[{label}]"), &mut flags);
        let recall = ratio(tp, support, format!("recall[{label}]"), &mut flags);
        let f1 = if precision + recall == 0.0 {
            flags.push(format!("f1[{label}]"));
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            label,
            precision,
            recall,
            f1,
            support,
        }
    });
    let confusion_normalized = cm.map(|row| {
        let total = row[0] + row[1];
        if total == 0 {
            [0.0, 0.0]
        } else {
            row.map(|v| v as f64 / total as f64)
        }
    });
    Ok(Metrics {
        accuracy: (cm[0][0] + cm[1][1]) as f64 / y_true.len() as f64,
        macro_precision: (per_class[0].precision + per_class[1].precision) / 2.0,
        macro_recall: (per_class[0].recall + per_class[1].recall) / 2.0,
        macro_f1: (per_class[0].f1 + per_class[1].f1) / 2.0,
        per_class,
        confusion_counts: cm,
        confusion_normalized,
        zero_division: flags,
    })
}

/// Holdout evaluation of one model family after grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: models::ModelKind,
    pub chosen_hyperparameters: Hyperparams,
    pub n_train: usize,
    pub n_test: usize,
    pub cv_folds: usize,
    pub cv_mean_scores: Vec<GridPointResult>,
    pub cv_best_accuracy: f64,
    pub holdout: Metrics,
    pub seed: u64,
}

impl EvalReport {
    /// Human-readable summary with metrics rounded to two decimals.
    pub fn summary(&self) -> String {
        let m = &self.holdout;
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.model_kind, self.chosen_hyperparameters);
        let _ = writeln!(s, "  cv accuracy       {:.2}", self.cv_best_accuracy);
        let _ = writeln!(s, "  holdout accuracy  {:.2}", m.accuracy);
        let _ = writeln!(
            s,
            "  macro P/R/F1      {:.2} / {:.2} / {:.2}",
            m.macro_precision, m.macro_recall, m.macro_f1
        );
        let cn = &m.confusion_normalized;
        let _ = writeln!(s, "  confusion (rows = true)  RB: [{:.2} {:.2}]  NonRB: [{:.2} {:.2}]", cn[0][0], cn[0][1], cn[1][0], cn[1][1]);
        s
    }
}

/// Confusion matrices as CSV, one block of four rows per model, with counts and
/// row-normalized rates.
pub fn confusion_csv<'a>(models: impl IntoIterator<Item = (&'a str, &'a Metrics)>) -> String {
    let mut s = String::from("model,true_label,predicted_label,count,rate\n");
    for (name, m) in models {
        for t in 0..2 {
            for p in 0..2 {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    name,
                    Label::from_index(t),
                    Label::from_index(p),
                    m.confusion_counts[t][p],
                    m.confusion_normalized[t][p]
                );
            }
        }
    }
    s
}
