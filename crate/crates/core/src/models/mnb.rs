//! Multinomial Naive Bayes over fractional (TF-IDF) pseudo-counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorize::{DocTermMatrix, SparseVec};
use crate::Label;

/// Trained MNB parameters. Index 0 of every per-class array is `RB`, index 1 is `NonRB`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbParams {
    pub alpha: f64,
    pub class_order: [Label; 2],
    pub class_count: [usize; 2],
    pub class_log_prior: [f64; 2],
    /// `feature_log_prob[c][t] = ln θ_{t,c}`.
    pub feature_log_prob: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnbPrediction {
    pub label: Label,
    /// Per-class log joint score `ln P(c) + Σ_t x_t ln θ_{t,c}`.
    pub log_joint: [f64; 2],
}

pub(crate) fn check_training_inputs(x: &DocTermMatrix, y: &[Label]) -> Result<[usize; 2]> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: x.n_rows(),
            right: y.len(),
        });
    }
    let mut counts = [0usize; 2];
    for l in y {
        counts[l.index()] += 1;
    }
    if let Some(only) = counts.iter().position(|&c| c == y.len()) {
        return Err(Error::SingleClass(Label::from_index(only).to_string()));
    }
    if y.is_empty() {
        return Err(Error::SingleClass("none".into()));
    }
    for (r, row) in x.rows.iter().enumerate() {
        for (c, v) in row.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(counts)
}

/// Fits θ_{t,c} = (W_{t,c} + α) / (W_c + α·V) and empirical class priors.
pub fn train_mnb(x: &DocTermMatrix, y: &[Label], alpha: f64) -> Result<MnbParams> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let counts = check_training_inputs(x, y)?;
    let v = x.n_cols;
    if v == 0 {
        return Err(Error::InvalidArgument("feature matrix has no columns".into()));
    }

    let mut weight = [vec![0.0; v], vec![0.0; v]];
    for (row, label) in x.rows.iter().zip(y) {
        let acc = &mut weight[label.index()];
        for (t, w) in row.iter() {
            if w < 0.0 {
                return Err(Error::InvalidArgument("multinomial NB needs non-negative features".into()));
            }
            acc[t] += w;
        }
    }

    let n = y.len() as f64;
    let feature_log_prob = weight.map(|w_c| {
        let total: f64 = w_c.iter().sum();
        let denom = (total + alpha * v as f64).ln();
        w_c.iter().map(|w| (w + alpha).ln() - denom).collect::<Vec<_>>()
    });
    Ok(MnbParams {
        alpha,
        class_order: Label::ORDER,
        class_count: counts,
        class_log_prior: counts.map(|c| (c as f64 / n).ln()),
        feature_log_prob,
    })
}

impl MnbParams {
    pub fn n_features(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    /// θ_{t,c} for class `label`.
    pub fn theta(&self, label: Label) -> Vec<f64> {
        self.feature_log_prob[label.index()].iter().map(|l| l.exp()).collect()
    }
}

/// Scores both classes; an exact tie goes to `RB`.
pub fn predict_mnb(params: &MnbParams, x: &SparseVec) -> MnbPrediction {
    assert!(
        x.max_index().is_none_or(|m| m < params.n_features()),
        "feature index out of range for this model"
    );
    let log_joint = [0, 1].map(|c| params.class_log_prior[c] + x.dot(&params.feature_log_prob[c]));
    let label = if log_joint[0] >= log_joint[1] { Label::Rb } else { Label::NonRb };
    MnbPrediction { label, log_joint }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label::{NonRb, Rb};

    fn matrix(rows: &[&[f64]]) -> DocTermMatrix {
        DocTermMatrix::new(rows.iter().map(|r| SparseVec::from_dense(r)).collect(), rows[0].len()).unwrap()
    }

    #[test]
    fn four_document_fixture() {
        // RB: [2,1,0], [1,0,0]; NonRB: [0,1,3], [0,0,1]; alpha 1
        // W_RB = [3,1,0], total 4 → θ = [4,2,1]/7
        // W_NonRB = [0,1,4], total 5 → θ = [1,2,5]/8
        let x = matrix(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 3.0], &[0.0, 0.0, 1.0]]);
        let y = [Rb, Rb, NonRb, NonRb];
        let p = train_mnb(&x, &y, 1.0).unwrap();
        let rb = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        let non = [1.0 / 8.0, 2.0 / 8.0, 5.0 / 8.0];
        for t in 0..3 {
            assert!((p.theta(Rb)[t] - rb[t]).abs() < 1e-12);
            assert!((p.theta(NonRb)[t] - non[t]).abs() < 1e-12);
        }
        assert!((p.class_log_prior[0] - 0.5f64.ln()).abs() < 1e-15);
        assert!((p.class_log_prior[1] - 0.5f64.ln()).abs() < 1e-15);

        // posterior for [1,1,1]: RB joint 0.5·(4·2·1)/7³, NonRB 0.5·(1·2·5)/8³
        let pred = predict_mnb(&p, &SparseVec::from_dense(&[1.0, 1.0, 1.0]));
        let rb_joint = (0.5 * 8.0 / 343.0f64).ln();
        let non_joint = (0.5 * 10.0 / 512.0f64).ln();
        assert!((pred.log_joint[0] - rb_joint).abs() < 1e-12);
        assert!((pred.log_joint[1] - non_joint).abs() < 1e-12);
        assert_eq!(pred.label, Rb);
    }

    #[test]
    fn empty_class_weights_give_uniform_theta() {
        let x = matrix(&[&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 2.0, 0.0]]);
        let p = train_mnb(&x, &[Rb, NonRb], 0.01).unwrap();
        for th in p.theta(Rb) {
            assert!((th - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_vector_follows_prior() {
        let x = matrix(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let y = [NonRb, NonRb, NonRb, NonRb, NonRb, NonRb, NonRb, Rb, Rb, Rb];
        let p = train_mnb(&x, &y, 1.0).unwrap();
        assert_eq!(predict_mnb(&p, &SparseVec::default()).label, NonRb);
    }

    #[test]
    fn exact_tie_goes_to_rb() {
        let x = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let p = train_mnb(&x, &[Rb, NonRb], 1.0).unwrap();
        let pred = predict_mnb(&p, &SparseVec::default());
        assert_eq!(pred.log_joint[0], pred.log_joint[1]);
        assert_eq!(pred.label, Rb);
    }

    #[test]
    fn prior_shift_leaves_argmax() {
        let x = matrix(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 0.5], &[0.0, 1.0, 3.0], &[0.0, 0.0, 1.0], &[0.0, 0.3, 1.0]]);
        let y = [Rb, Rb, NonRb, NonRb, NonRb];
        let p = train_mnb(&x, &y, 0.1).unwrap();
        let mut shifted = p.clone();
        shifted.class_log_prior = shifted.class_log_prior.map(|l| l + 3.7);
        for row in &x.rows {
            assert_eq!(predict_mnb(&p, row).label, predict_mnb(&shifted, row).label);
        }
    }

    #[test]
    fn error_paths() {
        let x = matrix(&[&[1.0], &[2.0]]);
        assert!(matches!(train_mnb(&x, &[Rb, Rb], 1.0), Err(Error::SingleClass(_))));
        assert!(matches!(train_mnb(&x, &[Rb], 1.0), Err(Error::LengthMismatch { .. })));
        assert!(matches!(train_mnb(&x, &[Rb, NonRb], 0.0), Err(Error::InvalidArgument(_))));
        let bad = DocTermMatrix::new(vec![SparseVec::from_dense(&[f64::NAN]), SparseVec::from_dense(&[1.0])], 1).unwrap();
        assert!(matches!(train_mnb(&bad, &[Rb, NonRb], 1.0), Err(Error::NonFinite { row: 0, col: 0 })));
    }
}
