//! Fixed-point review scores.
//!
//! All scores live on the 0–10 scale with one decimal of precision and are stored as an
//! integer number of tenths, so threshold comparisons (`gap >= 4.0`, `score <= 1.0`) are exact.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A score in tenths of a point. `Score(79)` is 7.9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(pub i32);

impl Score {
    pub const MIN: Score = Score(0);
    pub const MAX: Score = Score(100);

    pub const fn from_tenths(tenths: i32) -> Self {
        Score(tenths)
    }

    /// Rounds a decimal value to the nearest tenth (half away from zero).
    pub fn from_f64(value: f64) -> Self {
        Score((value * 10.0).round() as i32)
    }

    pub fn tenths(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn in_range(self) -> bool {
        (Self::MIN..=Self::MAX).contains(&self)
    }

    /// Integer bin `floor(score)` in `0..=10`.
    pub fn bin(self) -> usize {
        (self.0.clamp(0, 100) / 10) as usize
    }

    /// Arithmetic mean of `scores`, rounded half away from zero to a tenth.
    pub fn mean(scores: impl IntoIterator<Item = Score>) -> Option<Score> {
        let (sum, n) = scores
            .into_iter()
            .fold((0i64, 0i64), |(s, n), x| (s + i64::from(x.0), n + 1));
        if n == 0 {
            return None;
        }
        // round(sum / n) with integer arithmetic; sums are non-negative for valid scores
        let q = (2 * sum + n).div_euclid(2 * n);
        Some(Score(q as i32))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        write!(f, "{sign}{}.{}", self.0.abs() / 10, self.0.abs() % 10)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("score must be finite"));
        }
        Ok(Score::from_f64(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_rounds_to_tenths() {
        let s = |v: &[i32]| Score::mean(v.iter().map(|&t| Score(t)));
        assert_eq!(s(&[0, 0, 20, 20]), Some(Score(10)));
        assert_eq!(s(&[10, 20]), Some(Score(15)));
        // 1/3 of a tenth rounds down, 2/3 rounds up, 1/2 rounds away from zero
        assert_eq!(s(&[0, 0, 1]), Some(Score(0)));
        assert_eq!(s(&[0, 1, 1]), Some(Score(1)));
        assert_eq!(s(&[0, 1]), Some(Score(1)));
        assert_eq!(s(&[]), None);
    }

    #[test]
    fn display_and_bins() {
        assert_eq!(Score(79).to_string(), "7.9");
        assert_eq!(Score(0).to_string(), "0.0");
        assert_eq!(Score(100).bin(), 10);
        assert_eq!(Score(19).bin(), 1);
        assert_eq!(Score::from_f64(0.9), Score(9));
    }

    #[test]
    fn serde_as_decimal() {
        let json = serde_json::to_string(&Score(40)).unwrap();
        assert_eq!(json, "4.0");
        let back: Score = serde_json::from_str("4.0").unwrap();
        assert_eq!(back, Score(40));
    }
}
