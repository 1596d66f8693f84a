//! Row-based wordcloud layout and SVG rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ConceptLexicon, TermRanking, UNCATEGORIZED};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WordcloudConfig {
    pub width: f64,
    pub height: f64,
    pub min_font_px: f64,
    pub max_font_px: f64,
    /// Horizontal gap between terms and vertical gap between rows.
    pub padding: f64,
    /// Estimated glyph advance as a fraction of the font size.
    pub char_width: f64,
    pub line_height: f64,
}

impl Default for WordcloudConfig {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 600.0,
            min_font_px: 12.0,
            max_font_px: 64.0,
            padding: 4.0,
            char_width: 0.6,
            line_height: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub term: String,
    pub weight: f64,
    pub category: String,
}

/// Bounding box with its top-left corner at `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedTerm {
    pub term: String,
    pub category: String,
    pub weight: f64,
    pub font_px: f64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wordcloud {
    pub config: WordcloudConfig,
    pub weights: Vec<WeightEntry>,
    pub placed: Vec<PlacedTerm>,
    /// Terms that did not fit on the canvas.
    pub omitted: usize,
}

/// Row height, members as (index into weights, font, width), used width. The height comes
/// from the first, largest term.
type Row = (f64, Vec<(usize, f64, f64)>, f64);

/// Min-max normalization; a degenerate range maps everything to 1.
fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 })
        .collect()
}

/// Weights for the first `top_k` ranked terms and a greedy row layout of them.
/// Terms are placed in ranking order until one no longer fits.
pub fn export_wordcloud(
    ranking: &TermRanking,
    lexicon: &ConceptLexicon,
    top_k: usize,
    cfg: &WordcloudConfig,
) -> Result<Wordcloud> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("wordcloud top_k must be at least 1".into()));
    }
    if !(cfg.width > 0.0 && cfg.height > 0.0 && cfg.min_font_px > 0.0 && cfg.max_font_px >= cfg.min_font_px) {
        return Err(Error::Config(format!("invalid wordcloud canvas or font range: {cfg:?}")));
    }
    let entries = &ranking.entries[..top_k.min(ranking.entries.len())];
    let keys: Vec<f64> = entries.iter().map(|e| e.key(ranking.mode)).collect();
    let weights: Vec<WeightEntry> = entries
        .iter()
        .zip(min_max(&keys))
        .map(|(e, weight)| WeightEntry {
            term: e.term.clone(),
            weight,
            category: lexicon.category_of(&e.term).unwrap_or(UNCATEGORIZED).to_string(),
        })
        .collect();

    let mut rows: Vec<Row> = Vec::new();
    let mut used_height = 0.0;
    let mut placed_count = 0;
    for (i, w) in weights.iter().enumerate() {
        let font = cfg.min_font_px + w.weight * (cfg.max_font_px - cfg.min_font_px);
        let width = w.term.chars().count() as f64 * font * cfg.char_width;
        let fits_row = rows
            .last()
            .is_some_and(|(_, _, row_w)| row_w + cfg.padding + width <= cfg.width);
        if fits_row {
            let row = rows.last_mut().unwrap();
            row.2 += cfg.padding + width;
            row.1.push((i, font, width));
        } else {
            let h = font * cfg.line_height;
            let gap = if rows.is_empty() { 0.0 } else { cfg.padding };
            if width > cfg.width || used_height + gap + h > cfg.height {
                break;
            }
            used_height += gap + h;
            rows.push((h, vec![(i, font, width)], width));
        }
        placed_count += 1;
    }

    let mut placed = Vec::with_capacity(placed_count);
    let mut y = (cfg.height - used_height) / 2.0;
    for (h, items, row_w) in &rows {
        let mut x = (cfg.width - row_w) / 2.0;
        for &(i, font, width) in items {
            placed.push(PlacedTerm {
                term: weights[i].term.clone(),
                category: weights[i].category.clone(),
                weight: weights[i].weight,
                font_px: font,
                x,
                y,
                width,
                height: *h,
            });
            x += width + cfg.padding;
        }
        y += h + cfg.padding;
    }
    Ok(Wordcloud {
        config: *cfg,
        omitted: weights.len() - placed.len(),
        weights,
        placed,
    })
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

impl Wordcloud {
    pub fn to_svg(&self) -> String {
        let cfg = &self.config;
        let mut categories: Vec<&str> = Vec::new();
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
            w = cfg.width,
            h = cfg.height
        );
        let _ = writeln!(s, r#"  <rect width="100%" height="100%" fill="white"/>"#);
        for p in &self.placed {
            let color = if p.category == UNCATEGORIZED {
                "#555555"
            } else {
                let idx = categories.iter().position(|c| *c == p.category).unwrap_or_else(|| {
                    categories.push(&p.category);
                    categories.len() - 1
                });
                PALETTE[idx % PALETTE.len()]
            };
            // baseline sits so the glyphs are vertically centred in the row box
            let baseline = p.y + p.height / 2.0 + p.font_px * 0.35;
            let _ = writeln!(
                s,
                r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="{:.2}" text-anchor="middle" fill="{}" data-category="{}">{}</text>"#,
                p.x + p.width / 2.0,
                baseline,
                p.font_px,
                color,
                escape_xml(&p.category),
                escape_xml(&p.term)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insights::{RankMode, RankedTerm};

    fn ranking(keys: &[(&str, f64)]) -> TermRanking {
        TermRanking {
            mode: RankMode::Conditional,
            vocabulary_hash: String::new(),
            entries: keys
                .iter()
                .map(|(t, k)| RankedTerm {
                    term: t.to_string(),
                    rb_conditional_prob: *k,
                    distinctiveness: 0.0,
                })
                .collect(),
        }
    }

    fn overlaps(a: &PlacedTerm, b: &PlacedTerm) -> bool {
        a.x < b.x + b.width && b.x < a.x + a.width && a.y < b.y + b.height && b.y < a.y + a.height
    }

    #[test]
    fn single_term_is_centered_with_full_weight() {
        let cfg = WordcloudConfig::default();
        let wc = export_wordcloud(&ranking(&[("refund", 0.3)]), &ConceptLexicon::default(), 5, &cfg).unwrap();
        assert_eq!(wc.weights[0].weight, 1.0);
        assert_eq!(wc.weights[0].category, "economic");
        let p = &wc.placed[0];
        assert!((p.x + p.width / 2.0 - cfg.width / 2.0).abs() < 1e-9);
        assert!((p.y + p.height / 2.0 - cfg.height / 2.0).abs() < 1e-9);
        assert_eq!(p.font_px, cfg.max_font_px);
    }

    #[test]
    fn two_terms_take_font_extremes() {
        let cfg = WordcloudConfig::default();
        let wc = export_wordcloud(&ranking(&[("aa", 0.2), ("bb", 0.1)]), &ConceptLexicon::empty(), 2, &cfg).unwrap();
        assert_eq!(wc.placed[0].font_px, cfg.max_font_px);
        assert_eq!(wc.placed[1].font_px, cfg.min_font_px);
        assert_eq!(wc.weights[1].weight, 0.0);
    }

    #[test]
    fn fifty_terms_do_not_overlap() {
        let keys: Vec<(String, f64)> = (0..50).map(|i| (format!("term{i}"), 1.0 / (i + 1) as f64)).collect();
        let refs: Vec<(&str, f64)> = keys.iter().map(|(t, k)| (t.as_str(), *k)).collect();
        let cfg = WordcloudConfig::default();
        let wc = export_wordcloud(&ranking(&refs), &ConceptLexicon::default(), 50, &cfg).unwrap();
        assert_eq!(wc.placed.len() + wc.omitted, 50);
        assert!(wc.placed.len() > 10);
        for (i, a) in wc.placed.iter().enumerate() {
            assert!(a.x >= 0.0 && a.y >= 0.0 && a.x + a.width <= cfg.width && a.y + a.height <= cfg.height);
            for b in &wc.placed[i + 1..] {
                assert!(!overlaps(a, b), "{} overlaps {}", a.term, b.term);
            }
        }
    }

    #[test]
    fn small_canvas_places_a_prefix() {
        let cfg = WordcloudConfig { width: 120.0, height: 80.0, ..Default::default() };
        let wc = export_wordcloud(&ranking(&[("ab", 3.0), ("cd", 2.0), ("ef", 1.5), ("gh", 1.0)]), &ConceptLexicon::empty(), 4, &cfg).unwrap();
        assert!(wc.omitted > 0);
        let names: Vec<&str> = wc.placed.iter().map(|p| p.term.as_str()).collect();
        assert_eq!(names, ["ab", "cd", "ef", "gh"][..names.len()]);
    }

    #[test]
    fn svg_is_well_formed_and_escaped() {
        let wc = export_wordcloud(&ranking(&[("a<b&c", 0.5), ("it's", 0.4)]), &ConceptLexicon::empty(), 2, &WordcloudConfig::default()).unwrap();
        let svg = wc.to_svg();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let texts: Vec<&str> = doc.descendants().filter(|n| n.has_tag_name("text")).map(|n| n.text().unwrap()).collect();
        assert_eq!(texts, ["a<b&c", "it's"]);
        assert_eq!(svg, wc.to_svg());
    }

    #[test]
    fn rejects_zero_top_k() {
        assert!(export_wordcloud(&ranking(&[("a", 1.0)]), &ConceptLexicon::empty(), 0, &WordcloudConfig::default()).is_err());
    }
}
