//! Word-level precision and recall between detected and specified text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::backends::{ocr_detect, BackendEndpoint, BackendError, CancelToken};
use crate::doc::PosterDocument;
use crate::raster::RasterImage;
use crate::text::FontRegistry;

/// Normalized word to count. Counts are always >= 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordMultiset(BTreeMap<String, usize>);

impl WordMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: impl Into<String>) {
        *self.0.entry(word.into()).or_default() += 1;
    }

    pub fn count(&self, word: &str) -> usize {
        self.0.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Adds every word of `other`.
    pub fn extend(&mut self, other: &WordMultiset) {
        for (w, n) in other.iter() {
            *self.0.entry(w.to_string()).or_default() += n;
        }
    }
}

impl<S: Into<String>> FromIterator<S> for WordMultiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut m = WordMultiset::new();
        for w in iter {
            m.insert(w);
        }
        m
    }
}

/// Edge characters dropped from tokens. U+FFFD is kept so an undrawable
/// character still counts as a mismatch.
fn is_edge_punct(c: char) -> bool {
    !(c.is_alphanumeric() || is_combining_mark(c) || c == char::REPLACEMENT_CHARACTER)
}

/// One normalized word: NFC, lowercased, edge punctuation trimmed.
pub fn normalize_word(token: &str) -> String {
    let folded: String = token.nfc().collect::<String>().to_lowercase();
    folded.trim_matches(is_edge_punct).nfc().collect()
}

/// Whitespace tokens, normalized, empties dropped.
pub fn normalize_words(text: &str) -> WordMultiset {
    text.split_whitespace()
        .map(normalize_word)
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosterPrf {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub detected_total: usize,
    pub specified_total: usize,
    /// Nothing detected (precision is vacuously 1).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub detected_total: usize,
    pub specified_total: usize,
    pub per_poster: Vec<PosterPrf>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// `matched = sum over words of min(detected, specified)`; precision is
/// `matched / |detected|` and recall `matched / |specified|`, each 1 when its
/// denominator is 0.
pub fn word_prf(detected: &WordMultiset, specified: &WordMultiset) -> PrfReport {
    let matched = detected
        .iter()
        .map(|(w, n)| n.min(specified.count(w)))
        .sum();
    let (d, s) = (detected.total(), specified.total());
    let poster = PosterPrf {
        id: String::new(),
        precision: ratio(matched, d),
        recall: ratio(matched, s),
        matched,
        detected_total: d,
        specified_total: s,
        degenerate: d == 0,
    };
    PrfReport {
        precision: poster.precision,
        recall: poster.recall,
        matched,
        detected_total: d,
        specified_total: s,
        per_poster: vec![poster],
    }
}

/// Macro average of per-poster precision and recall; counts are summed.
pub fn aggregate(per_poster: Vec<PosterPrf>) -> PrfReport {
    let n = per_poster.len().max(1) as f64;
    PrfReport {
        precision: per_poster.iter().map(|p| p.precision).sum::<f64>() / n,
        recall: per_poster.iter().map(|p| p.recall).sum::<f64>() / n,
        matched: per_poster.iter().map(|p| p.matched).sum(),
        detected_total: per_poster.iter().map(|p| p.detected_total).sum(),
        specified_total: per_poster.iter().map(|p| p.specified_total).sum(),
        per_poster,
    }
}

/// Words the user asked for: every element's content.
pub fn specified_words(doc: &PosterDocument) -> WordMultiset {
    let mut m = WordMultiset::new();
    for el in &doc.elements {
        m.extend(&normalize_words(&el.content));
    }
    m
}

pub struct EvalPoster<'a> {
    pub id: String,
    pub image: &'a RasterImage,
    pub document: &'a PosterDocument,
}

/// Per-poster scores and their macro average. With no OCR endpoint the
/// oracle reads each document. Any backend error aborts the whole run.
pub fn evaluate_corpus(
    posters: &[EvalPoster<'_>],
    registry: &FontRegistry,
    ocr: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<PrfReport, BackendError> {
    if posters.is_empty() {
        return Err(BackendError::Input("corpus is empty".into()));
    }
    let mut per = Vec::with_capacity(posters.len());
    for p in posters {
        let words = ocr_detect(p.image, Some((p.document, registry)), ocr, cancel)?;
        let joined: Vec<&str> = words.iter().map(|w| w.word.as_str()).collect();
        let detected = normalize_words(&joined.join(" "));
        let mut r = word_prf(&detected, &specified_words(p.document))
            .per_poster
            .remove(0);
        r.id = p.id.clone();
        per.push(r);
    }
    Ok(aggregate(per))
}

impl PrfReport {
    /// Fixed-width table, one row per poster plus the macro average.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<32} {:>9} {:>9} {:>7} {:>8} {:>9}",
            "poster", "precision", "recall", "matched", "detected", "specified"
        );
        for p in &self.per_poster {
            let _ = writeln!(
                s,
                "{:<32} {:>9.4} {:>9.4} {:>7} {:>8} {:>9}{}",
                p.id,
                p.precision,
                p.recall,
                p.matched,
                p.detected_total,
                p.specified_total,
                if p.degenerate { "  (nothing detected)" } else { "" }
            );
        }
        let _ = writeln!(
            s,
            "{:<32} {:>9.4} {:>9.4} {:>7} {:>8} {:>9}",
            "macro average",
            self.precision,
            self.recall,
            self.matched,
            self.detected_total,
            self.specified_total
        );
        s
    }
}
