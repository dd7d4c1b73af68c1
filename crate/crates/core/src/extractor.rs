//! Stress-mention extraction and evaluation.
//!
//! Mentions are detected with a multi-phrase lexicon matcher over lowercase
//! tokens, using leftmost-longest, non-overlapping resolution. The matcher
//! sits behind a simple span contract (`review_id`, token range, phrase), so
//! any stronger extractor can be dropped in and scored with the same
//! strict/relaxed micro-averaged F1 harness.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Review};

#[derive(Debug, Error)]
pub enum ExtractorError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    InvalidSpan {
        path: String,
        line: usize,
        message: String,
    },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon line {line}: phrase `{phrase}` has no tokens")]
    BlankPhrase { line: usize, phrase: String },
}

/// Splits text into lowercase tokens. Tokens are maximal runs of
/// alphanumeric characters; `-` and `/` are kept when flanked by
/// alphanumerics on both sides (so `work/life` and `401k-style` survive),
/// all other punctuation separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let is_word = |i: usize| chars.get(i).is_some_and(|c| c.is_alphanumeric());
    let mut tokens = Vec::new();
    let mut current = String::new();
    for i in 0..chars.len() {
        let c = chars[i];
        let keep = c.is_alphanumeric()
            || ((c == '-' || c == '/') && i > 0 && is_word(i - 1) && is_word(i + 1));
        if keep {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// The ordered set of stress-condition phrases used for mention extraction.
///
/// Phrases are tokenized with [`tokenize`], deduplicated, and matched
/// case-insensitively against exact token sequences (no stemming). The
/// default lexicon carries 31 conditions: the 15 most frequent published
/// ones verbatim plus 16 morphological-variant slots that a lexicon file
/// can override.
#[derive(Debug, Clone)]
pub struct StressLexicon {
    phrases: Vec<Vec<String>>,
    /// First token -> phrase indices, longest phrase first.
    by_first: HashMap<String, Vec<usize>>,
}

/// The 15 most frequent published stress conditions.
pub const PUBLISHED_PHRASES: [&str; 15] = [
    "stress",
    "high stress",
    "pressure",
    "burnout",
    "understaffing",
    "heavy workload",
    "exhaustion",
    "stress levels",
    "overworked",
    "tension",
    "high workload",
    "extreme stress",
    "mental stress",
    "overload",
    "pressure to perform",
];

/// Default fillers for the 16 unpublished lexicon slots: morphological
/// variants of the published terms. Override via a lexicon file.
pub const DEFAULT_VARIANT_PHRASES: [&str; 16] = [
    "stressful",
    "stressed",
    "burn out",
    "burned out",
    "burnt out",
    "overwork",
    "overworking",
    "under pressure",
    "overwhelmed",
    "overwhelming",
    "anxiety",
    "long hours",
    "work overload",
    "constant pressure",
    "emotional exhaustion",
    "fatigue",
];

impl StressLexicon {
    /// Builds a lexicon from raw phrases. Phrases are whitespace-normalized
    /// and lowercased via the tokenizer; duplicates collapse to their first
    /// occurrence; a phrase with no tokens is an error.
    pub fn new<I, S>(raw: I) -> Result<Self, ExtractorError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut phrases: Vec<Vec<String>> = Vec::new();
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        for (i, phrase) in raw.into_iter().enumerate() {
            let tokens = tokenize(phrase.as_ref());
            if tokens.is_empty() {
                return Err(ExtractorError::BlankPhrase {
                    line: i + 1,
                    phrase: phrase.as_ref().to_string(),
                });
            }
            if seen.insert(tokens.clone()) {
                phrases.push(tokens);
            }
        }
        if phrases.is_empty() {
            return Err(ExtractorError::EmptyLexicon);
        }
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, tokens) in phrases.iter().enumerate() {
            by_first.entry(tokens[0].clone()).or_default().push(idx);
        }
        for indices in by_first.values_mut() {
            indices.sort_by_key(|&i| std::cmp::Reverse(phrases[i].len()));
        }
        Ok(StressLexicon { phrases, by_first })
    }

    /// The 31-condition default lexicon.
    pub fn default_lexicon() -> Self {
        Self::new(
            PUBLISHED_PHRASES
                .iter()
                .chain(DEFAULT_VARIANT_PHRASES.iter()),
        )
        .expect("default lexicon is valid")
    }

    /// Reads one phrase per line; `#` starts a comment, blank lines skip.
    pub fn from_file(path: &Path) -> Result<Self, ExtractorError> {
        let file = File::open(path).map_err(|e| ExtractorError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut phrases = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| ExtractorError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let line = line.split('#').next().unwrap_or("").trim().to_string();
            if !line.is_empty() {
                phrases.push(line);
            }
        }
        Self::new(phrases)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ExtractorError> {
        let file = File::create(path).map_err(|e| ExtractorError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut out = BufWriter::new(file);
        for phrase in self.phrases() {
            writeln!(out, "{phrase}").map_err(|e| ExtractorError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
        Ok(())
    }

    pub fn phrases(&self) -> Vec<String> {
        self.phrases.iter().map(|p| p.join(" ")).collect()
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Length in tokens of the longest phrase matching at `pos`, if any.
    fn longest_match_at(&self, tokens: &[String], pos: usize) -> Option<usize> {
        let candidates = self.by_first.get(&tokens[pos])?;
        for &idx in candidates {
            let phrase = &self.phrases[idx];
            if pos + phrase.len() <= tokens.len()
                && phrase.iter().zip(&tokens[pos..]).all(|(a, b)| a == b)
            {
                return Some(phrase.len());
            }
        }
        None
    }
}

/// A detected stress mention: a token range within one review.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionSpan {
    pub review_id: String,
    pub start_token: usize,
    /// Exclusive.
    pub end_token: usize,
    #[serde(rename = "phrase")]
    pub matched_phrase: String,
}

/// Finds all stress mentions in one review using leftmost-longest,
/// non-overlapping resolution: scanning left to right, the longest phrase
/// starting at the cursor wins and the cursor jumps past it, so a token
/// participates in at most one span. Output is sorted by `start_token`.
pub fn find_mentions(review: &Review, lexicon: &StressLexicon) -> Vec<MentionSpan> {
    find_mentions_in_tokens(&review.review_id, &tokenize(&review.text), lexicon)
}

fn find_mentions_in_tokens(
    review_id: &str,
    tokens: &[String],
    lexicon: &StressLexicon,
) -> Vec<MentionSpan> {
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        match lexicon.longest_match_at(tokens, pos) {
            Some(len) => {
                spans.push(MentionSpan {
                    review_id: review_id.to_string(),
                    start_token: pos,
                    end_token: pos + len,
                    matched_phrase: tokens[pos..pos + len].join(" "),
                });
                pos += len;
            }
            None => pos += 1,
        }
    }
    spans
}

/// Extracts mentions for a whole corpus, fanning out across reviews.
/// Output order follows review order, so results are deterministic.
pub fn extract_corpus(corpus: &Corpus, lexicon: &StressLexicon) -> Vec<MentionSpan> {
    corpus
        .reviews
        .par_iter()
        .map(|review| find_mentions(review, lexicon))
        .flatten()
        .collect()
}

/// Per-year stress/total post counts for one company.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct YearStressCounts {
    pub stress_posts: u64,
    pub total_posts: u64,
}

/// Flags each review as a stress post when it contains at least one mention,
/// and aggregates counts per `(company, year)`.
pub fn flag_stress_reviews(
    corpus: &Corpus,
    lexicon: &StressLexicon,
) -> BTreeMap<String, BTreeMap<i32, YearStressCounts>> {
    let flags: Vec<bool> = corpus
        .reviews
        .par_iter()
        .map(|review| {
            let tokens = tokenize(&review.text);
            let mut pos = 0;
            while pos < tokens.len() {
                if lexicon.longest_match_at(&tokens, pos).is_some() {
                    return true;
                }
                pos += 1;
            }
            false
        })
        .collect();

    let mut counts: BTreeMap<String, BTreeMap<i32, YearStressCounts>> = BTreeMap::new();
    for (review, is_stress) in corpus.reviews.iter().zip(&flags) {
        let entry = counts
            .entry(review.company_id.clone())
            .or_default()
            .entry(review.year())
            .or_default();
        entry.total_posts += 1;
        if *is_stress {
            entry.stress_posts += 1;
        }
    }
    counts
}

/// Review ids that contain at least one mention.
pub fn stress_review_ids(spans: &[MentionSpan]) -> HashSet<String> {
    spans.iter().map(|s| s.review_id.clone()).collect()
}

/// Strict/relaxed micro-averaged F1 over pooled spans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Report {
    pub strict_precision: f64,
    pub strict_recall: f64,
    pub strict_f1: f64,
    pub relaxed_precision: f64,
    pub relaxed_recall: f64,
    pub relaxed_f1: f64,
    pub true_entity_count: usize,
    pub predicted_entity_count: usize,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores predicted spans against gold spans.
///
/// Strict: a prediction is correct iff its `(review_id, start, end)` exactly
/// equals an unconsumed gold span. Relaxed: exact pairs are consumed first,
/// then remaining predictions greedily match the first unconsumed gold span
/// (in position order, same review) overlapping by at least one token, so
/// each gold span is matched at most once and relaxed counts dominate strict
/// counts. Precision and recall are micro-averaged over all spans pooled
/// across reviews.
pub fn evaluate_extractor(predicted: &[MentionSpan], gold: &[MentionSpan]) -> F1Report {
    // Group by review, keep positional order within each review.
    let group = |spans: &[MentionSpan]| {
        let mut by_review: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for s in spans {
            by_review
                .entry(s.review_id.clone())
                .or_default()
                .push((s.start_token, s.end_token));
        }
        for v in by_review.values_mut() {
            v.sort_unstable();
        }
        by_review
    };
    let pred_by_review = group(predicted);
    let gold_by_review = group(gold);

    let mut strict_matches = 0usize;
    let mut relaxed_matches = 0usize;
    for (review_id, preds) in &pred_by_review {
        let Some(golds) = gold_by_review.get(review_id) else {
            continue;
        };
        let mut gold_used = vec![false; golds.len()];
        let mut pred_matched = vec![false; preds.len()];
        // Pass 1: exact span equality.
        for (pi, pred) in preds.iter().enumerate() {
            for (gi, g) in golds.iter().enumerate() {
                if !gold_used[gi] && g == pred {
                    gold_used[gi] = true;
                    pred_matched[pi] = true;
                    strict_matches += 1;
                    relaxed_matches += 1;
                    break;
                }
            }
        }
        // Pass 2: token overlap for the remainder, greedy by position.
        for (pi, &(ps, pe)) in preds.iter().enumerate() {
            if pred_matched[pi] {
                continue;
            }
            for (gi, &(gs, ge)) in golds.iter().enumerate() {
                if !gold_used[gi] && ps < ge && gs < pe {
                    gold_used[gi] = true;
                    relaxed_matches += 1;
                    break;
                }
            }
        }
    }

    let strict_precision = ratio(strict_matches, predicted.len());
    let strict_recall = ratio(strict_matches, gold.len());
    let relaxed_precision = ratio(relaxed_matches, predicted.len());
    let relaxed_recall = ratio(relaxed_matches, gold.len());
    F1Report {
        strict_precision,
        strict_recall,
        strict_f1: f1(strict_precision, strict_recall),
        relaxed_precision,
        relaxed_recall,
        relaxed_f1: f1(relaxed_precision, relaxed_recall),
        true_entity_count: gold.len(),
        predicted_entity_count: predicted.len(),
    }
}

/// Reads a span JSONL file (`review_id`, `start_token`, `end_token`, `phrase`).
pub fn read_spans_jsonl(path: &Path) -> Result<Vec<MentionSpan>, ExtractorError> {
    let file = File::open(path).map_err(|e| ExtractorError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut spans = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ExtractorError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let span: MentionSpan =
            serde_json::from_str(&line).map_err(|e| ExtractorError::InvalidSpan {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        if span.start_token >= span.end_token {
            return Err(ExtractorError::InvalidSpan {
                path: path.display().to_string(),
                line: idx + 1,
                message: format!(
                    "start_token {} not before end_token {}",
                    span.start_token, span.end_token
                ),
            });
        }
        spans.push(span);
    }
    Ok(spans)
}

pub fn write_spans_jsonl(spans: &[MentionSpan], path: &Path) -> Result<(), ExtractorError> {
    let file = File::create(path).map_err(|e| ExtractorError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    for span in spans {
        let line = serde_json::to_string(span).expect("span serializes");
        writeln!(out, "{line}").map_err(|e| ExtractorError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    out.flush().map_err(|e| ExtractorError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
