//! Corpus ingestion and validation: employee reviews, stock-price series,
//! and macro indicator series.
//!
//! Reviews arrive as JSON Lines (one object per line), stock prices as
//! long-format CSV (`company_id,date,adjusted_close`), and indicators as
//! two-column CSV (`year,value`). Every record is validated on load and is
//! immutable afterwards, so loaded corpora are safe to share across threads.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Years outside this window are treated as data corruption.
pub const MIN_YEAR: i32 = 1990;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    InvalidReview {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path} line {line}: duplicate review_id `{id}`")]
    DuplicateReviewId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path} row {row}: {message}")]
    InvalidRow {
        path: String,
        row: u64,
        message: String,
    },
    #[error("{path}: empty input, no records found")]
    Empty { path: String },
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A review's publication date. Day resolution when the source provides it,
/// otherwise a bare year. Bare years order as mid-year (July 2nd) so that
/// mixed-resolution corpora still sort stably.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReviewDate {
    Day(NaiveDate),
    Year(i32),
}

impl ReviewDate {
    pub fn year(&self) -> i32 {
        match self {
            ReviewDate::Day(d) => d.year(),
            ReviewDate::Year(y) => *y,
        }
    }

    /// Calendar date used for ordering; bare years map to July 2nd.
    pub fn sort_key(&self) -> NaiveDate {
        match self {
            ReviewDate::Day(d) => *d,
            ReviewDate::Year(y) => NaiveDate::from_ymd_opt(*y, 7, 2).expect("valid mid-year date"),
        }
    }
}

impl PartialOrd for ReviewDate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReviewDate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Tie-break on resolution so Ord stays consistent with Eq.
        let tag = |d: &ReviewDate| matches!(d, ReviewDate::Day(_)) as u8;
        (self.sort_key(), tag(self)).cmp(&(other.sort_key(), tag(other)))
    }
}

impl Serialize for ReviewDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ReviewDate::Day(d) => serializer.serialize_str(&d.format("%Y-%m-%d").to_string()),
            ReviewDate::Year(y) => serializer.serialize_i32(*y),
        }
    }
}

struct ReviewDateVisitor;

impl Visitor<'_> for ReviewDateVisitor {
    type Value = ReviewDate;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("an ISO-8601 date (YYYY-MM-DD) or a bare year")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ReviewDate, E> {
        i32::try_from(v)
            .map(ReviewDate::Year)
            .map_err(|_| E::custom(format!("year {v} out of range")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ReviewDate, E> {
        self.visit_i64(v as i64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ReviewDate, E> {
        if let Ok(d) = NaiveDate::parse_from_str(v, "%Y-%m-%d") {
            return Ok(ReviewDate::Day(d));
        }
        if let Ok(y) = v.trim().parse::<i32>() {
            return Ok(ReviewDate::Year(y));
        }
        Err(E::custom(format!(
            "unparsable date `{v}` (expected YYYY-MM-DD or bare year)"
        )))
    }
}

impl<'de> Deserialize<'de> for ReviewDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ReviewDateVisitor)
    }
}

/// One employee post about a company.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub company_id: String,
    pub date: ReviewDate,
    /// Overall rating in `[1, 5]`.
    pub rating: f64,
    pub text: String,
    /// Two-letter US state code, when geo-referenced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// GICS sector name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

impl Review {
    pub fn year(&self) -> i32 {
        self.date.year()
    }

    fn validate(&self) -> Result<(), String> {
        if !(1.0..=5.0).contains(&self.rating) {
            return Err(format!("field `rating`: {} outside [1, 5]", self.rating));
        }
        let year = self.year();
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(format!(
                "field `date`: year {year} outside [{MIN_YEAR}, {MAX_YEAR}]"
            ));
        }
        if self.text.trim().is_empty() {
            return Err("field `text`: empty after whitespace trim".to_string());
        }
        Ok(())
    }
}

/// A reviewed company, with back-references to its reviews.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Company {
    pub company_id: String,
    pub name: String,
    pub sector: Option<String>,
    pub review_ids: Vec<String>,
}

/// Daily adjusted closing prices for one company.
#[derive(Debug, Clone, PartialEq)]
pub struct StockSeries {
    pub company_id: String,
    /// `(date, adjusted_close)`, strictly increasing by date, prices > 0.
    pub observations: Vec<(NaiveDate, f64)>,
}

impl StockSeries {
    /// Arithmetic mean of the adjusted closes falling in `year`, or `None`
    /// when the series has no observation in that year.
    pub fn yearly_average_price(&self, year: i32) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0u64;
        for (date, price) in &self.observations {
            if date.year() == year {
                sum += price;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// A yearly macro indicator, e.g. the US unemployment rate in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub name: String,
    /// `(year, value)`, strictly increasing by year.
    pub points: Vec<(i32, f64)>,
}

impl IndicatorSeries {
    pub fn value_for(&self, year: i32) -> Option<f64> {
        self.points
            .iter()
            .find(|(y, _)| *y == year)
            .map(|(_, v)| *v)
    }

    /// Reads a `year,value` CSV.
    pub fn load_csv(path: &Path, name: &str) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let mut reader = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
        let headers = reader
            .headers()
            .map_err(|e| csv_row_err(path, 1, &e.to_string()))?
            .clone();
        let year_idx = column_index(&headers, "year", path)?;
        let value_idx = column_index(&headers, "value", path)?;

        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_row_err(path, 0, &e.to_string()))?;
            let row = record.position().map(|p| p.line()).unwrap_or(0);
            let year: i32 = record[year_idx]
                .trim()
                .parse()
                .map_err(|_| csv_row_err(path, row, "unparsable year"))?;
            let value: f64 = record[value_idx]
                .trim()
                .parse()
                .map_err(|_| csv_row_err(path, row, "unparsable value"))?;
            points.push((year, value, row));
        }
        points.sort_by_key(|(y, _, _)| *y);
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(csv_row_err(
                    path,
                    pair[1].2,
                    &format!("duplicate year {}", pair[1].0),
                ));
            }
        }
        Ok(IndicatorSeries {
            name: name.to_string(),
            points: points.into_iter().map(|(y, v, _)| (y, v)).collect(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "year,value").map_err(|e| io_err(path, e))?;
        for (year, value) in &self.points {
            writeln!(out, "{year},{value}").map_err(|e| io_err(path, e))?;
        }
        out.flush().map_err(|e| io_err(path, e))
    }
}

/// Post-count breakdowns over a loaded corpus. Missing metadata is bucketed
/// under `"unknown"` so every breakdown sums to the total post count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub total_posts: u64,
    pub total_companies: u64,
    pub by_year: BTreeMap<i32, u64>,
    pub by_state: BTreeMap<String, u64>,
    pub by_sector: BTreeMap<String, u64>,
    pub by_role: BTreeMap<String, u64>,
    pub by_status: BTreeMap<String, u64>,
}

/// A validated review corpus: all reviews plus companies deduplicated by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    /// Sorted by `company_id`.
    pub companies: Vec<Company>,
}

impl Corpus {
    /// Builds a corpus from already-validated reviews (used by the synthetic
    /// generator and tests). Companies are derived and sorted by id.
    pub fn from_reviews(reviews: Vec<Review>) -> Self {
        let companies = derive_companies(&reviews);
        Corpus { reviews, companies }
    }

    /// Loads a JSON Lines review file. Every line must be a well-formed
    /// record; errors carry the 1-based line number and offending field.
    pub fn load_jsonl(path: &Path) -> Result<Self, CorpusError> {
        Self::load_jsonl_filtered(path, |_| true)
    }

    /// Like [`Corpus::load_jsonl`] but keeps only reviews accepted by
    /// `keep`. Validation and duplicate detection still cover every line;
    /// the predicate only controls inclusion (e.g. a US-company filter).
    pub fn load_jsonl_filtered<F>(path: &Path, keep: F) -> Result<Self, CorpusError>
    where
        F: Fn(&Review) -> bool,
    {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let reader = BufReader::new(file);
        let mut reviews = Vec::new();
        let mut seen_ids: HashSet<String> = HashSet::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let review: Review =
                serde_json::from_str(&line).map_err(|e| CorpusError::InvalidReview {
                    path: path.display().to_string(),
                    line: line_no,
                    message: e.to_string(),
                })?;
            review
                .validate()
                .map_err(|message| CorpusError::InvalidReview {
                    path: path.display().to_string(),
                    line: line_no,
                    message,
                })?;
            if !seen_ids.insert(review.review_id.clone()) {
                return Err(CorpusError::DuplicateReviewId {
                    path: path.display().to_string(),
                    line: line_no,
                    id: review.review_id,
                });
            }
            if keep(&review) {
                reviews.push(review);
            }
        }
        Ok(Self::from_reviews(reviews))
    }

    /// Writes the reviews back out as JSON Lines, one object per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut out = BufWriter::new(file);
        for review in &self.reviews {
            let line = serde_json::to_string(review).expect("review serializes");
            writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
        }
        out.flush().map_err(|e| io_err(path, e))
    }

    pub fn summarize(&self) -> CorpusSummary {
        let mut by_year = BTreeMap::new();
        let mut by_state = BTreeMap::new();
        let mut by_sector = BTreeMap::new();
        let mut by_role = BTreeMap::new();
        let mut by_status = BTreeMap::new();
        let bucket = |map: &mut BTreeMap<String, u64>, key: &Option<String>| {
            let key = key.as_deref().unwrap_or("unknown");
            *map.entry(key.to_string()).or_insert(0) += 1;
        };
        for review in &self.reviews {
            *by_year.entry(review.year()).or_insert(0) += 1;
            bucket(&mut by_state, &review.state);
            bucket(&mut by_sector, &review.sector);
            bucket(&mut by_role, &review.role);
            bucket(&mut by_status, &review.status);
        }
        CorpusSummary {
            total_posts: self.reviews.len() as u64,
            total_companies: self.companies.len() as u64,
            by_year,
            by_state,
            by_sector,
            by_role,
            by_status,
        }
    }
}

fn derive_companies(reviews: &[Review]) -> Vec<Company> {
    let mut by_id: BTreeMap<&str, (Vec<String>, HashMap<&str, u64>)> = BTreeMap::new();
    for review in reviews {
        let entry = by_id.entry(&review.company_id).or_default();
        entry.0.push(review.review_id.clone());
        if let Some(sector) = &review.sector {
            *entry.1.entry(sector).or_insert(0) += 1;
        }
    }
    by_id
        .into_iter()
        .map(|(company_id, (review_ids, sectors))| {
            // Most frequent sector wins; ties break lexicographically.
            let sector = sectors
                .into_iter()
                .map(|(name, count)| (std::cmp::Reverse(count), name))
                .min()
                .map(|(_, name)| name.to_string());
            Company {
                company_id: company_id.to_string(),
                name: company_id.to_string(),
                sector,
                review_ids,
            }
        })
        .collect()
}

fn csv_row_err(path: &Path, row: u64, message: &str) -> CorpusError {
    CorpusError::InvalidRow {
        path: path.display().to_string(),
        row,
        message: message.to_string(),
    }
}

fn column_index(
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| csv_row_err(path, 1, &format!("missing required column `{name}`")))
}

/// Loads a long-format `company_id,date,adjusted_close` CSV into one sorted
/// series per company. Non-positive prices and unparsable dates are rejected
/// with their row number; duplicate dates within a company are rejected
/// because series must be strictly increasing.
pub fn load_stocks(path: &Path) -> Result<Vec<StockSeries>, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| csv_row_err(path, 1, &e.to_string()))?
        .clone();
    let company_idx = column_index(&headers, "company_id", path)?;
    let date_idx = column_index(&headers, "date", path)?;
    let price_idx = column_index(&headers, "adjusted_close", path)?;

    let mut by_company: BTreeMap<String, Vec<(NaiveDate, f64, u64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_row_err(path, 0, &e.to_string()))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(record[date_idx].trim(), "%Y-%m-%d")
            .map_err(|_| csv_row_err(path, row, "unparsable date (expected YYYY-MM-DD)"))?;
        let price: f64 = record[price_idx]
            .trim()
            .parse()
            .map_err(|_| csv_row_err(path, row, "unparsable adjusted_close"))?;
        if !(price > 0.0) {
            return Err(csv_row_err(
                path,
                row,
                &format!("non-positive adjusted_close {price}"),
            ));
        }
        by_company
            .entry(record[company_idx].trim().to_string())
            .or_default()
            .push((date, price, row));
    }

    let mut series = Vec::with_capacity(by_company.len());
    for (company_id, mut obs) in by_company {
        obs.sort_by_key(|(date, _, _)| *date);
        for pair in obs.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(csv_row_err(
                    path,
                    pair[1].2,
                    &format!("duplicate date {} for company {company_id}", pair[1].0),
                ));
            }
        }
        series.push(StockSeries {
            company_id,
            observations: obs.into_iter().map(|(d, p, _)| (d, p)).collect(),
        });
    }
    Ok(series)
}

/// Writes stock series back to the long CSV format, sorted by company then date.
pub fn write_stocks(series: &[StockSeries], path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "company_id,date,adjusted_close").map_err(|e| io_err(path, e))?;
    for s in series {
        for (date, price) in &s.observations {
            writeln!(out, "{},{},{}", s.company_id, date.format("%Y-%m-%d"), price)
                .map_err(|e| io_err(path, e))?;
        }
    }
    out.flush().map_err(|e| io_err(path, e))
}
