//! Company stress-type scoring.
//!
//! For a period `T`, each company gets its mean review rating and its stress
//! fraction (share of reviews with at least one stress mention). Both values
//! are z-scored across companies, the z-sign pair picks one of four stress
//! types, and an association weight scores how strongly the company belongs
//! to its type: companies far from the origin and close to their quadrant's
//! diagonal score highest. A cosine k-means elbow check validates that the
//! four-quadrant structure is the natural cluster count.

pub mod kmeans;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use kmeans::cosine_kmeans;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("need at least 2 companies with posts in the period, got {got}")]
    TooFewCompanies { got: usize },
    #[error("degenerate population: zero variance in {dimension}")]
    DegeneratePopulation { dimension: &'static str },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("invalid period: start {start} after end {end}")]
    InvalidPeriod { start: i32, end: i32 },
    #[error("elbow validation needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("k_max must be at least 3, got {got}")]
    BadKMax { got: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} row {row}: {message}")]
    InvalidRow {
        path: String,
        row: u64,
        message: String,
    },
}

/// The four workplace-stress types, one per quadrant of the
/// (z_rating, z_stress) plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StressType {
    LowStress,
    Passive,
    NegativeStress,
    PositiveStress,
}

impl StressType {
    pub const ALL: [StressType; 4] = [
        StressType::LowStress,
        StressType::Passive,
        StressType::NegativeStress,
        StressType::PositiveStress,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StressType::LowStress => "low_stress",
            StressType::Passive => "passive",
            StressType::NegativeStress => "negative_stress",
            StressType::PositiveStress => "positive_stress",
        }
    }
}

impl fmt::Display for StressType {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StressType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_lowercase().replace([' ', '-'], "_");
        match normalized.as_str() {
            "low_stress" => Ok(StressType::LowStress),
            "passive" | "passive_stress" => Ok(StressType::Passive),
            "negative_stress" => Ok(StressType::NegativeStress),
            "positive_stress" => Ok(StressType::PositiveStress),
            other => Err(format!("unknown stress type `{other}`")),
        }
    }
}

/// Per-year post counts and rating mass for one company.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompanyYearStats {
    pub stress_posts: u64,
    pub total_posts: u64,
    pub rating_sum: f64,
}

/// All per-year inputs the scoring and temporal analyses need for one company.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanyData {
    pub company_id: String,
    pub sector: Option<String>,
    pub years: BTreeMap<i32, CompanyYearStats>,
}

impl CompanyData {
    /// Total posts within `[start, end]` inclusive.
    pub fn posts_in(&self, period: (i32, i32)) -> u64 {
        self.years
            .range(period.0..=period.1)
            .map(|(_, s)| s.total_posts)
            .sum()
    }

    fn sums_in(&self, period: (i32, i32)) -> (u64, u64, f64) {
        let mut stress = 0;
        let mut total = 0;
        let mut rating = 0.0;
        for (_, s) in self.years.range(period.0..=period.1) {
            stress += s.stress_posts;
            total += s.total_posts;
            rating += s.rating_sum;
        }
        (stress, total, rating)
    }
}

/// Joins a corpus with the set of stress-flagged review ids into sorted
/// per-company yearly aggregates.
pub fn collect_company_data(corpus: &Corpus, stress_ids: &HashSet<String>) -> Vec<CompanyData> {
    let mut by_company: BTreeMap<&str, BTreeMap<i32, CompanyYearStats>> = BTreeMap::new();
    for review in &corpus.reviews {
        let year = by_company
            .entry(&review.company_id)
            .or_default()
            .entry(review.year())
            .or_default();
        year.total_posts += 1;
        year.rating_sum += review.rating;
        if stress_ids.contains(&review.review_id) {
            year.stress_posts += 1;
        }
    }
    let sectors: BTreeMap<&str, Option<String>> = corpus
        .companies
        .iter()
        .map(|c| (c.company_id.as_str(), c.sector.clone()))
        .collect();
    by_company
        .into_iter()
        .map(|(company_id, years)| CompanyData {
            company_id: company_id.to_string(),
            sector: sectors.get(company_id).cloned().flatten(),
            years,
        })
        .collect()
}

/// Population mean/std of ratings and stress fractions over the companies
/// with at least one post in the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationStats {
    pub mu_rating: f64,
    pub sigma_rating: f64,
    pub mu_stress: f64,
    pub sigma_stress: f64,
    pub n_companies: usize,
}

/// One company's period scores, type, and association weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanyScore {
    pub company_id: String,
    pub period: (i32, i32),
    pub n_posts: u64,
    pub rating: f64,
    pub stress_fraction: f64,
    pub z_rating: f64,
    pub z_stress: f64,
    pub stress_type: StressType,
    pub association: f64,
    /// Pass-through GICS sector, used by the per-sector growth analysis.
    pub sector: Option<String>,
}

/// Raw period values for one company, the immediate input to z-scoring.
/// Used directly when replaying released per-company aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanyPeriodValues {
    pub company_id: String,
    pub sector: Option<String>,
    pub n_posts: u64,
    pub rating: f64,
    pub stress_fraction: f64,
}

/// Assigns the quadrant from the z-score signs. Zero counts as the positive
/// side, so boundary companies resolve deterministically.
pub fn assign_quadrant(z_rating: f64, z_stress: f64) -> StressType {
    match (z_rating >= 0.0, z_stress >= 0.0) {
        (true, false) => StressType::LowStress,
        (false, false) => StressType::Passive,
        (false, true) => StressType::NegativeStress,
        (true, true) => StressType::PositiveStress,
    }
}

/// Association weight of a company with its stress type.
///
/// With `R` the distance from the origin, `alpha`/`beta` the angles between
/// the radius line and the two axes, and `gamma = max(alpha - pi/4,
/// beta - pi/4)` the angle to the quadrant diagonal, the weight is
/// `R / (gamma + pi)`. The origin carries no evidence of any type and maps
/// to 0.
pub fn association_weight(z_rating: f64, z_stress: f64) -> Result<f64, ScoringError> {
    if !z_rating.is_finite() || !z_stress.is_finite() {
        return Err(ScoringError::NonFinite { what: "z-score" });
    }
    let r = z_rating.hypot(z_stress);
    if r == 0.0 {
        return Ok(0.0);
    }
    let alpha = (z_rating.abs() / r).clamp(-1.0, 1.0).acos();
    let beta = (z_stress.abs() / r).clamp(-1.0, 1.0).acos();
    let gamma = (alpha - std::f64::consts::FRAC_PI_4).max(beta - std::f64::consts::FRAC_PI_4);
    Ok(r / (gamma + std::f64::consts::PI))
}

fn population_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-scores raw period values across companies and assigns types and
/// association weights. Requires at least two companies and nonzero variance
/// on both axes (population standard deviation, divide-by-N).
pub fn score_companies(
    values: &[CompanyPeriodValues],
    period: (i32, i32),
) -> Result<(Vec<CompanyScore>, PopulationStats), ScoringError> {
    if period.0 > period.1 {
        return Err(ScoringError::InvalidPeriod {
            start: period.0,
            end: period.1,
        });
    }
    if values.len() < 2 {
        return Err(ScoringError::TooFewCompanies { got: values.len() });
    }
    let ratings: Vec<f64> = values.iter().map(|v| v.rating).collect();
    let stresses: Vec<f64> = values.iter().map(|v| v.stress_fraction).collect();
    let (mu_rating, sigma_rating) = population_mean_std(&ratings);
    let (mu_stress, sigma_stress) = population_mean_std(&stresses);
    if sigma_rating == 0.0 {
        return Err(ScoringError::DegeneratePopulation { dimension: "rating" });
    }
    if sigma_stress == 0.0 {
        return Err(ScoringError::DegeneratePopulation {
            dimension: "stress fraction",
        });
    }

    let mut scores = Vec::with_capacity(values.len());
    for v in values {
        let z_rating = (v.rating - mu_rating) / sigma_rating;
        let z_stress = (v.stress_fraction - mu_stress) / sigma_stress;
        let stress_type = assign_quadrant(z_rating, z_stress);
        let association = association_weight(z_rating, z_stress)?;
        scores.push(CompanyScore {
            company_id: v.company_id.clone(),
            period,
            n_posts: v.n_posts,
            rating: v.rating,
            stress_fraction: v.stress_fraction,
            z_rating,
            z_stress,
            stress_type,
            association,
            sector: v.sector.clone(),
        });
    }
    let stats = PopulationStats {
        mu_rating,
        sigma_rating,
        mu_stress,
        sigma_stress,
        n_companies: values.len(),
    };
    Ok((scores, stats))
}

/// Computes period scores from per-company yearly aggregates.
///
/// Companies with no posts in the period are omitted: their association is
/// zero by definition and they contribute nothing to the population stats.
/// `rating_overrides` substitutes an externally supplied rating (e.g. the
/// review site's displayed aggregate) for the computed per-review mean.
pub fn company_scores(
    data: &[CompanyData],
    period: (i32, i32),
    rating_overrides: Option<&BTreeMap<String, f64>>,
) -> Result<(Vec<CompanyScore>, PopulationStats), ScoringError> {
    let mut values = Vec::new();
    for company in data {
        let (stress, total, rating_sum) = company.sums_in(period);
        if total == 0 {
            log::debug!(
                "company {} has no posts in {}..={}, omitted from scoring",
                company.company_id,
                period.0,
                period.1
            );
            continue;
        }
        let rating = rating_overrides
            .and_then(|m| m.get(&company.company_id).copied())
            .unwrap_or(rating_sum / total as f64);
        values.push(CompanyPeriodValues {
            company_id: company.company_id.clone(),
            sector: company.sector.clone(),
            n_posts: total,
            rating,
            stress_fraction: stress as f64 / total as f64,
        });
    }
    score_companies(&values, period)
}

/// Inertia-versus-k curve of cosine k-means over the z-score scatter, with
/// the elbow chosen as the largest discrete second difference.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowCurve {
    pub points: Vec<(usize, f64)>,
    pub selected_k: usize,
}

pub const ELBOW_RESTARTS: usize = 10;
pub const ELBOW_MAX_ITER: usize = 100;
pub const DEFAULT_ELBOW_SEED: u64 = 7;

/// Runs `elbow_validation_seeded` with the fixed default seed.
pub fn elbow_validation(
    points: &[(f64, f64)],
    k_max: usize,
) -> Result<ElbowCurve, ScoringError> {
    elbow_validation_seeded(points, k_max, DEFAULT_ELBOW_SEED)
}

/// Clusters the (z_rating, z_stress) scatter with cosine k-means for
/// `k = 1..=k_max` (10 restarts per k plus a warm start from the previous
/// solution, 100 iteration cap) and selects the k maximizing the second
/// difference of the log-inertia curve. The log scale makes successive
/// multiplicative drops comparable, so the detector lands on the knee where
/// improvement collapses instead of on the first big absolute drop.
/// Zero vectors are excluded with a warning since cosine distance is
/// undefined there. An all-identical scatter has zero inertia everywhere
/// and selects k = 1.
pub fn elbow_validation_seeded(
    points: &[(f64, f64)],
    k_max: usize,
    seed: u64,
) -> Result<ElbowCurve, ScoringError> {
    if k_max < 3 {
        return Err(ScoringError::BadKMax { got: k_max });
    }
    let usable: Vec<Vec<f64>> = points
        .iter()
        .filter(|(x, y)| {
            let ok = *x != 0.0 || *y != 0.0;
            if !ok {
                log::warn!("elbow validation: skipping zero vector (cosine undefined)");
            }
            ok
        })
        .map(|&(x, y)| vec![x, y])
        .collect();
    if usable.len() < k_max {
        return Err(ScoringError::TooFewPoints {
            needed: k_max,
            got: usable.len(),
        });
    }

    let mut curve = Vec::with_capacity(k_max);
    let mut prev_centroids: Option<Vec<Vec<f64>>> = None;
    for k in 1..=k_max {
        let fit = cosine_kmeans(
            &usable,
            k,
            seed,
            ELBOW_RESTARTS,
            ELBOW_MAX_ITER,
            prev_centroids.as_deref(),
        );
        curve.push((k, fit.inertia));
        prev_centroids = Some(fit.centroids);
    }

    let selected_k = if curve[0].1 <= 1e-12 {
        1
    } else {
        // Largest second difference of log-inertia, ties to the smallest k.
        let floor = 1e-12 * curve[0].1.max(1.0);
        let log_inertia: Vec<f64> = curve.iter().map(|(_, i)| i.max(floor).ln()).collect();
        let mut best_k = 2;
        let mut best = f64::NEG_INFINITY;
        for k in 2..k_max {
            let d2 = log_inertia[k - 2] - 2.0 * log_inertia[k - 1] + log_inertia[k];
            if d2 > best {
                best = d2;
                best_k = k;
            }
        }
        best_k
    };
    Ok(ElbowCurve {
        points: curve,
        selected_k,
    })
}

const SCORES_HEADER: [&str; 9] = [
    "company_id",
    "n_posts",
    "rating",
    "stress_fraction",
    "z_rating",
    "z_stress",
    "stress_type",
    "association",
    "sector",
];

pub fn write_scores_csv(scores: &[CompanyScore], path: &Path) -> Result<(), ScoringError> {
    let file = File::create(path).map_err(|e| ScoringError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, line: String| {
        writeln!(out, "{line}").map_err(|e| ScoringError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write(&mut out, SCORES_HEADER.join(","))?;
    for s in scores {
        write(
            &mut out,
            format!(
                "{},{},{},{},{},{},{},{},{}",
                s.company_id,
                s.n_posts,
                s.rating,
                s.stress_fraction,
                s.z_rating,
                s.z_stress,
                s.stress_type,
                s.association,
                s.sector.as_deref().unwrap_or("")
            ),
        )?;
    }
    out.flush().map_err(|e| ScoringError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Reads a scores CSV written by [`write_scores_csv`]. The trailing `sector`
/// column is optional; rows do not carry the scoring period.
pub fn read_scores_csv(path: &Path) -> Result<Vec<CompanyScore>, ScoringError> {
    let file = File::open(path).map_err(|e| ScoringError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| invalid_row(path, 1, &e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize, ScoringError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid_row(path, 1, &format!("missing required column `{name}`")))
    };
    let idx_company = col("company_id")?;
    let idx_posts = col("n_posts")?;
    let idx_rating = col("rating")?;
    let idx_stress = col("stress_fraction")?;
    let idx_zr = col("z_rating")?;
    let idx_zs = col("z_stress")?;
    let idx_type = col("stress_type")?;
    let idx_assoc = col("association")?;
    let idx_sector = headers.iter().position(|h| h.trim() == "sector");

    let mut scores = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| invalid_row(path, 0, &e.to_string()))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_f64 = |idx: usize, name: &str| -> Result<f64, ScoringError> {
            record
                .get(idx)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| invalid_row(path, row, &format!("unparsable {name}")))
        };
        let stress_type = record
            .get(idx_type)
            .ok_or_else(|| invalid_row(path, row, "missing stress_type"))?
            .parse::<StressType>()
            .map_err(|e| invalid_row(path, row, &e))?;
        scores.push(CompanyScore {
            company_id: record
                .get(idx_company)
                .ok_or_else(|| invalid_row(path, row, "missing company_id"))?
                .to_string(),
            period: (0, 0),
            n_posts: record
                .get(idx_posts)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| invalid_row(path, row, "unparsable n_posts"))?,
            rating: parse_f64(idx_rating, "rating")?,
            stress_fraction: parse_f64(idx_stress, "stress_fraction")?,
            z_rating: parse_f64(idx_zr, "z_rating")?,
            z_stress: parse_f64(idx_zs, "z_stress")?,
            stress_type,
            association: parse_f64(idx_assoc, "association")?,
            sector: idx_sector
                .and_then(|i| record.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from),
        });
    }
    Ok(scores)
}

fn invalid_row(path: &Path, row: u64, message: &str) -> ScoringError {
    ScoringError::InvalidRow {
        path: path.display().to_string(),
        row,
        message: message.to_string(),
    }
}

pub fn write_elbow_csv(curve: &ElbowCurve, path: &Path) -> Result<(), ScoringError> {
    let file = File::create(path).map_err(|e| ScoringError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| ScoringError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("k,inertia,selected".to_string())?;
    for (k, inertia) in &curve.points {
        write(format!(
            "{k},{inertia},{}",
            if *k == curve.selected_k { "true" } else { "false" }
        ))?;
    }
    Ok(())
}
