//! Stock-growth statistics per stress type.
//!
//! Growth is the ratio of yearly-average adjusted closing prices between an
//! end and a base year. Growth across companies is heavy-tailed, so bins are
//! summarized with the geometric mean and its geometric standard error.
//! Companies are grouped within each stress type into equal-count percentile
//! bins of their association weight (or rating, or raw stress fraction), and
//! the analysis can be restricted per GICS sector.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::StockSeries;
use crate::scoring::{CompanyScore, StressType};

#[derive(Debug, Error)]
pub enum FinanceError {
    #[error("geometric statistics need a non-empty list")]
    EmptyList,
    #[error("non-positive value {0} in geometric statistics")]
    NonPositive(f64),
    #[error("geometric standard error needs n >= 2, got {got}")]
    TooFewForGse { got: usize },
    #[error("bins must be >= 1")]
    ZeroBins,
    #[error("no companies left after joining scores with growth records")]
    EmptyJoin,
    #[error("no company carries sector metadata")]
    NoSectorMetadata,
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

/// One company's stock growth over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub company_id: String,
    pub horizon: (i32, i32),
    /// `yearly_avg(end) / yearly_avg(base)`, always > 0.
    pub growth: f64,
}

/// Growth ratio between the yearly average prices of two years. Returns
/// `None` (with a log entry) when either year has no observations.
pub fn stock_growth(series: &StockSeries, base_year: i32, end_year: i32) -> Option<GrowthRecord> {
    let base = series.yearly_average_price(base_year);
    let end = series.yearly_average_price(end_year);
    match (base, end) {
        (Some(base), Some(end)) => Some(GrowthRecord {
            company_id: series.company_id.clone(),
            horizon: (base_year, end_year),
            growth: end / base,
        }),
        _ => {
            log::info!(
                "company {}: no observations in {} for horizon {base_year}-{end_year}, omitted",
                series.company_id,
                if base.is_none() { base_year } else { end_year }
            );
            None
        }
    }
}

/// Growth records for every series that covers both years.
pub fn stock_growths(series: &[StockSeries], base_year: i32, end_year: i32) -> Vec<GrowthRecord> {
    series
        .iter()
        .filter_map(|s| stock_growth(s, base_year, end_year))
        .collect()
}

/// `exp` of the arithmetic mean of natural logs.
pub fn geometric_mean(values: &[f64]) -> Result<f64, FinanceError> {
    if values.is_empty() {
        return Err(FinanceError::EmptyList);
    }
    let mut log_sum = 0.0;
    for &v in values {
        if !(v > 0.0) {
            return Err(FinanceError::NonPositive(v));
        }
        log_sum += v.ln();
    }
    Ok((log_sum / values.len() as f64).exp())
}

/// `GM / sqrt(N)` times the sample standard deviation (divide-by-(n-1)) of
/// the natural-log values.
pub fn geometric_standard_error(values: &[f64]) -> Result<f64, FinanceError> {
    if values.len() < 2 {
        return Err(FinanceError::TooFewForGse { got: values.len() });
    }
    let gm = geometric_mean(values)?;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (logs.len() - 1) as f64;
    Ok(gm / (values.len() as f64).sqrt() * var.sqrt())
}

/// Ranking key for percentile binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    Association,
    StressFraction,
    Rating,
}

impl std::str::FromStr for RankBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "association" => Ok(RankBy::Association),
            "stress-fraction" | "stress_fraction" => Ok(RankBy::StressFraction),
            "rating" => Ok(RankBy::Rating),
            other => Err(format!("unknown ranking key `{other}`")),
        }
    }
}

/// Geometric-mean growth of one (group, percentile-bin) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthStat {
    /// Stress type, optionally prefixed by sector in per-sector reports.
    pub group: String,
    /// 1-based percentile bin, ascending in the ranking key.
    pub bin: usize,
    pub n: usize,
    pub gm: f64,
    /// 0 for singleton bins, where log dispersion cannot be estimated.
    pub gse: f64,
}

/// Per-type headline numbers across bins.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeGrowthSummary {
    pub stress_type: StressType,
    /// Mean of the per-bin geometric means.
    pub mean_bin_gm: f64,
    /// Geometric mean pooled over all of the type's companies.
    pub pooled_gm: f64,
    pub n_companies: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercentileGrowthReport {
    pub stats: Vec<GrowthStat>,
    pub summaries: Vec<TypeGrowthSummary>,
}

fn join_growth<'a>(
    scores: &'a [CompanyScore],
    growths: &'a [GrowthRecord],
) -> Vec<(&'a CompanyScore, f64)> {
    let by_company: BTreeMap<&str, f64> = growths
        .iter()
        .map(|g| (g.company_id.as_str(), g.growth))
        .collect();
    let mut joined: Vec<(&CompanyScore, f64)> = scores
        .iter()
        .filter_map(|s| {
            let growth = by_company.get(s.company_id.as_str()).copied();
            if growth.is_none() {
                log::debug!("company {}: no growth record, dropped from join", s.company_id);
            }
            growth.map(|g| (s, g))
        })
        .collect();
    joined.sort_by(|a, b| a.0.company_id.cmp(&b.0.company_id));
    joined
}

/// Splits `n` items into `bins` contiguous chunks whose sizes differ by at
/// most one, larger chunks first.
fn bin_sizes(n: usize, bins: usize) -> Vec<usize> {
    let base = n / bins;
    let rem = n % bins;
    (0..bins)
        .map(|i| if i < rem { base + 1 } else { base })
        .collect()
}

fn percentile_report(
    joined: &[(&CompanyScore, f64)],
    bins: usize,
    rank_by: RankBy,
    group_prefix: Option<&str>,
) -> Result<PercentileGrowthReport, FinanceError> {
    if bins == 0 {
        return Err(FinanceError::ZeroBins);
    }
    if joined.is_empty() {
        return Err(FinanceError::EmptyJoin);
    }
    let mut stats = Vec::new();
    let mut summaries = Vec::new();
    for stress_type in StressType::ALL {
        let mut members: Vec<(&CompanyScore, f64)> = joined
            .iter()
            .filter(|(s, _)| s.stress_type == stress_type)
            .copied()
            .collect();
        if members.is_empty() {
            continue;
        }
        let key = |s: &CompanyScore| match rank_by {
            RankBy::Association => s.association,
            RankBy::StressFraction => s.stress_fraction,
            RankBy::Rating => s.rating,
        };
        members.sort_by(|a, b| {
            key(a.0)
                .partial_cmp(&key(b.0))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.company_id.cmp(&b.0.company_id))
        });

        let group = match group_prefix {
            Some(prefix) => format!("{prefix}/{stress_type}"),
            None => stress_type.to_string(),
        };
        let mut offset = 0;
        let mut bin_gms = Vec::new();
        for (i, size) in bin_sizes(members.len(), bins).into_iter().enumerate() {
            if size == 0 {
                log::warn!("{group}: bin {} empty ({} companies, {bins} bins), omitted",
                    i + 1, members.len());
                continue;
            }
            let growths: Vec<f64> = members[offset..offset + size]
                .iter()
                .map(|(_, g)| *g)
                .collect();
            offset += size;
            let gm = geometric_mean(&growths)?;
            let gse = if growths.len() >= 2 {
                geometric_standard_error(&growths)?
            } else {
                0.0
            };
            bin_gms.push(gm);
            stats.push(GrowthStat {
                group: group.clone(),
                bin: i + 1,
                n: growths.len(),
                gm,
                gse,
            });
        }
        let all_growths: Vec<f64> = members.iter().map(|(_, g)| *g).collect();
        summaries.push(TypeGrowthSummary {
            stress_type,
            mean_bin_gm: bin_gms.iter().sum::<f64>() / bin_gms.len() as f64,
            pooled_gm: geometric_mean(&all_growths)?,
            n_companies: members.len(),
        });
    }
    if stats.is_empty() {
        return Err(FinanceError::EmptyJoin);
    }
    Ok(PercentileGrowthReport { stats, summaries })
}

/// Growth statistics per (stress type, association-percentile bin), plus
/// per-type across-bin and pooled geometric means.
pub fn growth_by_association_percentile(
    scores: &[CompanyScore],
    growths: &[GrowthRecord],
    bins: usize,
) -> Result<PercentileGrowthReport, FinanceError> {
    percentile_report(&join_growth(scores, growths), bins, RankBy::Association, None)
}

/// As [`growth_by_association_percentile`] with rating percentiles.
pub fn growth_by_rating_percentile(
    scores: &[CompanyScore],
    growths: &[GrowthRecord],
    bins: usize,
) -> Result<PercentileGrowthReport, FinanceError> {
    percentile_report(&join_growth(scores, growths), bins, RankBy::Rating, None)
}

/// Percentile analysis with a caller-chosen ranking key.
pub fn growth_by_percentile(
    scores: &[CompanyScore],
    growths: &[GrowthRecord],
    bins: usize,
    rank_by: RankBy,
) -> Result<PercentileGrowthReport, FinanceError> {
    percentile_report(&join_growth(scores, growths), bins, rank_by, None)
}

/// The association-percentile analysis restricted per sector. `sectors`
/// limits the report to the named GICS sectors; `None` covers every sector
/// present. Companies without sector metadata are skipped.
pub fn growth_by_sector(
    scores: &[CompanyScore],
    growths: &[GrowthRecord],
    sectors: Option<&[String]>,
    bins: usize,
) -> Result<Vec<(String, PercentileGrowthReport)>, FinanceError> {
    let joined = join_growth(scores, growths);
    let mut present: Vec<String> = joined
        .iter()
        .filter_map(|(s, _)| s.sector.clone())
        .collect();
    present.sort();
    present.dedup();
    if present.is_empty() {
        return Err(FinanceError::NoSectorMetadata);
    }
    let wanted: Vec<String> = match sectors {
        Some(list) => list.to_vec(),
        None => present,
    };

    let mut reports = Vec::new();
    for sector in wanted {
        let subset: Vec<(&CompanyScore, f64)> = joined
            .iter()
            .filter(|(s, _)| s.sector.as_deref() == Some(sector.as_str()))
            .copied()
            .collect();
        if subset.is_empty() {
            log::warn!("sector {sector}: no companies after join, omitted");
            continue;
        }
        match percentile_report(&subset, bins, RankBy::Association, Some(&sector)) {
            Ok(report) => reports.push((sector, report)),
            Err(FinanceError::EmptyJoin) => {
                log::warn!("sector {sector}: no scorable bins, omitted");
            }
            Err(e) => return Err(e),
        }
    }
    if reports.is_empty() {
        return Err(FinanceError::EmptyJoin);
    }
    Ok(reports)
}

/// Writes `group,bin,n,gm,gse` rows.
pub fn write_growth_csv(stats: &[GrowthStat], path: &Path) -> Result<(), FinanceError> {
    let file = File::create(path).map_err(|e| FinanceError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| FinanceError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("group,bin,n,gm,gse".to_string())?;
    for s in stats {
        write(format!("{},{},{},{},{}", s.group, s.bin, s.n, s.gm, s.gse))?;
    }
    Ok(())
}

/// Writes raw growth records (`company_id,base_year,end_year,growth`).
pub fn write_growth_records_csv(records: &[GrowthRecord], path: &Path) -> Result<(), FinanceError> {
    let file = File::create(path).map_err(|e| FinanceError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| FinanceError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("company_id,base_year,end_year,growth".to_string())?;
    for r in records {
        write(format!(
            "{},{},{},{}",
            r.company_id, r.horizon.0, r.horizon.1, r.growth
        ))?;
    }
    Ok(())
}

pub fn read_growth_records_csv(path: &Path) -> Result<Vec<GrowthRecord>, FinanceError> {
    let file = File::open(path).map_err(|e| FinanceError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new().from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| invalid_row(path, 1, &e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize, FinanceError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid_row(path, 1, &format!("missing required column `{name}`")))
    };
    let idx_company = col("company_id")?;
    let idx_base = col("base_year")?;
    let idx_end = col("end_year")?;
    let idx_growth = col("growth")?;
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| invalid_row(path, 0, &e.to_string()))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let growth: f64 = record[idx_growth]
            .trim()
            .parse()
            .map_err(|_| invalid_row(path, row, "unparsable growth"))?;
        if !(growth > 0.0) {
            return Err(invalid_row(path, row, &format!("non-positive growth {growth}")));
        }
        records.push(GrowthRecord {
            company_id: record[idx_company].trim().to_string(),
            horizon: (
                record[idx_base]
                    .trim()
                    .parse()
                    .map_err(|_| invalid_row(path, row, "unparsable base_year"))?,
                record[idx_end]
                    .trim()
                    .parse()
                    .map_err(|_| invalid_row(path, row, "unparsable end_year"))?,
            ),
            growth,
        });
    }
    Ok(records)
}

fn invalid_row(path: &Path, row: u64, message: &str) -> FinanceError {
    FinanceError::InvalidRow {
        path: path.display().to_string(),
        row,
        message: message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn series(company: &str, obs: &[(i32, u32, f64)]) -> StockSeries {
        StockSeries {
            company_id: company.to_string(),
            observations: obs
                .iter()
                .map(|&(year, month, price)| {
                    (NaiveDate::from_ymd_opt(year, month, 15).unwrap(), price)
                })
                .collect(),
        }
    }

    fn score(id: &str, stress_type: StressType, association: f64, rating: f64) -> CompanyScore {
        CompanyScore {
            company_id: id.to_string(),
            period: (2009, 2019),
            n_posts: 10,
            rating,
            stress_fraction: 0.01,
            z_rating: 0.0,
            z_stress: 0.0,
            stress_type,
            association,
            sector: None,
        }
    }

    #[test]
    fn stock_growth_examples() {
        let s = series("eqix", &[(2009, 6, 61.0), (2019, 1, 480.0), (2019, 7, 490.0)]);
        let record = stock_growth(&s, 2009, 2019).unwrap();
        assert!((record.growth - 485.0 / 61.0).abs() < 1e-9);
        assert!((record.growth - 7.9508).abs() < 1e-3);

        let flat = series("flat", &[(2009, 6, 100.0), (2019, 6, 100.0)]);
        assert_eq!(stock_growth(&flat, 2009, 2019).unwrap().growth, 1.0);

        let ratio = series("r", &[(2009, 6, 100.0), (2019, 6, 150.0)]);
        assert_eq!(stock_growth(&ratio, 2009, 2019).unwrap().growth, 1.5);

        // Missing base year: omitted.
        let gap = series("gap", &[(2019, 6, 100.0)]);
        assert!(stock_growth(&gap, 2009, 2019).is_none());
    }

    #[test]
    fn geometric_mean_classic_and_errors() {
        assert_eq!(geometric_mean(&[2.0, 8.0]).unwrap(), 4.0);
        assert!((geometric_mean(&[3.7]).unwrap() - 3.7).abs() < 1e-12);
        assert!(matches!(geometric_mean(&[]), Err(FinanceError::EmptyList)));
        assert!(matches!(
            geometric_mean(&[1.0, 0.0]),
            Err(FinanceError::NonPositive(_))
        ));
        assert!(matches!(
            geometric_mean(&[1.0, -2.0]),
            Err(FinanceError::NonPositive(_))
        ));
    }

    #[test]
    fn geometric_mean_matches_product_oracle() {
        // Oracle: direct product raised to 1/n, an independent route from
        // the exp-mean-log implementation.
        let mut state = 42u64;
        let mut values = Vec::new();
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            values.push((0.4 * (u - 0.5)).exp() * 2.0);
        }
        let product: f64 = values.iter().product();
        let oracle = product.powf(1.0 / values.len() as f64);
        let gm = geometric_mean(&values).unwrap();
        assert!((gm - oracle).abs() / oracle < 1e-9);
    }

    #[test]
    fn gse_examples() {
        assert_eq!(geometric_standard_error(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        // GM = 4, sample std of logs = sqrt(2) * ln 2, GSE = 4 ln 2.
        let gse = geometric_standard_error(&[2.0, 8.0]).unwrap();
        assert!((gse - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((gse - 2.7726).abs() < 1e-4);
        assert!(matches!(
            geometric_standard_error(&[2.0]),
            Err(FinanceError::TooFewForGse { got: 1 })
        ));
    }

    #[test]
    fn gse_scales_with_growth() {
        let base = [1.5, 2.5, 4.0, 7.0];
        let scaled: Vec<f64> = base.iter().map(|v| v * 3.0).collect();
        let a = geometric_standard_error(&base).unwrap();
        let b = geometric_standard_error(&scaled).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12);
    }

    #[test]
    fn constant_growth_fills_every_bin_with_same_gm() {
        let mut scores = Vec::new();
        let mut growths = Vec::new();
        for i in 0..12 {
            let id = format!("c{i:02}");
            scores.push(score(&id, StressType::PositiveStress, i as f64 * 0.1, 4.0));
            growths.push(GrowthRecord {
                company_id: id,
                horizon: (2009, 2019),
                growth: 2.5,
            });
        }
        let report = growth_by_association_percentile(&scores, &growths, 4).unwrap();
        assert_eq!(report.stats.len(), 4);
        for stat in &report.stats {
            assert!((stat.gm - 2.5).abs() < 1e-12);
            assert_eq!(stat.n, 3);
        }
        let summary = &report.summaries[0];
        assert!((summary.mean_bin_gm - 2.5).abs() < 1e-12);
        assert!((summary.pooled_gm - 2.5).abs() < 1e-12);
    }

    #[test]
    fn one_bin_reduces_to_pooled_gm() {
        let scores = vec![
            score("a", StressType::Passive, 0.5, 3.0),
            score("b", StressType::Passive, 1.0, 3.0),
        ];
        let growths = vec![
            GrowthRecord { company_id: "a".into(), horizon: (2009, 2019), growth: 2.0 },
            GrowthRecord { company_id: "b".into(), horizon: (2009, 2019), growth: 8.0 },
        ];
        let report = growth_by_association_percentile(&scores, &growths, 1).unwrap();
        assert_eq!(report.stats.len(), 1);
        assert_eq!(report.stats[0].gm, 4.0);
        assert_eq!(report.summaries[0].pooled_gm, 4.0);
        assert_eq!(report.summaries[0].mean_bin_gm, 4.0);
    }

    #[test]
    fn rating_percentiles_track_planted_monotone_growth() {
        // Growth rises with rating: bin GMs must be non-decreasing.
        let mut scores = Vec::new();
        let mut growths = Vec::new();
        for i in 0..20 {
            let id = format!("c{i:02}");
            let rating = 1.0 + i as f64 * 0.2;
            scores.push(score(&id, StressType::LowStress, 0.5, rating));
            growths.push(GrowthRecord {
                company_id: id,
                horizon: (2009, 2019),
                growth: 1.0 + rating,
            });
        }
        let report = growth_by_rating_percentile(&scores, &growths, 4).unwrap();
        for pair in report.stats.windows(2) {
            assert!(pair[1].gm >= pair[0].gm);
        }
    }

    #[test]
    fn sector_restriction_matches_unrestricted_when_single_sector() {
        let mut scores = Vec::new();
        let mut growths = Vec::new();
        for i in 0..8 {
            let id = format!("c{i}");
            let mut s = score(&id, StressType::PositiveStress, i as f64, 4.0);
            s.sector = Some("Information Technology".to_string());
            scores.push(s);
            growths.push(GrowthRecord {
                company_id: id,
                horizon: (2009, 2019),
                growth: 1.0 + i as f64 * 0.3,
            });
        }
        let unrestricted = growth_by_association_percentile(&scores, &growths, 2).unwrap();
        let by_sector = growth_by_sector(&scores, &growths, None, 2).unwrap();
        assert_eq!(by_sector.len(), 1);
        let sector_stats = &by_sector[0].1.stats;
        assert_eq!(sector_stats.len(), unrestricted.stats.len());
        for (a, b) in sector_stats.iter().zip(&unrestricted.stats) {
            assert_eq!(a.gm, b.gm);
            assert_eq!(a.n, b.n);
        }
    }

    #[test]
    fn two_sector_plant_matches_per_sector_oracle() {
        let mut scores = Vec::new();
        let mut growths = Vec::new();
        for (sector, base_growth) in [("Tech", 2.0), ("Retail", 1.2)] {
            for i in 0..6 {
                let id = format!("{sector}{i}");
                let mut s = score(&id, StressType::PositiveStress, i as f64, 4.0);
                s.sector = Some(sector.to_string());
                scores.push(s);
                growths.push(GrowthRecord {
                    company_id: id,
                    horizon: (2009, 2019),
                    growth: base_growth,
                });
            }
        }
        let reports = growth_by_sector(&scores, &growths, None, 2).unwrap();
        assert_eq!(reports.len(), 2);
        for (sector, report) in reports {
            let expected = if sector == "Tech" { 2.0 } else { 1.2 };
            assert!((report.summaries[0].pooled_gm - expected).abs() < 1e-12);
            for stat in &report.stats {
                assert!(stat.group.starts_with(&format!("{sector}/")));
            }
        }
    }

    #[test]
    fn missing_sector_metadata_is_an_error() {
        let scores = vec![score("a", StressType::Passive, 0.5, 3.0)];
        let growths = vec![GrowthRecord {
            company_id: "a".into(),
            horizon: (2009, 2019),
            growth: 2.0,
        }];
        assert!(matches!(
            growth_by_sector(&scores, &growths, None, 1),
            Err(FinanceError::NoSectorMetadata)
        ));
    }

    #[test]
    fn growth_records_roundtrip() {
        let records = vec![GrowthRecord {
            company_id: "acme".into(),
            horizon: (2009, 2019),
            growth: 3.25,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        write_growth_records_csv(&records, &path).unwrap();
        assert_eq!(read_growth_records_csv(&path).unwrap(), records);
    }

    proptest! {
        #[test]
        fn gm_permutation_invariant_homogeneous_below_am(
            values in proptest::collection::vec(0.1f64..50.0, 1..30),
            lambda in 0.1f64..10.0,
        ) {
            let gm = geometric_mean(&values).unwrap();
            let mut reversed = values.clone();
            reversed.reverse();
            prop_assert!((geometric_mean(&reversed).unwrap() - gm).abs() < 1e-9);

            let scaled: Vec<f64> = values.iter().map(|v| v * lambda).collect();
            let scaled_gm = geometric_mean(&scaled).unwrap();
            prop_assert!((scaled_gm - lambda * gm).abs() / (lambda * gm) < 1e-12);

            let am = values.iter().sum::<f64>() / values.len() as f64;
            prop_assert!(gm <= am + 1e-9 * am);
        }

        #[test]
        fn bins_partition_each_type(n in 1usize..40, bins in 1usize..8) {
            let sizes = bin_sizes(n, bins);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            let max = sizes.iter().max().unwrap();
            let min = sizes.iter().min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
