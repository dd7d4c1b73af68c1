//! Yearly stress-type scores.
//!
//! For each year, companies are re-scored with year-local z-scores, assigned
//! a quadrant, and their association weights are aggregated per type as a
//! post-volume-weighted sum: a company contributes its weight times its
//! share of that year's posts, so big reviewers count more. An unweighted
//! sensitivity variant (`w = 1`) and bootstrap uncertainty bands over
//! companies are included.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::IndicatorSeries;
use crate::scoring::{
    company_scores, score_companies, CompanyData, CompanyPeriodValues, ScoringError, StressType,
};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("no computable years in {start}..={end}")]
    NoComputableYears { start: i32, end: i32 },
    #[error("series and indicator year ranges are disjoint")]
    DisjointRanges,
    #[error("global membership scoring failed: {0}")]
    GlobalScoring(#[from] ScoringError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How a company's stress type is fixed when aggregating year `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipMode {
    /// Re-evaluate membership within each year from year-local z-scores.
    Yearly,
    /// Fix membership from the full period; year-local geometry still
    /// drives the association weight.
    Global,
}

impl std::str::FromStr for MembershipMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "yearly" => Ok(MembershipMode::Yearly),
            "global" => Ok(MembershipMode::Global),
            other => Err(format!("unknown membership mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TemporalOptions {
    pub weighted: bool,
    pub membership: MembershipMode,
    /// Bootstrap resamples over companies for the uncertainty bands.
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for TemporalOptions {
    fn default() -> Self {
        TemporalOptions {
            weighted: true,
            membership: MembershipMode::Yearly,
            bootstrap_resamples: 1000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearPoint {
    pub year: i32,
    pub score: f64,
    pub stderr: f64,
}

/// One stress type's score trajectory over the years.
#[derive(Debug, Clone, PartialEq)]
pub struct YearlySeries {
    pub stress_type: StressType,
    pub points: Vec<YearPoint>,
    pub weighted: bool,
}

/// Post-share weights per `(company, year)`: a company's share of all posts
/// written in that year. For every year the weights over posting companies
/// sum to 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearWeightTable {
    pub weights: BTreeMap<(String, i32), f64>,
}

impl YearWeightTable {
    pub fn get(&self, company_id: &str, year: i32) -> Option<f64> {
        self.weights.get(&(company_id.to_string(), year)).copied()
    }
}

/// Builds the post-share weight table for every year in `years`.
pub fn year_weight_table(data: &[CompanyData], years: RangeInclusive<i32>) -> YearWeightTable {
    let mut table = YearWeightTable::default();
    for year in years {
        let mut totals: Vec<(&str, u64)> = Vec::new();
        for company in data {
            if let Some(stats) = company.years.get(&year) {
                if stats.total_posts > 0 {
                    totals.push((&company.company_id, stats.total_posts));
                }
            }
        }
        let year_total: u64 = totals.iter().map(|(_, n)| n).sum();
        if year_total == 0 {
            continue;
        }
        for (company_id, n) in totals {
            table
                .weights
                .insert((company_id.to_string(), year), n as f64 / year_total as f64);
        }
    }
    table
}

/// The aggregation kernel: sums association weights times company weights.
pub fn aggregate_contributions(contributions: &[(f64, f64)]) -> f64 {
    contributions.iter().map(|(f, w)| f * w).sum()
}

/// One scored company inside one year, ready for aggregation.
#[derive(Debug, Clone)]
struct YearMember {
    stress_type: StressType,
    association: f64,
    posts: u64,
}

/// Computes one yearly series per stress type over `years`.
///
/// Years with fewer than two posting companies or zero variance on either
/// axis cannot be z-scored; they are skipped with a warning and their points
/// are omitted from every series. Within a computable year, a type with no
/// member companies scores 0. Standard errors come from a seeded bootstrap
/// over the year's posting companies.
pub fn yearly_scores(
    data: &[CompanyData],
    years: RangeInclusive<i32>,
    opts: &TemporalOptions,
) -> Result<Vec<YearlySeries>, TemporalError> {
    let global_types: Option<HashMap<String, StressType>> = match opts.membership {
        MembershipMode::Yearly => None,
        MembershipMode::Global => {
            let period = (*years.start(), *years.end());
            let (scores, _) = company_scores(data, period, None)?;
            Some(
                scores
                    .into_iter()
                    .map(|s| (s.company_id, s.stress_type))
                    .collect(),
            )
        }
    };

    let mut per_year: Vec<(i32, BTreeMap<StressType, (f64, f64)>)> = Vec::new();
    for year in years.clone() {
        match score_year(data, year, opts, global_types.as_ref()) {
            Some(scores) => per_year.push((year, scores)),
            None => log::warn!("year {year}: skipped (not z-scorable)"),
        }
    }
    if per_year.is_empty() {
        return Err(TemporalError::NoComputableYears {
            start: *years.start(),
            end: *years.end(),
        });
    }

    Ok(StressType::ALL
        .iter()
        .map(|&stress_type| YearlySeries {
            stress_type,
            points: per_year
                .iter()
                .map(|(year, by_type)| {
                    let (score, stderr) = by_type.get(&stress_type).copied().unwrap_or((0.0, 0.0));
                    YearPoint {
                        year: *year,
                        score,
                        stderr,
                    }
                })
                .collect(),
            weighted: opts.weighted,
        })
        .collect())
}

fn score_year(
    data: &[CompanyData],
    year: i32,
    opts: &TemporalOptions,
    global_types: Option<&HashMap<String, StressType>>,
) -> Option<BTreeMap<StressType, (f64, f64)>> {
    let mut values = Vec::new();
    for company in data {
        let Some(stats) = company.years.get(&year) else {
            continue;
        };
        if stats.total_posts == 0 {
            continue;
        }
        values.push(CompanyPeriodValues {
            company_id: company.company_id.clone(),
            sector: None,
            n_posts: stats.total_posts,
            rating: stats.rating_sum / stats.total_posts as f64,
            stress_fraction: stats.stress_posts as f64 / stats.total_posts as f64,
        });
    }
    if values.is_empty() {
        return None;
    }
    let (scores, _) = match score_companies(&values, (year, year)) {
        Ok(ok) => ok,
        Err(ScoringError::TooFewCompanies { .. })
        | Err(ScoringError::DegeneratePopulation { .. }) => return None,
        Err(e) => {
            log::warn!("year {year}: {e}");
            return None;
        }
    };

    let members: Vec<YearMember> = scores
        .iter()
        .map(|s| YearMember {
            stress_type: global_types
                .and_then(|g| g.get(&s.company_id).copied())
                .unwrap_or(s.stress_type),
            association: s.association,
            posts: s.n_posts,
        })
        .collect();

    let point_estimate = aggregate_members(members.iter().collect(), opts.weighted);
    let stderrs = bootstrap_stderr(&members, year, opts);

    Some(
        StressType::ALL
            .iter()
            .map(|&t| {
                let score = point_estimate.get(&t).copied().unwrap_or(0.0);
                let stderr = stderrs.get(&t).copied().unwrap_or(0.0);
                (t, (score, stderr))
            })
            .collect(),
    )
}

/// Aggregates a (re)sample of members into per-type scores. Weights are the
/// members' post shares within the sample, so each sample's weights sum to 1.
fn aggregate_members(sample: Vec<&YearMember>, weighted: bool) -> BTreeMap<StressType, f64> {
    let total_posts: u64 = sample.iter().map(|m| m.posts).sum();
    let mut by_type: BTreeMap<StressType, Vec<(f64, f64)>> = BTreeMap::new();
    for member in sample {
        let w = if weighted {
            member.posts as f64 / total_posts as f64
        } else {
            1.0
        };
        by_type
            .entry(member.stress_type)
            .or_default()
            .push((member.association, w));
    }
    by_type
        .into_iter()
        .map(|(t, contribs)| (t, aggregate_contributions(&contribs)))
        .collect()
}

fn bootstrap_stderr(
    members: &[YearMember],
    year: i32,
    opts: &TemporalOptions,
) -> BTreeMap<StressType, f64> {
    let reps = opts.bootstrap_resamples;
    if reps == 0 || members.is_empty() {
        return BTreeMap::new();
    }
    let n = members.len();
    // Each replicate derives its own seed, so parallel scheduling cannot
    // change the outcome.
    let samples: Vec<BTreeMap<StressType, f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, &[year as u64, rep as u64]));
            let sample: Vec<&YearMember> =
                (0..n).map(|_| &members[rng.random_range(0..n)]).collect();
            aggregate_members(sample, opts.weighted)
        })
        .collect();

    StressType::ALL
        .iter()
        .map(|&t| {
            let values: Vec<f64> = samples
                .iter()
                .map(|s| s.get(&t).copied().unwrap_or(0.0))
                .collect();
            let mean = values.iter().sum::<f64>() / reps as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
            (t, var.sqrt())
        })
        .collect()
}

/// One aligned row of the series-versus-indicator table.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub year: i32,
    pub scores: BTreeMap<StressType, f64>,
    pub indicator: Option<f64>,
}

/// Aligns yearly series with an indicator for plotting: one row per series
/// year, carrying the indicator value when present (no resampling). Errors
/// when the indicator covers none of the series years.
pub fn overlay_indicator(
    series: &[YearlySeries],
    indicator: &IndicatorSeries,
) -> Result<Vec<OverlayRow>, TemporalError> {
    let mut years: Vec<i32> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.year))
        .collect();
    years.sort_unstable();
    years.dedup();

    let rows: Vec<OverlayRow> = years
        .into_iter()
        .map(|year| {
            let scores = series
                .iter()
                .filter_map(|s| {
                    s.points
                        .iter()
                        .find(|p| p.year == year)
                        .map(|p| (s.stress_type, p.score))
                })
                .collect();
            OverlayRow {
                year,
                scores,
                indicator: indicator.value_for(year),
            }
        })
        .collect();
    if !rows.is_empty() && rows.iter().all(|r| r.indicator.is_none()) {
        return Err(TemporalError::DisjointRanges);
    }
    Ok(rows)
}

/// Writes `year,type,m,stderr` rows, years ascending within each type.
pub fn write_temporal_csv(series: &[YearlySeries], path: &Path) -> Result<(), TemporalError> {
    let file = File::create(path).map_err(|e| TemporalError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| TemporalError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("year,type,m,stderr".to_string())?;
    for s in series {
        for p in &s.points {
            write(format!("{},{},{},{}", p.year, s.stress_type, p.score, p.stderr))?;
        }
    }
    Ok(())
}

/// Writes the overlay table: one row per year, per-type scores plus the
/// indicator value (empty when absent).
pub fn write_overlay_csv(rows: &[OverlayRow], path: &Path) -> Result<(), TemporalError> {
    let file = File::create(path).map_err(|e| TemporalError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| TemporalError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("year,low_stress,passive,negative_stress,positive_stress,indicator".to_string())?;
    for row in rows {
        let cell = |t: StressType| {
            row.scores
                .get(&t)
                .map(|v| v.to_string())
                .unwrap_or_default()
        };
        write(format!(
            "{},{},{},{},{},{}",
            row.year,
            cell(StressType::LowStress),
            cell(StressType::Passive),
            cell(StressType::NegativeStress),
            cell(StressType::PositiveStress),
            row.indicator.map(|v| v.to_string()).unwrap_or_default()
        ))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::CompanyYearStats;

    fn company(id: &str, years: &[(i32, u64, u64, f64)]) -> CompanyData {
        CompanyData {
            company_id: id.to_string(),
            sector: None,
            years: years
                .iter()
                .map(|&(year, stress, total, rating_sum)| {
                    (
                        year,
                        CompanyYearStats {
                            stress_posts: stress,
                            total_posts: total,
                            rating_sum,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Four companies spread across all quadrants so every year is scorable.
    fn four_quadrant_data(years: &[i32]) -> Vec<CompanyData> {
        let mut data = Vec::new();
        // (id, stress per 10 posts, rating per post)
        let profiles = [
            ("low", 0u64, 4.8f64),
            ("pas", 1u64, 2.0f64),
            ("neg", 4u64, 1.5f64),
            ("pos", 5u64, 4.5f64),
        ];
        for (id, stress, rating) in profiles {
            let rows: Vec<(i32, u64, u64, f64)> = years
                .iter()
                .map(|&y| (y, stress, 10, rating * 10.0))
                .collect();
            data.push(company(id, &rows));
        }
        data
    }

    #[test]
    fn aggregation_worked_example() {
        // Two companies of one type: f1 = 1 with 30 of 100 posts,
        // f2 = 2 with 70 of 100 posts.
        assert_eq!(aggregate_contributions(&[(1.0, 0.3), (2.0, 0.7)]), 1.7);
        // Single company holding all posts.
        assert_eq!(aggregate_contributions(&[(0.5, 1.0)]), 0.5);
        assert_eq!(aggregate_contributions(&[]), 0.0);
    }

    #[test]
    fn weights_sum_to_one_per_year() {
        let data = four_quadrant_data(&[2010, 2011]);
        let table = year_weight_table(&data, 2010..=2011);
        for year in [2010, 2011] {
            let sum: f64 = table
                .weights
                .iter()
                .filter(|((_, y), _)| *y == year)
                .map(|(_, w)| w)
                .sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_posts_leaves_weights_and_scores_unchanged() {
        let base = four_quadrant_data(&[2010]);
        let doubled: Vec<CompanyData> = base
            .iter()
            .map(|c| CompanyData {
                company_id: c.company_id.clone(),
                sector: None,
                years: c
                    .years
                    .iter()
                    .map(|(&y, s)| {
                        (
                            y,
                            CompanyYearStats {
                                stress_posts: s.stress_posts * 2,
                                total_posts: s.total_posts * 2,
                                rating_sum: s.rating_sum * 2.0,
                            },
                        )
                    })
                    .collect(),
            })
            .collect();
        let opts = TemporalOptions {
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let a = yearly_scores(&base, 2010..=2010, &opts).unwrap();
        let b = yearly_scores(&doubled, 2010..=2010, &opts).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.stress_type, sb.stress_type);
            for (pa, pb) in sa.points.iter().zip(&sb.points) {
                assert!((pa.score - pb.score).abs() < 1e-12);
            }
        }
        let wa = year_weight_table(&base, 2010..=2010);
        let wb = year_weight_table(&doubled, 2010..=2010);
        assert_eq!(wa, wb);
    }

    #[test]
    fn unweighted_equals_direct_fold_of_associations() {
        let data = four_quadrant_data(&[2010]);
        let opts = TemporalOptions {
            weighted: false,
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2010, &opts).unwrap();

        // Direct fold: score each company for the year, sum f per type.
        let (scores, _) = company_scores(&data, (2010, 2010), None).unwrap();
        for s in &series {
            let direct: f64 = scores
                .iter()
                .filter(|c| c.stress_type == s.stress_type)
                .map(|c| c.association)
                .sum();
            assert!((s.points[0].score - direct).abs() < 1e-12);
            assert!(!s.weighted);
        }
    }

    #[test]
    fn weighted_scores_nonnegative_and_zero_for_absent_types() {
        let mut data = four_quadrant_data(&[2010]);
        // Remove the positive-stress company.
        data.retain(|c| c.company_id != "pos");
        let opts = TemporalOptions {
            bootstrap_resamples: 50,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2010, &opts).unwrap();
        for s in &series {
            for p in &s.points {
                assert!(p.score >= 0.0);
            }
        }
        // With three companies the quadrant layout shifts, but every company
        // holds exactly one type; at least one type must be empty.
        let zero_types = series.iter().filter(|s| s.points[0].score == 0.0).count();
        assert!(zero_types >= 1);
    }

    #[test]
    fn empty_and_degenerate_years_are_omitted() {
        // 2011 has only one posting company; 2012 has none.
        let mut data = four_quadrant_data(&[2010]);
        data[0].years.insert(
            2011,
            CompanyYearStats {
                stress_posts: 0,
                total_posts: 5,
                rating_sum: 20.0,
            },
        );
        let opts = TemporalOptions {
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2012, &opts).unwrap();
        for s in &series {
            assert_eq!(s.points.len(), 1);
            assert_eq!(s.points[0].year, 2010);
        }
    }

    #[test]
    fn all_years_uncomputable_is_an_error() {
        let data = vec![company("solo", &[(2010, 0, 5, 20.0)])];
        let opts = TemporalOptions::default();
        assert!(matches!(
            yearly_scores(&data, 2010..=2010, &opts),
            Err(TemporalError::NoComputableYears { .. })
        ));
    }

    #[test]
    fn bootstrap_is_deterministic_under_seed() {
        let data = four_quadrant_data(&[2010, 2011, 2012]);
        let opts = TemporalOptions {
            bootstrap_resamples: 200,
            seed: 99,
            ..Default::default()
        };
        let a = yearly_scores(&data, 2010..=2012, &opts).unwrap();
        let b = yearly_scores(&data, 2010..=2012, &opts).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            for (pa, pb) in sa.points.iter().zip(&sb.points) {
                assert_eq!(pa.stderr.to_bits(), pb.stderr.to_bits());
            }
        }
    }

    #[test]
    fn global_membership_uses_full_period_types() {
        let data = four_quadrant_data(&[2010, 2011]);
        let opts = TemporalOptions {
            membership: MembershipMode::Global,
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2011, &opts).unwrap();
        assert_eq!(series.len(), 4);
        for s in &series {
            assert_eq!(s.points.len(), 2);
        }
    }

    #[test]
    fn overlay_three_overlapping_years() {
        let data = four_quadrant_data(&[2010, 2011, 2012]);
        let opts = TemporalOptions {
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2012, &opts).unwrap();
        let indicator = IndicatorSeries {
            name: "unemployment".to_string(),
            points: vec![(2010, 9.6), (2011, 8.9), (2012, 8.1)],
        };
        let rows = overlay_indicator(&series, &indicator).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].indicator, Some(9.6));
        assert_eq!(rows[0].scores.len(), 4);
    }

    #[test]
    fn overlay_missing_year_and_disjoint_error() {
        let data = four_quadrant_data(&[2010, 2011, 2012]);
        let opts = TemporalOptions {
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2012, &opts).unwrap();
        let holey = IndicatorSeries {
            name: "x".to_string(),
            points: vec![(2010, 9.6), (2012, 8.1)],
        };
        let rows = overlay_indicator(&series, &holey).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].indicator, None);

        let disjoint = IndicatorSeries {
            name: "x".to_string(),
            points: vec![(1995, 5.6)],
        };
        assert!(matches!(
            overlay_indicator(&series, &disjoint),
            Err(TemporalError::DisjointRanges)
        ));
    }

    #[test]
    fn temporal_csv_layout() {
        let data = four_quadrant_data(&[2010]);
        let opts = TemporalOptions {
            bootstrap_resamples: 10,
            ..Default::default()
        };
        let series = yearly_scores(&data, 2010..=2010, &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("temporal.csv");
        write_temporal_csv(&series, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("year,type,m,stderr"));
        assert_eq!(lines.count(), 4);
    }
}
