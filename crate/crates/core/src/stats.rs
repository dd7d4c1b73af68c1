//! Statistical utilities shared across analyses: Pearson/Spearman
//! correlation, the minimum-review threshold sweep, and the three-model OLS
//! comparison with seeded bootstrap.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::finance::GrowthRecord;
use crate::scoring::{CompanyScore, StressType};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("length mismatch: {xs} xs vs {ys} ys")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero variance in {which}")]
    ZeroVariance { which: &'static str },
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("least-squares solve failed: {0}")]
    SolveFailed(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Standard product-moment correlation. Requires equal lengths, n >= 2, and
/// nonzero variance on both sides.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    // Single pass over raw sums; the test oracle recomputes with the
    // two-pass definition.
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let var_x = sxx - sx * sx / n;
    let var_y = syy - sy * sy / n;
    if var_x <= 0.0 {
        return Err(StatsError::ZeroVariance { which: "xs" });
    }
    if var_y <= 0.0 {
        return Err(StatsError::ZeroVariance { which: "ys" });
    }
    Ok((sxy - sx * sy / n) / (var_x * var_y).sqrt())
}

/// Average ranks (1-based); tied runs share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average-ranked data.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

impl CorrelationKind {
    fn compute(&self, xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
        match self {
            CorrelationKind::Pearson => pearson(xs, ys),
            CorrelationKind::Spearman => spearman(xs, ys),
        }
    }
}

/// One row of the minimum-review threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: u32,
    /// Companies with at least `r` reviews.
    pub n_companies: usize,
    /// rho(rating, association) over positive-stress companies; absent when
    /// fewer than 3 remain or the correlation degenerates.
    pub rho_positive: Option<f64>,
    pub rho_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub rows: Vec<SweepRow>,
    /// Threshold with the largest jump in `rho_positive` between
    /// consecutive computable rows; the whole curve is emitted so callers
    /// can override.
    pub selected_r: u32,
}

/// For each `r = 1..=r_max`, restricts to companies with at least `r`
/// reviews and correlates rating with association separately over
/// positive-stress and negative-stress companies.
pub fn threshold_sweep(
    scores: &[CompanyScore],
    r_max: u32,
    kind: CorrelationKind,
) -> ThresholdSweep {
    let correlate = |subset: &[&CompanyScore], stress_type: StressType| -> Option<f64> {
        let members: Vec<&&CompanyScore> = subset
            .iter()
            .filter(|s| s.stress_type == stress_type)
            .collect();
        if members.len() < 3 {
            return None;
        }
        let ratings: Vec<f64> = members.iter().map(|s| s.rating).collect();
        let associations: Vec<f64> = members.iter().map(|s| s.association).collect();
        kind.compute(&ratings, &associations).ok()
    };

    let mut rows = Vec::with_capacity(r_max as usize);
    for r in 1..=r_max {
        let subset: Vec<&CompanyScore> =
            scores.iter().filter(|s| s.n_posts >= r as u64).collect();
        rows.push(SweepRow {
            r,
            n_companies: subset.len(),
            rho_positive: correlate(&subset, StressType::PositiveStress),
            rho_negative: correlate(&subset, StressType::NegativeStress),
        });
    }

    let mut selected_r = 1;
    let mut best_jump = f64::NEG_INFINITY;
    for pair in rows.windows(2) {
        if let (Some(prev), Some(curr)) = (pair[0].rho_positive, pair[1].rho_positive) {
            let jump = (curr - prev).abs();
            if jump > best_jump {
                best_jump = jump;
                selected_r = pair[1].r;
            }
        }
    }
    ThresholdSweep { rows, selected_r }
}

pub fn write_sweep_csv(sweep: &ThresholdSweep, path: &Path) -> Result<(), StatsError> {
    let file = File::create(path).map_err(|e| StatsError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| StatsError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("r,n_companies,rho_positive,rho_negative,selected".to_string())?;
    for row in &sweep.rows {
        write(format!(
            "{},{},{},{},{}",
            row.r,
            row.n_companies,
            row.rho_positive.map(|v| v.to_string()).unwrap_or_default(),
            row.rho_negative.map(|v| v.to_string()).unwrap_or_default(),
            if row.r == sweep.selected_r { "true" } else { "false" },
        ))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OlsModelId {
    /// Control plus rating (baseline).
    MR,
    /// Control plus association.
    MS,
    /// Control plus both.
    MRS,
}

impl std::fmt::Display for OlsModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            OlsModelId::MR => "M_r",
            OlsModelId::MS => "M_s",
            OlsModelId::MRS => "M_rs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsReport {
    pub model: OlsModelId,
    /// `(name, estimate)`, intercept first.
    pub coefficients: Vec<(String, f64)>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    pub bootstrap_mean_adj_r2: Option<f64>,
    pub bootstrap_std_adj_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsComparison {
    pub reports: Vec<OlsReport>,
    /// Relative adjusted-R^2 gain of `M_s` over the `M_r` baseline
    /// (bootstrap means when available).
    pub gain_s_over_r: f64,
    pub gain_rs_over_r: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OlsOptions {
    pub seed: u64,
    /// Regress the natural log of growth (growth is log-normal); the raw
    /// value sits behind this flag.
    pub log_growth: bool,
    pub bootstrap_reps: usize,
    pub bootstrap_subsample: usize,
    /// Bootstrap runs only when the joined sample reaches this size.
    pub bootstrap_min_n: usize,
}

impl Default for OlsOptions {
    fn default() -> Self {
        OlsOptions {
            seed: 7,
            log_growth: true,
            bootstrap_reps: 10,
            bootstrap_subsample: 120,
            bootstrap_min_n: 130,
        }
    }
}

/// One joined observation for the OLS comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSample {
    pub company_id: String,
    pub growth: f64,
    pub rating: f64,
    pub association: f64,
    pub n_posts: u64,
}

/// Joins scores with growth records on company id, sorted by id.
pub fn join_ols_samples(scores: &[CompanyScore], growths: &[GrowthRecord]) -> Vec<OlsSample> {
    let by_company: std::collections::BTreeMap<&str, f64> = growths
        .iter()
        .map(|g| (g.company_id.as_str(), g.growth))
        .collect();
    let mut samples: Vec<OlsSample> = scores
        .iter()
        .filter(|s| s.n_posts > 0)
        .filter_map(|s| {
            by_company.get(s.company_id.as_str()).map(|&growth| OlsSample {
                company_id: s.company_id.clone(),
                growth,
                rating: s.rating,
                association: s.association,
                n_posts: s.n_posts,
            })
        })
        .collect();
    samples.sort_by(|a, b| a.company_id.cmp(&b.company_id));
    samples
}

struct OlsFit {
    coefficients: Vec<(String, f64)>,
    r_squared: f64,
    adjusted_r_squared: f64,
}

/// Least squares via SVD after a Gram-Schmidt rank check that names the
/// collinear columns.
fn fit_ols(y: &[f64], columns: &[(&str, Vec<f64>)]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p_total = columns.len() + 1;
    if n < p_total + 1 {
        return Err(StatsError::TooFewSamples {
            needed: p_total + 1,
            got: n,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut collinear = Vec::new();
    for (name, col) in columns {
        let mut residual = col.clone();
        for b in &basis {
            let proj: f64 = residual.iter().zip(b).map(|(r, b)| r * b).sum();
            for (r, b) in residual.iter_mut().zip(b) {
                *r -= proj * b;
            }
        }
        let norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
        let col_norm = col.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
        if norm < 1e-10 * col_norm {
            collinear.push(name.to_string());
        } else {
            basis.push(residual.iter().map(|r| r / norm).collect());
        }
    }
    if !collinear.is_empty() {
        return Err(StatsError::RankDeficient { columns: collinear });
    }

    let x = DMatrix::from_fn(n, p_total, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1].1[i]
        }
    });
    let yv = DVector::from_column_slice(y);
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(StatsError::SolveFailed)?;

    let fitted = &x * &beta;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if sst <= 0.0 {
        return Err(StatsError::ZeroVariance {
            which: "dependent variable",
        });
    }
    let ssr: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(v, f)| (v - f).powi(2))
        .sum();
    let r_squared = 1.0 - ssr / sst;
    let p = p_total - 1;
    let adjusted_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0);

    let mut coefficients = vec![("intercept".to_string(), beta[0])];
    for (j, (name, _)) in columns.iter().enumerate() {
        coefficients.push((name.to_string(), beta[j + 1]));
    }
    Ok(OlsFit {
        coefficients,
        r_squared,
        adjusted_r_squared,
    })
}

fn model_columns<'a>(
    model: OlsModelId,
    log_n: &'a [f64],
    ratings: &'a [f64],
    associations: &'a [f64],
) -> Vec<(&'static str, Vec<f64>)> {
    let mut cols: Vec<(&'static str, Vec<f64>)> = vec![("log_n_posts", log_n.to_vec())];
    match model {
        OlsModelId::MR => cols.push(("rating", ratings.to_vec())),
        OlsModelId::MS => cols.push(("association", associations.to_vec())),
        OlsModelId::MRS => {
            cols.push(("rating", ratings.to_vec()));
            cols.push(("association", associations.to_vec()));
        }
    }
    cols
}

/// Fits the three models (control = log review count in all of them),
/// bootstraps adjusted R^2 with seeded subsamples drawn without
/// replacement, and reports the relative gains of `M_s` and `M_rs` over the
/// `M_r` baseline.
pub fn ols_compare(samples: &[OlsSample], opts: &OlsOptions) -> Result<OlsComparison, StatsError> {
    let y: Vec<f64> = samples
        .iter()
        .map(|s| if opts.log_growth { s.growth.ln() } else { s.growth })
        .collect();
    let log_n: Vec<f64> = samples.iter().map(|s| (s.n_posts as f64).ln()).collect();
    let ratings: Vec<f64> = samples.iter().map(|s| s.rating).collect();
    let associations: Vec<f64> = samples.iter().map(|s| s.association).collect();

    let subsample_adj = |indices: &[usize], model: OlsModelId| -> Result<f64, StatsError> {
        let pick = |v: &[f64]| -> Vec<f64> { indices.iter().map(|&i| v[i]).collect() };
        let sub_y = pick(&y);
        let sub_cols: Vec<(&str, Vec<f64>)> =
            model_columns(model, &pick(&log_n), &pick(&ratings), &pick(&associations));
        Ok(fit_ols(&sub_y, &sub_cols)?.adjusted_r_squared)
    };

    let run_bootstrap = samples.len() >= opts.bootstrap_min_n
        && opts.bootstrap_reps > 0
        && opts.bootstrap_subsample < samples.len();
    let mut replicate_indices: Vec<Vec<usize>> = Vec::new();
    if run_bootstrap {
        for rep in 0..opts.bootstrap_reps {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, &[rep as u64]));
            let chosen =
                rand::seq::index::sample(&mut rng, samples.len(), opts.bootstrap_subsample);
            let mut indices = chosen.into_vec();
            indices.sort_unstable();
            replicate_indices.push(indices);
        }
    }

    let mut reports = Vec::new();
    for model in [OlsModelId::MR, OlsModelId::MS, OlsModelId::MRS] {
        let cols = model_columns(model, &log_n, &ratings, &associations);
        let fit = fit_ols(&y, &cols)?;
        let (boot_mean, boot_std) = if run_bootstrap {
            let adjs: Vec<f64> = replicate_indices
                .iter()
                .map(|indices| subsample_adj(indices, model))
                .collect::<Result<_, _>>()?;
            let mean = adjs.iter().sum::<f64>() / adjs.len() as f64;
            let var = adjs.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
                / (adjs.len() - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        } else {
            (None, None)
        };
        reports.push(OlsReport {
            model,
            coefficients: fit.coefficients,
            r_squared: fit.r_squared,
            adjusted_r_squared: fit.adjusted_r_squared,
            n: samples.len(),
            bootstrap_mean_adj_r2: boot_mean,
            bootstrap_std_adj_r2: boot_std,
        });
    }

    let headline = |report: &OlsReport| {
        report
            .bootstrap_mean_adj_r2
            .unwrap_or(report.adjusted_r_squared)
    };
    let baseline = headline(&reports[0]);
    let gain = |report: &OlsReport| (headline(report) - baseline) / baseline;
    let comparison = OlsComparison {
        gain_s_over_r: gain(&reports[1]),
        gain_rs_over_r: gain(&reports[2]),
        reports,
    };
    Ok(comparison)
}

/// Writes one row per (model, coefficient); model-level statistics repeat on
/// each of the model's rows.
pub fn write_ols_csv(comparison: &OlsComparison, path: &Path) -> Result<(), StatsError> {
    let file = File::create(path).map_err(|e| StatsError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| StatsError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write(
        "model,term,coefficient,r_squared,adj_r_squared,bootstrap_mean_adj_r2,bootstrap_std_adj_r2,n"
            .to_string(),
    )?;
    for report in &comparison.reports {
        for (term, estimate) in &report.coefficients {
            write(format!(
                "{},{},{},{},{},{},{},{}",
                report.model,
                term,
                estimate,
                report.r_squared,
                report.adjusted_r_squared,
                report
                    .bootstrap_mean_adj_r2
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                report
                    .bootstrap_std_adj_r2
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                report.n,
            ))?;
        }
    }
    Ok(())
}
