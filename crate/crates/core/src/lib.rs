#![forbid(unsafe_code)]

//! Analytics over employee-review corpora: classify companies into four
//! workplace-stress types from review ratings and stress-condition mentions,
//! track the prevalence of each type over the years, extract characteristic
//! keywords per type, and relate stress type to long-term stock growth.
//!
//! The crate is organized as a pipeline:
//!
//! - [`corpus`]: ingest and validate reviews, stock series, and indicators
//! - [`extractor`]: lexicon-based stress-mention detection plus a strict/relaxed
//!   F1 harness for scoring any extractor against span-labeled ground truth
//! - [`scoring`]: per-company rating/stress z-scores, quadrant assignment,
//!   association weights, and cosine k-means quadrant validation
//! - [`temporal`]: yearly stress-type scores with post-volume weights
//! - [`topics`]: class-based TF-IDF keywords, overlap, and chi-square tests
//! - [`finance`]: stock growth, geometric means, and percentile-bin statistics
//! - [`stats`]: correlations, threshold sweeps, and OLS model comparison
//! - [`synth`]: seeded synthetic corpora with planted ground truth
//! - [`pipeline`]: end-to-end orchestration, config, manifest, and replay
//!
//! Everything is deterministic: random procedures take explicit seeds, and
//! aggregations run in sorted order so repeated runs produce identical bytes.

pub mod corpus;
pub mod extractor;
pub mod finance;
pub mod pipeline;
pub mod scoring;
pub mod stats;
pub mod synth;
pub mod temporal;
pub mod topics;
pub mod util;

pub use corpus::{Company, Corpus, IndicatorSeries, Review, ReviewDate, StockSeries};
pub use extractor::{F1Report, MentionSpan, StressLexicon};
pub use scoring::{CompanyScore, PopulationStats, StressType};
