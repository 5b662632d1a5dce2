//! Links patent non-patent references (NPRs) to bibliographic records and
//! computes comparative citation-dynamics metrics over the two resulting
//! citation channels: citations from patents and citations from other papers.
//!
//! The pipeline has five stages, each usable as a library module:
//!
//! 1. [`ingest`] — load and validate the three input corpora (patents,
//!    bibliographic records, paper-to-paper citation edges) and build the
//!    lookup index used by the matcher.
//! 2. [`parser`] — segment a raw reference string into bibliographic fields
//!    with a deterministic heuristic parser behind a pluggable trait.
//! 3. [`matcher`] — resolve references to records via a three-stage cascade
//!    (whole-string resolver, exact 5-field lookup, 4-of-5-field fallbacks)
//!    and evaluate match quality against hand-labeled data.
//! 4. [`metrics`] — build per-paper yearly citation curves for both channels
//!    and compute totals, Beauty Coefficients, temporal profiles, and
//!    cross-channel lags.
//! 5. [`stats`] / [`report`] — corpus-level statistics (survival functions,
//!    power-law fits, rank correlation, top-percentile overlap, binned
//!    heat maps, CDFs) and cohort group-by reports.

pub mod ingest;
pub mod matcher;
pub mod metrics;
pub mod normalize;
pub mod parser;
pub mod report;
pub mod stats;

pub use ingest::{
    BibIndex, BibRecord, CitationEdge, Corpus, DocType, DropField, PatentRecord, Resolver,
};
pub use matcher::{ConfusionMatrix, MatchOutcome, MatchResult, MatchStage, Matcher};
pub use metrics::{BeautyScore, Channel, CitationCurve, LagProfile, MetricsRow, TemporalProfile};
pub use parser::{Author, LabeledReference, ParsedReference, ReferenceParser};
pub use stats::{CdfTable, Histogram2D, OverlapPoint, PowerLawFit, SurvivalCurve};

/// Library version, embedded in artifact headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default observation horizon year `T`.
pub const DEFAULT_HORIZON_YEAR: i32 = 2013;

/// Lowest publication year accepted anywhere in the pipeline.
pub const MIN_YEAR: i32 = 1800;

/// Earliest patent grant year with available front-page data.
pub const MIN_GRANT_YEAR: i32 = 1976;
