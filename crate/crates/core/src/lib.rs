//! Turns a stock-forum post dump and a daily price series into a per-day
//! sentiment index, smooths and aligns the two series, and quantifies their
//! dependence with the maximal information coefficient (MIC).
//!
//! The crate is organised along the pipeline stages:
//!
//! * [`corpus`] — post-dump parsing, text cleaning, deduplication and the
//!   per-day read-count cap.
//! * [`sentiment`] — per-post class probabilities (lexicon scorer or an
//!   external probability file), per-post scores and the daily index.
//! * [`series`] — price-bar loading, min-max normalization, trailing-window
//!   smoothing and calendar alignment.
//! * [`mic`] — the grid-search MIC estimator plus a small-n exhaustive
//!   reference used to verify it.
//! * [`pipeline`] — end-to-end orchestration, report and chart emission.

pub mod chart;
pub mod corpus;
pub mod mic;
pub mod pipeline;
pub mod sentiment;
pub mod series;
pub mod stats;

pub use corpus::{CorpusFilterConfig, ForumPost};
pub use mic::{CharacteristicMatrix, GridHistogram, MicConfig, MicResult, PointSet};
pub use pipeline::{AnalysisReport, PipelineConfig, PipelineRun};
pub use sentiment::{DailyIndexPoint, Lexicon, PostSentiment, SentimentLabel, SentimentScore};
pub use series::{AlignPolicy, AlignedSeries, PriceBar, Series};
pub use stats::SeriesStats;
