//! End-to-end orchestration: ingest -> score -> daily index -> align ->
//! smooth -> MIC, with every intermediate persisted so any stage can be
//! re-run in isolation, plus the JSON report and the two overlay charts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chart::{self, ChartSeries};
use crate::corpus::{self, CorpusError, CorpusFilterConfig, ForumPost};
use crate::mic::{self, MicConfig, MicError, MicResult};
use crate::sentiment::{self, DailyIndexPoint, ScoredPost, SentimentError};
use crate::series::{self, AlignPolicy, AlignedSeries, PriceBar, Series, SeriesError};
use crate::stats::{compute_series_stats, SeriesStats};

/// Error of one pipeline stage, carrying the stage name and, when relevant,
/// the offending file.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub path: Option<PathBuf>,
    pub source: StageError,
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Mic(#[from] MicError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Config(String),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{} stage ({}): {}", self.stage, p.display(), self.source),
            None => write!(f, "{} stage: {}", self.stage, self.source),
        }
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

fn stage_err(
    stage: &'static str,
    path: Option<&Path>,
    source: impl Into<StageError>,
) -> PipelineError {
    PipelineError {
        stage,
        path: path.map(Path::to_path_buf),
        source: source.into(),
    }
}

/// Which scorer feeds the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSource {
    Lexicon(PathBuf),
    External(PathBuf),
}

impl ScorerSource {
    pub fn kind(&self) -> &'static str {
        match self {
            ScorerSource::Lexicon(_) => "lexicon",
            ScorerSource::External(_) => "external",
        }
    }
}

/// Full pipeline configuration (see the README for the config-file keys).
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub posts_path: PathBuf,
    pub prices_path: PathBuf,
    pub scorer: ScorerSource,
    pub output_dir: PathBuf,
    pub filter: CorpusFilterConfig,
    pub window: usize,
    pub min_obs: usize,
    pub align_policy: AlignPolicy,
    pub mic: MicConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| stage_err("config", None, StageError::Config(msg));
        if self.posts_path.as_os_str().is_empty()
            || self.prices_path.as_os_str().is_empty()
            || self.output_dir.as_os_str().is_empty()
        {
            return Err(bad("paths must not be empty".into()));
        }
        self.filter.validate().map_err(|m| bad(m))?;
        if self.window == 0 {
            return Err(bad("window must be at least 1".into()));
        }
        if self.min_obs == 0 || self.min_obs > self.window {
            return Err(bad(format!(
                "min_obs must be in 1..=window, got {} with window {}",
                self.min_obs, self.window
            )));
        }
        self.mic
            .validate()
            .map_err(|e| stage_err("config", None, e))?;
        Ok(())
    }
}

/// Parses the plain-text `key = value` config format. Blank lines and lines
/// starting with `#` are skipped; relative paths resolve against `base_dir`;
/// `fallback_output_dir` supplies `output_dir` when the file omits it.
pub fn parse_config_file(
    text: &str,
    base_dir: &Path,
    fallback_output_dir: Option<PathBuf>,
) -> Result<PipelineConfig, PipelineError> {
    let bad = |msg: String| stage_err("config", None, StageError::Config(msg));

    let mut values: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        if values.insert(key, value).is_some() {
            return Err(bad(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }

    const KNOWN: &[&str] = &[
        "posts_path",
        "prices_path",
        "lexicon_path",
        "probs_path",
        "output_dir",
        "filter.max_chars",
        "filter.top_per_day",
        "window",
        "min_obs",
        "align_policy",
        "mic.alpha",
        "mic.min_b",
        "mic.clumping_factor",
    ];
    for key in values.keys() {
        if !KNOWN.contains(key) {
            return Err(bad(format!("unknown key '{key}'")));
        }
    }

    let path_of = |v: &str| -> PathBuf {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base_dir.join(p)
        }
    };
    let required = |key: &str| -> Result<&str, PipelineError> {
        values
            .get(key)
            .copied()
            .ok_or_else(|| bad(format!("missing key '{key}'")))
    };
    fn parse_num<T: std::str::FromStr>(
        key: &str,
        v: &str,
        bad: impl Fn(String) -> PipelineError,
    ) -> Result<T, PipelineError> {
        v.parse::<T>()
            .map_err(|_| bad(format!("bad value '{v}' for '{key}'")))
    }

    let scorer = match (values.get("lexicon_path"), values.get("probs_path")) {
        (Some(&lex), None) => ScorerSource::Lexicon(path_of(lex)),
        (None, Some(&probs)) => ScorerSource::External(path_of(probs)),
        (Some(_), Some(_)) => {
            return Err(bad("give exactly one of lexicon_path / probs_path, not both".into()))
        }
        (None, None) => {
            return Err(bad("give exactly one of lexicon_path / probs_path".into()))
        }
    };

    let output_dir = match values.get("output_dir") {
        Some(&dir) => path_of(dir),
        None => fallback_output_dir
            .ok_or_else(|| bad("output_dir not in config and no --out-dir/SENTMIC_OUTPUT_DIR".into()))?,
    };

    let mut filter = CorpusFilterConfig::default();
    if let Some(&v) = values.get("filter.max_chars") {
        filter.max_chars = parse_num("filter.max_chars", v, bad)?;
    }
    if let Some(&v) = values.get("filter.top_per_day") {
        filter.top_per_day = parse_num("filter.top_per_day", v, bad)?;
    }

    let mut mic_cfg = MicConfig::default();
    if let Some(&v) = values.get("mic.alpha") {
        mic_cfg.alpha = parse_num("mic.alpha", v, bad)?;
    }
    if let Some(&v) = values.get("mic.min_b") {
        mic_cfg.min_b = parse_num("mic.min_b", v, bad)?;
    }
    if let Some(&v) = values.get("mic.clumping_factor") {
        mic_cfg.clumping_factor = parse_num("mic.clumping_factor", v, bad)?;
    }

    let align_policy = match values.get("align_policy") {
        Some(&v) => AlignPolicy::parse(v)
            .ok_or_else(|| bad(format!("align_policy must be next|drop, got '{v}'")))?,
        None => AlignPolicy::NextTradingDay,
    };

    let config = PipelineConfig {
        posts_path: path_of(required("posts_path")?),
        prices_path: path_of(required("prices_path")?),
        scorer,
        output_dir,
        filter,
        window: match values.get("window") {
            Some(&v) => parse_num("window", v, bad)?,
            None => 30,
        },
        min_obs: match values.get("min_obs") {
            Some(&v) => parse_num("min_obs", v, bad)?,
            None => 1,
        },
        align_policy,
        mic: mic_cfg,
    };
    config.validate()?;
    Ok(config)
}

/// Analysis-stage knobs shared by `analyze` and `pipeline`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeParams {
    pub window: usize,
    pub min_obs: usize,
    pub align_policy: AlignPolicy,
    pub mic: MicConfig,
}

/// Echo of the configuration under which a report was produced. Paths are
/// deliberately excluded so identical inputs give identical bytes wherever
/// the files live; ingest parameters appear only when the producing command
/// knew them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_chars: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_per_day: Option<usize>,
    pub window: usize,
    pub min_obs: usize,
    pub align_policy: String,
    pub alpha: f64,
    pub min_b: usize,
    pub clumping_factor: usize,
}

/// SHA-256 digests (lowercase hex) of the pipeline inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigests {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posts_sha256: Option<String>,
    pub prices_sha256: String,
}

/// The report payload of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub mic: MicResult,
    pub stats: BTreeMap<String, SeriesStats>,
    pub config: ConfigEcho,
    pub inputs: InputDigests,
}

/// A report plus the series it summarizes, everything emit needs.
#[derive(Debug, Clone)]
pub struct AnalysisArtifacts {
    pub report: AnalysisReport,
    pub aligned_raw: AlignedSeries,
    pub aligned_smoothed: AlignedSeries,
}

/// What a pipeline run produced.
#[derive(Debug)]
pub struct PipelineRun {
    pub report: AnalysisReport,
    pub written: Vec<PathBuf>,
    /// Set when chart emission failed but the report was written.
    pub partial_outputs: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Ingest stage: parse the dump and run the cleaning/filter chain.
pub fn stage_ingest(
    posts_path: &Path,
    filter: &CorpusFilterConfig,
) -> Result<(Vec<ForumPost>, String), PipelineError> {
    let bytes = fs::read(posts_path).map_err(|e| stage_err("ingest", Some(posts_path), e))?;
    let digest = sha256_hex(&bytes);
    let posts =
        corpus::parse_posts(&bytes[..]).map_err(|e| stage_err("ingest", Some(posts_path), e))?;
    Ok((corpus::ingest(posts, filter), digest))
}

/// Score stage: lexicon scoring or external probability attachment.
pub fn stage_score(
    posts: &[ForumPost],
    scorer: &ScorerSource,
) -> Result<Vec<ScoredPost>, PipelineError> {
    match scorer {
        ScorerSource::Lexicon(path) => {
            let file = fs::File::open(path).map_err(|e| stage_err("score", Some(path), e))?;
            let lexicon =
                sentiment::load_lexicon(file).map_err(|e| stage_err("score", Some(path), e))?;
            sentiment::score_posts_with_lexicon(posts, &lexicon)
                .map_err(|e| stage_err("score", Some(path), e))
        }
        ScorerSource::External(path) => {
            let file = fs::File::open(path).map_err(|e| stage_err("score", Some(path), e))?;
            let scores = sentiment::load_external_scores(file)
                .map_err(|e| stage_err("score", Some(path), e))?;
            sentiment::score_posts_with_external(posts, &scores)
                .map_err(|e| stage_err("score", Some(path), e))
        }
    }
}

/// Index stage: per-day mean sentiment.
pub fn stage_index(scored: &[ScoredPost]) -> Vec<DailyIndexPoint> {
    let sentiments: Vec<sentiment::PostSentiment> = scored
        .iter()
        .map(|s| sentiment::PostSentiment {
            post_id: s.post_id.clone(),
            posted_at: s.posted_at,
            value: s.score.sentiment(),
        })
        .collect();
    sentiment::daily_index(&sentiments)
}

/// Loads and validates the price file, returning bars plus the file digest.
pub fn load_prices(prices_path: &Path) -> Result<(Vec<PriceBar>, String), PipelineError> {
    let bytes = fs::read(prices_path).map_err(|e| stage_err("align", Some(prices_path), e))?;
    let digest = sha256_hex(&bytes);
    let bars =
        series::load_price_bars(&bytes[..]).map_err(|e| stage_err("align", Some(prices_path), e))?;
    Ok((bars, digest))
}

/// Align stage: index points onto the trading calendar, post-count weighted.
pub fn stage_align(
    index: &[DailyIndexPoint],
    bars: &[PriceBar],
    policy: AlignPolicy,
) -> Result<AlignedSeries, PipelineError> {
    let err = |e| stage_err("align", None, StageError::Series(e));
    let sentiment_series = Series::new(
        "sentiment",
        index.iter().map(|p| (p.date, p.emotions)).collect(),
    )
    .map_err(err)?;
    let weights: Vec<f64> = index.iter().map(|p| p.n_posts as f64).collect();
    let price_series = series::close_series(bars).map_err(err)?;
    series::align_series(&sentiment_series, Some(&weights), &price_series, policy).map_err(err)
}

/// Analysis stage: align, smooth both columns, compute MIC and the stats.
pub fn stage_analyze(
    index: &[DailyIndexPoint],
    bars: &[PriceBar],
    params: &AnalyzeParams,
    config: ConfigEcho,
    inputs: InputDigests,
) -> Result<AnalysisArtifacts, PipelineError> {
    let aligned_raw = stage_align(index, bars, params.align_policy)?;
    let smooth_err = |e| stage_err("analyze", None, StageError::Series(e));

    let smooth = |name: &str, values: &[f64]| -> Result<Series, PipelineError> {
        let s = Series::new(
            name,
            aligned_raw
                .dates
                .iter()
                .copied()
                .zip(values.iter().copied())
                .collect(),
        )
        .map_err(smooth_err)?;
        series::rolling_mean(&s, params.window, params.min_obs).map_err(smooth_err)
    };
    let avg_sentiment = smooth("avg_sentiment", &aligned_raw.sentiment)?;
    let avg_price = smooth("avg_price", &aligned_raw.price)?;
    let aligned_smoothed = AlignedSeries::new(
        avg_sentiment.dates().collect(),
        avg_sentiment.values().collect(),
        avg_price.values().collect(),
    )
    .map_err(smooth_err)?;

    let mic_result = mic::mic(
        &aligned_smoothed.sentiment,
        &aligned_smoothed.price,
        &params.mic,
    )
    .map_err(|e| stage_err("analyze", None, e))?;

    let mut stats = BTreeMap::new();
    stats.insert(
        "avg_sentiment".to_string(),
        compute_series_stats(&aligned_smoothed.sentiment),
    );
    stats.insert(
        "avg_price".to_string(),
        compute_series_stats(&aligned_smoothed.price),
    );

    Ok(AnalysisArtifacts {
        report: AnalysisReport {
            mic: mic_result,
            stats,
            config,
            inputs,
        },
        aligned_raw,
        aligned_smoothed,
    })
}

/// The serialized report bytes (pretty JSON plus a trailing newline).
pub fn report_json(report: &AnalysisReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

/// What emit wrote, and whether chart emission was skipped over an IO error.
#[derive(Debug)]
pub struct EmitOutcome {
    pub written: Vec<PathBuf>,
    pub partial_outputs: bool,
}

/// Writes `aligned_raw.csv`, `aligned.csv`, `report.json` and the two SVG
/// overlays into `dir`. Data and report failures are errors; a chart write
/// failure degrades to `partial_outputs`. Byte-deterministic for identical
/// artifacts.
pub fn emit_report(artifacts: &AnalysisArtifacts, dir: &Path) -> Result<EmitOutcome, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| stage_err("emit", Some(dir), e))?;
    let mut written = Vec::new();

    let write_file = |name: &str, bytes: &[u8]| -> Result<PathBuf, PipelineError> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| stage_err("emit", Some(&path), e))?;
        Ok(path)
    };

    let mut buf = Vec::new();
    series::write_aligned_raw(&artifacts.aligned_raw, &mut buf)
        .map_err(|e| stage_err("emit", Some(dir), e))?;
    written.push(write_file("aligned_raw.csv", &buf)?);

    buf.clear();
    series::write_aligned(&artifacts.aligned_smoothed, &mut buf)
        .map_err(|e| stage_err("emit", Some(dir), e))?;
    written.push(write_file("aligned.csv", &buf)?);

    written.push(write_file("report.json", &report_json(&artifacts.report))?);

    let raw_svg = chart::render_overlay(
        "Sentiment and price, normalized",
        &artifacts.aligned_raw.dates,
        &[
            ChartSeries {
                label: "sentiment",
                values: &artifacts.aligned_raw.sentiment,
            },
            ChartSeries {
                label: "price",
                values: &artifacts.aligned_raw.price,
            },
        ],
    );
    let smoothed_svg = chart::render_overlay(
        "Smoothed sentiment and price, normalized",
        &artifacts.aligned_smoothed.dates,
        &[
            ChartSeries {
                label: "avg_sentiment",
                values: &artifacts.aligned_smoothed.sentiment,
            },
            ChartSeries {
                label: "avg_price",
                values: &artifacts.aligned_smoothed.price,
            },
        ],
    );

    let mut partial = false;
    for (name, svg) in [("fig_raw.svg", raw_svg), ("fig_smoothed.svg", smoothed_svg)] {
        match write_file(name, svg.as_bytes()) {
            Ok(path) => written.push(path),
            Err(_) => partial = true,
        }
    }

    Ok(EmitOutcome {
        written,
        partial_outputs: partial,
    })
}

/// Runs every stage, persisting each intermediate into the output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| stage_err("emit", Some(&cfg.output_dir), e))?;
    let mut written = Vec::new();

    let write_file = |name: &str, bytes: &[u8]| -> Result<PathBuf, PipelineError> {
        let path = cfg.output_dir.join(name);
        fs::write(&path, bytes).map_err(|e| stage_err("emit", Some(&path), e))?;
        Ok(path)
    };

    let (posts, posts_digest) = stage_ingest(&cfg.posts_path, &cfg.filter)?;
    let mut buf = Vec::new();
    corpus::write_posts(&posts, &mut buf)
        .map_err(|e| stage_err("ingest", Some(&cfg.output_dir), e))?;
    written.push(write_file("posts_clean.csv", &buf)?);

    let scored = stage_score(&posts, &cfg.scorer)?;
    buf.clear();
    sentiment::write_scores(&scored, &mut buf)
        .map_err(|e| stage_err("score", Some(&cfg.output_dir), e))?;
    written.push(write_file("scores.csv", &buf)?);

    let index = stage_index(&scored);
    buf.clear();
    sentiment::write_daily_index(&index, &mut buf)
        .map_err(|e| stage_err("index", Some(&cfg.output_dir), e))?;
    written.push(write_file("index.csv", &buf)?);

    let (bars, prices_digest) = load_prices(&cfg.prices_path)?;

    let params = AnalyzeParams {
        window: cfg.window,
        min_obs: cfg.min_obs,
        align_policy: cfg.align_policy,
        mic: cfg.mic.clone(),
    };
    let config_echo = ConfigEcho {
        scorer: Some(cfg.scorer.kind().to_string()),
        max_chars: Some(cfg.filter.max_chars),
        top_per_day: Some(cfg.filter.top_per_day),
        window: cfg.window,
        min_obs: cfg.min_obs,
        align_policy: cfg.align_policy.as_str().to_string(),
        alpha: cfg.mic.alpha,
        min_b: cfg.mic.min_b,
        clumping_factor: cfg.mic.clumping_factor,
    };
    let inputs = InputDigests {
        posts_sha256: Some(posts_digest),
        prices_sha256: prices_digest,
    };

    let artifacts = stage_analyze(&index, &bars, &params, config_echo, inputs)?;
    let emit = emit_report(&artifacts, &cfg.output_dir)?;
    written.extend(emit.written);

    Ok(PipelineRun {
        report: artifacts.report,
        written,
        partial_outputs: emit.partial_outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "sentmic-core-test-{tag}-{}",
            std::process::id()
        ));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn write(path: &Path, content: &str) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    /// Posts over two weeks plus a weekday price ladder; texts lean bullish
    /// on up days so dependence exists.
    fn fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let posts = dir.join("posts.csv");
        let prices = dir.join("prices.csv");
        let lexicon = dir.join("lexicon.csv");

        let mut posts_csv = String::from("date,text,reads,replies,url\n");
        let mut prices_csv = String::from(
            "date,close,open,high,low,prev_close,change,pct_change,volume,turnover\n",
        );
        let start = chrono::NaiveDate::from_ymd_opt(2020, 6, 1).unwrap();
        let mut prev_close = 100.0f64;
        for i in 0..14u64 {
            let date = start + chrono::Days::new(i);
            let up = i % 3 != 0;
            let text = if up { "今天大涨 利好" } else { "大跌 套牢了" };
            for k in 0..3 {
                posts_csv.push_str(&format!(
                    "{},{text}{k},{},0,u{i}k{k}\n",
                    date.format("%Y-%m-%d"),
                    10 + k
                ));
            }
            if date.format("%u").to_string().parse::<u32>().unwrap() <= 5 {
                let close = if up { prev_close + 1.0 } else { prev_close - 1.5 };
                prices_csv.push_str(&format!(
                    "{},{close},{prev_close},{},{},{prev_close},{},0.0,100,1000\n",
                    date.format("%Y%m%d"),
                    close.max(prev_close) + 0.5,
                    close.min(prev_close) - 0.5,
                    close - prev_close,
                ));
                prev_close = close;
            }
        }
        write(&posts, &posts_csv);
        write(&prices, &prices_csv);
        write(&lexicon, "term,weight\n大涨,2.0\n利好,1.5\n大跌,-2.0\n套牢,-1.5\n");
        (posts, prices, lexicon)
    }

    fn config(dir: &Path) -> PipelineConfig {
        let (posts, prices, lexicon) = fixture(dir);
        PipelineConfig {
            posts_path: posts,
            prices_path: prices,
            scorer: ScorerSource::Lexicon(lexicon),
            output_dir: dir.join("out"),
            filter: CorpusFilterConfig::default(),
            window: 5,
            min_obs: 1,
            align_policy: AlignPolicy::NextTradingDay,
            mic: MicConfig::default(),
        }
    }

    #[test]
    fn pipeline_writes_every_artifact() {
        let dir = temp_dir("artifacts");
        let cfg = config(&dir);
        let run = run_pipeline(&cfg).unwrap();
        assert!(!run.partial_outputs);
        for name in [
            "posts_clean.csv",
            "scores.csv",
            "index.csv",
            "aligned_raw.csv",
            "aligned.csv",
            "report.json",
            "fig_raw.svg",
            "fig_smoothed.svg",
        ] {
            assert!(cfg.output_dir.join(name).exists(), "missing {name}");
        }
        assert!((0.0..=1.0).contains(&run.report.mic.mic));
        assert_eq!(run.report.stats["avg_sentiment"].count, run.report.stats["avg_price"].count);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn pipeline_is_byte_deterministic() {
        let dir = temp_dir("determinism");
        let cfg = config(&dir);
        run_pipeline(&cfg).unwrap();
        let first: Vec<(String, Vec<u8>)> = ["report.json", "fig_raw.svg", "fig_smoothed.svg"]
            .iter()
            .map(|n| (n.to_string(), fs::read(cfg.output_dir.join(n)).unwrap()))
            .collect();
        run_pipeline(&cfg).unwrap();
        for (name, bytes) in first {
            assert_eq!(
                bytes,
                fs::read(cfg.output_dir.join(&name)).unwrap(),
                "{name} changed between runs"
            );
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn empty_posts_file_fails_in_ingest_stage() {
        let dir = temp_dir("empty-posts");
        let mut cfg = config(&dir);
        write(&cfg.posts_path, "date,text,reads,replies,url\n");
        cfg.output_dir = dir.join("out2");
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.stage, "ingest");
        assert!(err.to_string().contains("ingest"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn unwritable_output_dir_is_an_emit_error() {
        let dir = temp_dir("unwritable");
        let mut cfg = config(&dir);
        // Using a regular file as the parent makes directory creation fail
        // regardless of privileges.
        let blocker = dir.join("blocker");
        write(&blocker, "not a directory");
        cfg.output_dir = blocker.join("out");
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.stage, "emit");
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn config_file_parses_and_validates() {
        let dir = temp_dir("config");
        let (posts, prices, lexicon) = fixture(&dir);
        let text = format!(
            "# pipeline configuration\n\
             posts_path = {}\n\
             prices_path = {}\n\
             lexicon_path = {}\n\
             output_dir = out\n\
             filter.max_chars = 120\n\
             filter.top_per_day = 40\n\
             window = 10\n\
             min_obs = 2\n\
             align_policy = drop\n\
             mic.alpha = 0.7\n",
            posts.display(),
            prices.display(),
            lexicon.display()
        );
        let cfg = parse_config_file(&text, &dir, None).unwrap();
        assert_eq!(cfg.filter.max_chars, 120);
        assert_eq!(cfg.window, 10);
        assert_eq!(cfg.min_obs, 2);
        assert_eq!(cfg.align_policy, AlignPolicy::Drop);
        assert_eq!(cfg.mic.alpha, 0.7);
        assert_eq!(cfg.output_dir, dir.join("out"));

        let both = format!("{text}probs_path = probs.csv\n");
        assert!(parse_config_file(&both, &dir, None).is_err());

        let unknown = format!("{text}bogus = 1\n");
        assert!(parse_config_file(&unknown, &dir, None).is_err());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn emit_is_deterministic_for_identical_artifacts() {
        let dir = temp_dir("emit");
        let cfg = config(&dir);
        let (posts, posts_digest) = stage_ingest(&cfg.posts_path, &cfg.filter).unwrap();
        let scored = stage_score(&posts, &cfg.scorer).unwrap();
        let index = stage_index(&scored);
        let (bars, prices_digest) = load_prices(&cfg.prices_path).unwrap();
        let artifacts = stage_analyze(
            &index,
            &bars,
            &AnalyzeParams {
                window: cfg.window,
                min_obs: cfg.min_obs,
                align_policy: cfg.align_policy,
                mic: cfg.mic.clone(),
            },
            ConfigEcho {
                scorer: Some("lexicon".into()),
                max_chars: Some(150),
                top_per_day: Some(50),
                window: cfg.window,
                min_obs: cfg.min_obs,
                align_policy: cfg.align_policy.as_str().into(),
                alpha: cfg.mic.alpha,
                min_b: cfg.mic.min_b,
                clumping_factor: cfg.mic.clumping_factor,
            },
            InputDigests {
                posts_sha256: Some(posts_digest),
                prices_sha256: prices_digest,
            },
        )
        .unwrap();

        let out_a = dir.join("emit-a");
        let out_b = dir.join("emit-b");
        emit_report(&artifacts, &out_a).unwrap();
        emit_report(&artifacts, &out_b).unwrap();
        for name in ["aligned_raw.csv", "aligned.csv", "report.json", "fig_raw.svg", "fig_smoothed.svg"] {
            assert_eq!(
                fs::read(out_a.join(name)).unwrap(),
                fs::read(out_b.join(name)).unwrap(),
                "{name} differs across directories"
            );
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn two_point_series_emit_without_crashing() {
        let dir = temp_dir("tiny");
        let aligned = AlignedSeries::new(
            vec![
                chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
                chrono::NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
            ],
            vec![0.1, 0.2],
            vec![1.0, 2.0],
        )
        .unwrap();
        let artifacts = AnalysisArtifacts {
            report: AnalysisReport {
                mic: crate::mic::mic(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], &MicConfig::default())
                    .unwrap(),
                stats: BTreeMap::new(),
                config: ConfigEcho {
                    scorer: None,
                    max_chars: None,
                    top_per_day: None,
                    window: 1,
                    min_obs: 1,
                    align_policy: "next".into(),
                    alpha: 0.6,
                    min_b: 4,
                    clumping_factor: 15,
                },
                inputs: InputDigests {
                    posts_sha256: None,
                    prices_sha256: "0".repeat(64),
                },
            },
            aligned_raw: aligned.clone(),
            aligned_smoothed: aligned,
        };
        let outcome = emit_report(&artifacts, &dir.join("out")).unwrap();
        assert!(!outcome.partial_outputs);
        assert_eq!(outcome.written.len(), 5);
        let _ = fs::remove_dir_all(&dir);
    }
}
