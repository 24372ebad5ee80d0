//! `sentmic` — forum-sentiment index construction and MIC analysis against a
//! daily price series, as composable subcommands over CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sentmic_core::corpus::{self, CorpusFilterConfig};
use sentmic_core::mic::MicConfig;
use sentmic_core::pipeline::{
    self, AnalyzeParams, ConfigEcho, InputDigests, ScorerSource,
};
use sentmic_core::sentiment;
use sentmic_core::series::{self, AlignPolicy};

const OUTPUT_DIR_ENV: &str = "SENTMIC_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "sentmic",
    about = "Forum sentiment index, price alignment and MIC analysis",
    version
)]
struct Cli {
    /// Worker-thread hint for stages that can parallelize (advisory; stages
    /// may ignore it).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a post dump and apply cleaning, dedup, length and top-N filters
    Ingest(IngestArgs),
    /// Score cleaned posts with a lexicon or an external probability file
    Score(ScoreArgs),
    /// Aggregate scored posts into the per-day sentiment index
    Index(IndexArgs),
    /// Pair the sentiment index with trading days
    Align(AlignArgs),
    /// Align, smooth and compute MIC; writes the report and figures
    Analyze(AnalyzeArgs),
    /// Run every stage from a config file
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Posts CSV (`date,text,reads,replies,url`)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Cleaned posts CSV to write
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
    /// Keep texts with fewer than this many characters
    #[arg(long, default_value_t = 150)]
    max_chars: usize,
    /// Keep at most this many posts per day, by read count
    #[arg(long, default_value_t = 50)]
    top_per_day: usize,
}

#[derive(Args)]
struct ScoreArgs {
    /// Cleaned posts CSV (ingest output)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Lexicon CSV (`term,weight`)
    #[arg(long, value_name = "FILE", conflicts_with = "probs")]
    lexicon: Option<PathBuf>,
    /// External probabilities CSV (`post_id,p_neg,p_neu,p_pos`)
    #[arg(long, value_name = "FILE")]
    probs: Option<PathBuf>,
    /// Scores CSV to write
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    /// Scores CSV (score output)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Daily index CSV to write
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Daily index CSV (index output)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Prices CSV (`date,close,open,high,low,prev_close,change,pct_change,volume,turnover`)
    #[arg(long, value_name = "FILE")]
    prices: PathBuf,
    /// Calendar rule for non-trading sentiment dates
    #[arg(long, default_value = "next", value_parser = parse_policy)]
    policy: AlignPolicy,
    /// Raw aligned CSV to write (`date,sentiment,price`)
    #[arg(long = "out", value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Daily index CSV (index output)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Prices CSV
    #[arg(long, value_name = "FILE")]
    prices: PathBuf,
    /// Calendar rule for non-trading sentiment dates
    #[arg(long, default_value = "next", value_parser = parse_policy)]
    policy: AlignPolicy,
    /// Smoothing window (trading days)
    #[arg(long, default_value_t = 30)]
    window: usize,
    /// Minimum observations per window position
    #[arg(long, default_value_t = 1)]
    min_obs: usize,
    /// Grid-budget exponent (B = max(floor(n^alpha), min_b))
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Lower clamp of the grid budget
    #[arg(long, default_value_t = 4)]
    min_b: usize,
    /// Candidate-thinning factor of the column search
    #[arg(long, default_value_t = 15)]
    clumping_factor: usize,
    /// Output directory (default: $SENTMIC_OUTPUT_DIR)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Plain-text key/value configuration file
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory override (default: config output_dir, then
    /// $SENTMIC_OUTPUT_DIR)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<AlignPolicy, String> {
    AlignPolicy::parse(s).ok_or_else(|| format!("expected next|drop, got '{s}'"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(args) => run_ingest(args),
        Command::Score(args) => run_score(args),
        Command::Index(args) => run_index(args),
        Command::Align(args) => run_align(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Pipeline(args) => run_pipeline(args),
    }
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    let filter = CorpusFilterConfig {
        max_chars: args.max_chars,
        top_per_day: args.top_per_day,
    };
    filter.validate().map_err(anyhow::Error::msg)?;
    let (posts, _) = pipeline::stage_ingest(&args.input, &filter)?;
    write_with(&args.output, |w| corpus::write_posts(&posts, w))?;
    println!("ingest: kept {} posts -> {}", posts.len(), args.output.display());
    Ok(())
}

fn run_score(args: ScoreArgs) -> Result<()> {
    let scorer = match (args.lexicon, args.probs) {
        (Some(lex), None) => ScorerSource::Lexicon(lex),
        (None, Some(probs)) => ScorerSource::External(probs),
        _ => bail!("score: give exactly one of --lexicon / --probs"),
    };
    let posts = read_posts(&args.input)?;
    let scored = pipeline::stage_score(&posts, &scorer)?;
    write_with(&args.output, |w| sentiment::write_scores(&scored, w))?;
    println!("score: {} posts -> {}", scored.len(), args.output.display());
    Ok(())
}

fn run_index(args: IndexArgs) -> Result<()> {
    let file = fs::File::open(&args.input)
        .with_context(|| format!("index stage ({})", args.input.display()))?;
    let sentiments = sentiment::read_scores(file)
        .with_context(|| format!("index stage ({})", args.input.display()))?;
    let points = sentiment::daily_index(&sentiments);
    write_with(&args.output, |w| sentiment::write_daily_index(&points, w))?;
    println!("index: {} days -> {}", points.len(), args.output.display());
    Ok(())
}

fn run_align(args: AlignArgs) -> Result<()> {
    let index = read_index(&args.input)?;
    let (bars, _) = pipeline::load_prices(&args.prices)?;
    let aligned = pipeline::stage_align(&index, &bars, args.policy)?;
    write_with(&args.output, |w| series::write_aligned_raw(&aligned, w))?;
    println!("align: {} trading days -> {}", aligned.len(), args.output.display());
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let out_dir = resolve_out_dir(args.out_dir)?;
    let index = read_index(&args.input)?;
    let (bars, prices_digest) = pipeline::load_prices(&args.prices)?;

    let params = AnalyzeParams {
        window: args.window,
        min_obs: args.min_obs,
        align_policy: args.policy,
        mic: MicConfig {
            alpha: args.alpha,
            min_b: args.min_b,
            clumping_factor: args.clumping_factor,
        },
    };
    let config = ConfigEcho {
        scorer: None,
        max_chars: None,
        top_per_day: None,
        window: params.window,
        min_obs: params.min_obs,
        align_policy: params.align_policy.as_str().to_string(),
        alpha: params.mic.alpha,
        min_b: params.mic.min_b,
        clumping_factor: params.mic.clumping_factor,
    };
    let inputs = InputDigests {
        posts_sha256: None,
        prices_sha256: prices_digest,
    };

    let artifacts = pipeline::stage_analyze(&index, &bars, &params, config, inputs)?;
    let outcome = pipeline::emit_report(&artifacts, &out_dir)?;
    report_summary(&artifacts.report, outcome.partial_outputs, &out_dir);
    Ok(())
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("config stage ({})", args.config.display()))?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let fallback = args
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from));
    let mut config = pipeline::parse_config_file(&text, &base, fallback)?;
    if let Some(dir) = args.out_dir {
        config.output_dir = dir;
    }
    let run = pipeline::run_pipeline(&config)?;
    report_summary(&run.report, run.partial_outputs, &config.output_dir);
    Ok(())
}

fn report_summary(report: &pipeline::AnalysisReport, partial: bool, out_dir: &Path) {
    println!(
        "mic = {:.6} at grid ({}, {}) over {} days -> {}",
        report.mic.mic,
        report.mic.best_x,
        report.mic.best_y,
        report.mic.n,
        out_dir.display()
    );
    if report.mic.degenerate {
        println!("warning: a series is constant; mic is trivially 0");
    }
    if partial {
        println!("warning: chart emission failed; report written without figures");
    }
}

fn resolve_out_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        return Ok(PathBuf::from(dir));
    }
    bail!("no output directory: pass --out-dir or set {OUTPUT_DIR_ENV}")
}

fn read_posts(path: &Path) -> Result<Vec<corpus::ForumPost>> {
    let file =
        fs::File::open(path).with_context(|| format!("score stage ({})", path.display()))?;
    corpus::parse_posts(file).with_context(|| format!("score stage ({})", path.display()))
}

fn read_index(path: &Path) -> Result<Vec<sentiment::DailyIndexPoint>> {
    let file =
        fs::File::open(path).with_context(|| format!("align stage ({})", path.display()))?;
    sentiment::read_daily_index(file).with_context(|| format!("align stage ({})", path.display()))
}

fn write_with<E: Into<anyhow::Error>>(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(Into::into)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
