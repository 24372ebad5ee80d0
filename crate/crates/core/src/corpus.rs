//! Forum post-dump ingestion: CSV parsing, text cleaning, duplicate removal,
//! length filtering and the per-day read-count cap.
//!
//! The cleaning/filter chain runs in a fixed order — clean, deduplicate,
//! length-filter, daily top-N — and is fully deterministic: the same input
//! bytes always produce the same output bytes.

use std::collections::{BTreeMap, HashSet};
use std::io;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("no data rows in input")]
    EmptyInput,
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// One forum message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForumPost {
    pub post_id: String,
    pub posted_at: NaiveDate,
    pub text: String,
    pub read_count: u64,
    pub reply_count: u64,
    pub source_url: String,
}

/// Corpus filtering knobs: keep texts with fewer than `max_chars` characters,
/// and at most `top_per_day` posts per calendar day by read count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFilterConfig {
    pub max_chars: usize,
    pub top_per_day: usize,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        CorpusFilterConfig {
            max_chars: 150,
            top_per_day: 50,
        }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_chars == 0 {
            return Err("max_chars must be at least 1".into());
        }
        if self.top_per_day == 0 {
            return Err("top_per_day must be at least 1".into());
        }
        Ok(())
    }
}

/// Code-point ranges stripped by [`clean_text`]: pictographs, emoticons,
/// transport symbols, dingbats, variation selectors and the emoji joiners.
/// The exact list is part of the ingest format contract (see the README).
const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x1F000, 0x1FAFF), // game tiles, pictographs, emoticons, transport, supplemental
    (0x2600, 0x27BF),   // miscellaneous symbols, dingbats
    (0x2B00, 0x2BFF),   // miscellaneous symbols and arrows
    (0xFE00, 0xFE0F),   // variation selectors
    (0x231A, 0x231B),   // watch, hourglass
    (0x23E9, 0x23FA),   // audio/video control symbols
    (0x200D, 0x200D),   // zero-width joiner
    (0x20E3, 0x20E3),   // combining enclosing keycap
];

fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| cp >= lo && cp <= hi)
}

/// Parses a post dump. Accepts the raw schema
/// `date,text,reads,replies,url` (ids are assigned as the 1-based data-row
/// ordinal) and the ingest-output schema with a leading `post_id` column.
/// Empty read/reply fields default to 0.
pub fn parse_posts<R: io::Read>(input: R) -> Result<Vec<ForumPost>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?
        .clone();
    let has_id_column = headers.get(0) == Some("post_id");
    let expected_len = if has_id_column { 6 } else { 5 };

    let mut posts = Vec::new();
    let mut seen_ids = HashSet::new();
    for (ordinal, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CorpusError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |detail: String| CorpusError::MalformedRow { line, detail };

        if record.len() != expected_len {
            return Err(malformed(format!(
                "expected {expected_len} columns, got {}",
                record.len()
            )));
        }

        let offset = usize::from(has_id_column);
        let post_id = if has_id_column {
            record[0].to_string()
        } else {
            (ordinal + 1).to_string()
        };
        if !seen_ids.insert(post_id.clone()) {
            return Err(malformed(format!("duplicate post_id '{post_id}'")));
        }

        let posted_at = NaiveDate::parse_from_str(&record[offset], "%Y-%m-%d")
            .map_err(|e| malformed(format!("bad date '{}': {e}", &record[offset])))?;
        let parse_count = |field: &str| -> Result<u64, CorpusError> {
            if field.trim().is_empty() {
                Ok(0)
            } else {
                field
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| malformed(format!("bad count '{field}': {e}")))
            }
        };

        posts.push(ForumPost {
            post_id,
            posted_at,
            text: record[offset + 1].to_string(),
            read_count: parse_count(&record[offset + 2])?,
            reply_count: parse_count(&record[offset + 3])?,
            source_url: record[offset + 4].to_string(),
        });
    }

    if posts.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    Ok(posts)
}

/// Strips `<...>` tag spans, emoji and control characters, collapses
/// whitespace runs to a single space and trims. Idempotent.
pub fn clean_text(post: &ForumPost) -> ForumPost {
    let mut cleaned = post.clone();
    cleaned.text = clean_str(&post.text);
    cleaned
}

fn clean_str(text: &str) -> String {
    // Tag spans first: a '<' opens a span only if a '>' follows.
    let chars: Vec<char> = text.chars().collect();
    let mut untagged = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '<' {
            if let Some(close) = chars[i..].iter().position(|&c| c == '>') {
                i += close + 1;
                continue;
            }
        }
        untagged.push(chars[i]);
        i += 1;
    }

    let mut out = String::with_capacity(untagged.len());
    let mut pending_space = false;
    for c in untagged.chars() {
        if is_emoji(c) {
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if c.is_control() {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}

/// Keeps the first occurrence of each (date, text) pair, preserving order.
pub fn deduplicate(posts: Vec<ForumPost>) -> Vec<ForumPost> {
    let mut seen: HashSet<(NaiveDate, String)> = HashSet::new();
    posts
        .into_iter()
        .filter(|p| seen.insert((p.posted_at, p.text.clone())))
        .collect()
}

/// Keeps posts whose text length, in Unicode scalar values, is strictly
/// below `cfg.max_chars`.
pub fn filter_by_length(posts: Vec<ForumPost>, cfg: &CorpusFilterConfig) -> Vec<ForumPost> {
    posts
        .into_iter()
        .filter(|p| p.text.chars().count() < cfg.max_chars)
        .collect()
}

/// Per calendar day, keeps the `cfg.top_per_day` posts with the highest read
/// counts (ties resolved by input order) and emits days in ascending date
/// order, each day sorted by descending read count.
pub fn select_daily_top(posts: Vec<ForumPost>, cfg: &CorpusFilterConfig) -> Vec<ForumPost> {
    let mut by_day: BTreeMap<NaiveDate, Vec<ForumPost>> = BTreeMap::new();
    for post in posts {
        by_day.entry(post.posted_at).or_default().push(post);
    }

    let mut out = Vec::new();
    for (_, mut day_posts) in by_day {
        // Stable sort keeps input order among equal read counts.
        day_posts.sort_by(|a, b| b.read_count.cmp(&a.read_count));
        day_posts.truncate(cfg.top_per_day);
        out.extend(day_posts);
    }
    out
}

/// The full ingest chain: clean, deduplicate, length-filter, daily top-N.
pub fn ingest(posts: Vec<ForumPost>, cfg: &CorpusFilterConfig) -> Vec<ForumPost> {
    let cleaned = posts.iter().map(clean_text).collect();
    let deduped = deduplicate(cleaned);
    let filtered = filter_by_length(deduped, cfg);
    select_daily_top(filtered, cfg)
}

/// Writes posts in the ingest-output schema
/// `post_id,date,text,reads,replies,url`.
pub fn write_posts<W: io::Write>(posts: &[ForumPost], out: W) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["post_id", "date", "text", "reads", "replies", "url"])
        .map_err(csv_io_error)?;
    for p in posts {
        writer
            .write_record(&[
                p.post_id.clone(),
                p.posted_at.format("%Y-%m-%d").to_string(),
                p.text.clone(),
                p.read_count.to_string(),
                p.reply_count.to_string(),
                p.source_url.clone(),
            ])
            .map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io_error(e: csv::Error) -> CorpusError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CorpusError::Io(io),
        other => CorpusError::MalformedRow {
            line: 0,
            detail: format!("{other:?}"),
        },
    }
}
