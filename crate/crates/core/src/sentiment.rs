//! Per-post sentiment scoring and the daily sentiment index.
//!
//! A post's score is a 3-class probability triple (negative, neutral,
//! positive). Two scorers produce them: a weighted term lexicon (softmax over
//! matched weights) and an external probability file, so that any trained
//! classifier's output can be plugged in. Each post's sentiment value is
//! `p_positive - p_negative`, and the daily index is the mean of that day's
//! values.

use std::collections::{BTreeMap, HashMap};
use std::io;

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::ForumPost;

/// Largest tolerated deviation of a probability triple's sum from 1.
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("lexicon has no entries")]
    EmptyLexicon,
    #[error("lexicon term must not be empty (line {0})")]
    EmptyTerm(u64),
    #[error("lexicon weight must be finite (line {0})")]
    NonFiniteWeight(u64),
    #[error("line {line}: bad probability row: {detail}")]
    BadProbabilityRow { line: u64, detail: String },
    #[error("duplicate post_id '{0}'")]
    DuplicatePostId(String),
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("no data rows in input")]
    EmptyInput,
    #[error("no score for post_id '{0}'")]
    MissingScore(String),
    #[error("invalid probabilities ({p_neg}, {p_neu}, {p_pos}): {detail}")]
    InvalidProbabilities {
        p_neg: f64,
        p_neu: f64,
        p_pos: f64,
        detail: String,
    },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// Three-class sentiment label: 0 negative, 1 neutral, 2 positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentimentLabel {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl SentimentLabel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SentimentLabel::Negative),
            1 => Some(SentimentLabel::Neutral),
            2 => Some(SentimentLabel::Positive),
            _ => None,
        }
    }
}

/// Per-post class probabilities plus the derived label.
///
/// The label is the argmax class; any exact tie for the maximum resolves to
/// neutral (a positive/negative tie carries zero net sentiment, and a tie
/// with the neutral class is neutral by preference).
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentScore {
    p_negative: f64,
    p_neutral: f64,
    p_positive: f64,
    label: SentimentLabel,
}

impl SentimentScore {
    /// Builds a score from a probability triple. Each probability must lie in
    /// [0,1] and the sum must be within 1e-6 of 1. Values are stored as given
    /// (no renormalization), so scorer outputs quoted at limited precision
    /// keep their exact arithmetic.
    pub fn new(p_negative: f64, p_neutral: f64, p_positive: f64) -> Result<Self, SentimentError> {
        let invalid = |detail: &str| SentimentError::InvalidProbabilities {
            p_neg: p_negative,
            p_neu: p_neutral,
            p_pos: p_positive,
            detail: detail.to_string(),
        };
        for p in [p_negative, p_neutral, p_positive] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(invalid("probability outside [0,1]"));
            }
        }
        let sum = p_negative + p_neutral + p_positive;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid("probabilities do not sum to 1"));
        }
        let label = derive_label(p_negative, p_neutral, p_positive);
        Ok(SentimentScore {
            p_negative,
            p_neutral,
            p_positive,
            label,
        })
    }

    pub fn p_negative(&self) -> f64 {
        self.p_negative
    }

    pub fn p_neutral(&self) -> f64 {
        self.p_neutral
    }

    pub fn p_positive(&self) -> f64 {
        self.p_positive
    }

    pub fn label(&self) -> SentimentLabel {
        self.label
    }

    /// The post's sentiment value `p_positive - p_negative`, in [-1, 1].
    pub fn sentiment(&self) -> f64 {
        self.p_positive - self.p_negative
    }
}

fn derive_label(p_neg: f64, p_neu: f64, p_pos: f64) -> SentimentLabel {
    if p_pos > p_neg && p_pos > p_neu {
        SentimentLabel::Positive
    } else if p_neg > p_pos && p_neg > p_neu {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}

/// A scored post ready for daily aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSentiment {
    pub post_id: String,
    pub posted_at: NaiveDate,
    pub value: f64,
}

/// One day of the sentiment index: the mean of that day's post sentiments.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyIndexPoint {
    pub date: NaiveDate,
    pub emotions: f64,
    pub n_posts: usize,
}

/// Weighted term list for the lexicon scorer. Positive weights are bullish,
/// negative bearish; `neutral_bias` shifts the neutral class in the softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<(Vec<char>, f64)>,
    neutral_bias: f64,
}

impl Lexicon {
    pub fn new(
        terms: impl IntoIterator<Item = (String, f64)>,
        neutral_bias: f64,
    ) -> Result<Self, SentimentError> {
        let mut entries = Vec::new();
        for (term, weight) in terms {
            if term.is_empty() {
                return Err(SentimentError::EmptyTerm(0));
            }
            if !weight.is_finite() {
                return Err(SentimentError::NonFiniteWeight(0));
            }
            entries.push((term.chars().collect::<Vec<char>>(), weight));
        }
        if !neutral_bias.is_finite() {
            return Err(SentimentError::NonFiniteWeight(0));
        }
        // Longest terms first; equal lengths ordered lexicographically so
        // matching never depends on load order.
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Lexicon {
            entries,
            neutral_bias,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neutral_bias(&self) -> f64 {
        self.neutral_bias
    }
}

/// Parses the lexicon CSV (`term,weight`). A row whose term is the reserved
/// name `neutral_bias` sets the bias instead of adding an entry.
pub fn load_lexicon<R: io::Read>(input: R) -> Result<Lexicon, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut terms = Vec::new();
    let mut bias: Option<f64> = None;
    for record in reader.records() {
        let record = record.map_err(|e| SentimentError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(SentimentError::MalformedRow {
                line,
                detail: format!("expected 2 columns, got {}", record.len()),
            });
        }
        let term = record[0].to_string();
        let weight = record[1].trim().parse::<f64>().map_err(|e| SentimentError::MalformedRow {
            line,
            detail: format!("bad weight '{}': {e}", &record[1]),
        })?;
        if term.is_empty() {
            return Err(SentimentError::EmptyTerm(line));
        }
        if !weight.is_finite() {
            return Err(SentimentError::NonFiniteWeight(line));
        }
        if term == "neutral_bias" {
            if bias.replace(weight).is_some() {
                return Err(SentimentError::MalformedRow {
                    line,
                    detail: "neutral_bias given twice".to_string(),
                });
            }
        } else {
            terms.push((term, weight));
        }
    }
    Lexicon::new(terms, bias.unwrap_or(0.0))
}

/// Scores a cleaned text against the lexicon.
///
/// Matching is greedy, left to right, longest term first, and every
/// character is consumed at most once. Matched positive weights accumulate
/// into the positive logit, absolute negative weights into the negative one,
/// and the probabilities are the softmax of (negative, bias, positive).
pub fn score_with_lexicon(text: &str, lexicon: &Lexicon) -> Result<SentimentScore, SentimentError> {
    if lexicon.is_empty() {
        return Err(SentimentError::EmptyLexicon);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut w_pos = 0.0;
    let mut w_neg = 0.0;
    let mut i = 0;
    while i < chars.len() {
        let mut advanced = false;
        for (term, weight) in &lexicon.entries {
            if term.len() <= chars.len() - i && chars[i..i + term.len()] == term[..] {
                if *weight > 0.0 {
                    w_pos += weight;
                } else {
                    w_neg += weight.abs();
                }
                i += term.len();
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }

    let (p_neg, p_neu, p_pos) = softmax3(w_neg, lexicon.neutral_bias, w_pos);
    SentimentScore::new(p_neg, p_neu, p_pos)
}

fn softmax3(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let m = a.max(b).max(c);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let ec = (c - m).exp();
    let z = ea + eb + ec;
    (ea / z, eb / z, ec / z)
}

/// Parses an external probability CSV. The header must contain the columns
/// `post_id,p_neg,p_neu,p_pos` (extra columns, as in the scores-output
/// schema, are ignored). Rows whose sum deviates from 1 by at most 1e-6 are
/// renormalized; larger deviations or out-of-range values are rejected.
pub fn load_external_scores<R: io::Read>(
    input: R,
) -> Result<HashMap<String, SentimentScore>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| SentimentError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, neg_col, neu_col, pos_col) = match (
        col("post_id"),
        col("p_neg"),
        col("p_neu"),
        col("p_pos"),
    ) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => {
            return Err(SentimentError::MalformedRow {
                line: 1,
                detail: "header must contain post_id,p_neg,p_neu,p_pos".to_string(),
            })
        }
    };

    let mut scores = HashMap::new();
    let mut any = false;
    for record in reader.records() {
        let record = record.map_err(|e| SentimentError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        any = true;

        let field = |idx: usize| -> Result<f64, SentimentError> {
            let raw = record.get(idx).ok_or_else(|| SentimentError::MalformedRow {
                line,
                detail: "missing column".to_string(),
            })?;
            raw.trim().parse::<f64>().map_err(|e| SentimentError::BadProbabilityRow {
                line,
                detail: format!("bad number '{raw}': {e}"),
            })
        };

        let post_id = record
            .get(id_col)
            .ok_or_else(|| SentimentError::MalformedRow {
                line,
                detail: "missing post_id".to_string(),
            })?
            .to_string();
        let mut p_neg = field(neg_col)?;
        let mut p_neu = field(neu_col)?;
        let mut p_pos = field(pos_col)?;

        for p in [p_neg, p_neu, p_pos] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(SentimentError::BadProbabilityRow {
                    line,
                    detail: format!("probability {p} outside [0,1]"),
                });
            }
        }
        let sum = p_neg + p_neu + p_pos;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SentimentError::BadProbabilityRow {
                line,
                detail: format!("probabilities sum to {sum}"),
            });
        }
        if sum != 1.0 {
            p_neg /= sum;
            p_neu /= sum;
            p_pos /= sum;
        }

        let score = SentimentScore::new(p_neg, p_neu, p_pos).map_err(|e| {
            SentimentError::BadProbabilityRow {
                line,
                detail: e.to_string(),
            }
        })?;
        if scores.insert(post_id.clone(), score).is_some() {
            return Err(SentimentError::DuplicatePostId(post_id));
        }
    }
    if !any {
        return Err(SentimentError::EmptyInput);
    }
    Ok(scores)
}

/// The per-post sentiment value of a score (`p_positive - p_negative`).
pub fn post_sentiment(score: &SentimentScore) -> f64 {
    score.sentiment()
}

/// Averages post sentiments per calendar day. Days without posts produce no
/// point; output is sorted by ascending date.
pub fn daily_index(sentiments: &[PostSentiment]) -> Vec<DailyIndexPoint> {
    let mut by_day: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for s in sentiments {
        let slot = by_day.entry(s.posted_at).or_insert((0.0, 0));
        slot.0 += s.value;
        slot.1 += 1;
    }
    by_day
        .into_iter()
        .map(|(date, (sum, n))| DailyIndexPoint {
            date,
            emotions: sum / n as f64,
            n_posts: n,
        })
        .collect()
}

/// A scored post row of the scores-output CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPost {
    pub post_id: String,
    pub posted_at: NaiveDate,
    pub score: SentimentScore,
}

/// Scores every post with the lexicon, in input order.
pub fn score_posts_with_lexicon(
    posts: &[ForumPost],
    lexicon: &Lexicon,
) -> Result<Vec<ScoredPost>, SentimentError> {
    posts
        .iter()
        .map(|p| {
            Ok(ScoredPost {
                post_id: p.post_id.clone(),
                posted_at: p.posted_at,
                score: score_with_lexicon(&p.text, lexicon)?,
            })
        })
        .collect()
}

/// Attaches externally produced scores to posts, by post id.
pub fn score_posts_with_external(
    posts: &[ForumPost],
    scores: &HashMap<String, SentimentScore>,
) -> Result<Vec<ScoredPost>, SentimentError> {
    posts
        .iter()
        .map(|p| {
            let score = scores
                .get(&p.post_id)
                .ok_or_else(|| SentimentError::MissingScore(p.post_id.clone()))?;
            Ok(ScoredPost {
                post_id: p.post_id.clone(),
                posted_at: p.posted_at,
                score: score.clone(),
            })
        })
        .collect()
}

/// Writes the scores-output CSV
/// (`post_id,date,p_neg,p_neu,p_pos,label,sentiment`).
pub fn write_scores<W: io::Write>(scored: &[ScoredPost], out: W) -> Result<(), SentimentError> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["post_id", "date", "p_neg", "p_neu", "p_pos", "label", "sentiment"])
        .map_err(csv_io_error)?;
    for s in scored {
        writer
            .write_record(&[
                s.post_id.clone(),
                s.posted_at.format("%Y-%m-%d").to_string(),
                s.score.p_negative().to_string(),
                s.score.p_neutral().to_string(),
                s.score.p_positive().to_string(),
                s.score.label().code().to_string(),
                s.score.sentiment().to_string(),
            ])
            .map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads the scores-output CSV back into per-post sentiments (using the
/// stored `sentiment` column).
pub fn read_scores<R: io::Read>(input: R) -> Result<Vec<PostSentiment>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SentimentError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |detail: String| SentimentError::MalformedRow { line, detail };
        if record.len() != 7 {
            return Err(malformed(format!("expected 7 columns, got {}", record.len())));
        }
        out.push(PostSentiment {
            post_id: record[0].to_string(),
            posted_at: NaiveDate::parse_from_str(&record[1], "%Y-%m-%d")
                .map_err(|e| malformed(format!("bad date '{}': {e}", &record[1])))?,
            value: record[6]
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad sentiment '{}': {e}", &record[6])))?,
        });
    }
    if out.is_empty() {
        return Err(SentimentError::EmptyInput);
    }
    Ok(out)
}

/// Writes the daily index CSV (`date,emotions,n_posts`).
pub fn write_daily_index<W: io::Write>(
    points: &[DailyIndexPoint],
    out: W,
) -> Result<(), SentimentError> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["date", "emotions", "n_posts"])
        .map_err(csv_io_error)?;
    for p in points {
        writer
            .write_record(&[
                p.date.format("%Y-%m-%d").to_string(),
                p.emotions.to_string(),
                p.n_posts.to_string(),
            ])
            .map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads the daily index CSV.
pub fn read_daily_index<R: io::Read>(input: R) -> Result<Vec<DailyIndexPoint>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SentimentError::MalformedRow {
            line: crate::series::csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |detail: String| SentimentError::MalformedRow { line, detail };
        if record.len() != 3 {
            return Err(malformed(format!("expected 3 columns, got {}", record.len())));
        }
        out.push(DailyIndexPoint {
            date: NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
                .map_err(|e| malformed(format!("bad date '{}': {e}", &record[0])))?,
            emotions: record[1]
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad value '{}': {e}", &record[1])))?,
            n_posts: record[2]
                .parse::<usize>()
                .map_err(|e| malformed(format!("bad count '{}': {e}", &record[2])))?,
        });
    }
    if out.is_empty() {
        return Err(SentimentError::EmptyInput);
    }
    Ok(out)
}

fn csv_io_error(e: csv::Error) -> SentimentError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SentimentError::Io(io),
        other => SentimentError::MalformedRow {
            line: 0,
            detail: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn lexicon(terms: &[(&str, f64)], bias: f64) -> Lexicon {
        Lexicon::new(
            terms.iter().map(|&(t, w)| (t.to_string(), w)),
            bias,
        )
        .unwrap()
    }

    #[test]
    fn no_match_gives_uniform_thirds() {
        let lex = lexicon(&[("涨", 1.0)], 0.0);
        let score = score_with_lexicon("没有情绪词", &lex).unwrap();
        assert!((score.p_negative() - 1.0 / 3.0).abs() < 1e-12);
        assert!((score.p_neutral() - 1.0 / 3.0).abs() < 1e-12);
        assert!((score.p_positive() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(score.label(), SentimentLabel::Neutral);
    }

    #[test]
    fn single_positive_term_matches_softmax_by_hand() {
        let lex = lexicon(&[("大涨", 2.0)], 0.0);
        let score = score_with_lexicon("今天大涨", &lex).unwrap();
        // Direct evaluation: softmax over (0, 0, 2).
        let expected = 2.0f64.exp() / (2.0f64.exp() + 2.0);
        assert!((score.p_positive() - expected).abs() < 1e-12);
        assert!((expected - 0.787).abs() < 1e-3);
        assert_eq!(score.label(), SentimentLabel::Positive);
        assert!((score.p_negative() - score.p_neutral()).abs() < 1e-15);
    }

    #[test]
    fn balanced_terms_tie_to_neutral() {
        let lex = lexicon(&[("涨", 1.5), ("跌", -1.5)], 0.0);
        let score = score_with_lexicon("先涨后跌", &lex).unwrap();
        assert_eq!(score.p_positive(), score.p_negative());
        assert_eq!(score.label(), SentimentLabel::Neutral);
    }

    #[test]
    fn longest_match_wins_and_consumes() {
        // "涨停" (+3) must beat "涨" (+1); the consumed characters cannot
        // re-match.
        let lex = lexicon(&[("涨", 1.0), ("涨停", 3.0)], 0.0);
        let a = score_with_lexicon("涨停", &lex).unwrap();
        let b = score_with_lexicon("涨", &lex).unwrap();
        assert!(a.p_positive() > b.p_positive());
        // (0,0,3) softmax
        let expected = 3.0f64.exp() / (3.0f64.exp() + 2.0);
        assert!((a.p_positive() - expected).abs() < 1e-12);
    }

    #[test]
    fn repeated_terms_accumulate() {
        let lex = lexicon(&[("涨", 1.0)], 0.0);
        let once = score_with_lexicon("涨", &lex).unwrap();
        let twice = score_with_lexicon("涨涨", &lex).unwrap();
        assert!(twice.p_positive() > once.p_positive());
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        let lex = Lexicon::new(Vec::<(String, f64)>::new(), 0.0).unwrap();
        assert!(matches!(
            score_with_lexicon("text", &lex),
            Err(SentimentError::EmptyLexicon)
        ));
    }

    #[test]
    fn lexicon_csv_parses_bias_row() {
        let csv = "\
term,weight
涨,1.0
跌,-1.0
neutral_bias,0.5
";
        let lex = load_lexicon(csv.as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.neutral_bias(), 0.5);
    }

    #[test]
    fn sample_probability_rows_decode_labels() {
        let csv = "\
post_id,p_neg,p_neu,p_pos
1,0.0613335,0.0000005,0.938666
2,0.99702,0.0,0.00298048
";
        let scores = load_external_scores(csv.as_bytes()).unwrap();
        assert_eq!(scores["1"].label(), SentimentLabel::Positive);
        assert_eq!(scores["1"].label().code(), 2);
        assert_eq!(scores["2"].label(), SentimentLabel::Negative);
        assert_eq!(scores["2"].label().code(), 0);
    }

    #[test]
    fn sum_far_from_one_is_rejected() {
        let csv = "\
post_id,p_neg,p_neu,p_pos
1,0.25,0.0,0.25
";
        assert!(matches!(
            load_external_scores(csv.as_bytes()),
            Err(SentimentError::BadProbabilityRow { line: 2, .. })
        ));
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let csv = "\
post_id,p_neg,p_neu,p_pos
1,1.2,-0.2,0.0
";
        assert!(matches!(
            load_external_scores(csv.as_bytes()),
            Err(SentimentError::BadProbabilityRow { .. })
        ));
    }

    #[test]
    fn duplicate_post_id_is_rejected() {
        let csv = "\
post_id,p_neg,p_neu,p_pos
1,0.5,0.25,0.25
1,0.25,0.25,0.5
";
        assert!(matches!(
            load_external_scores(csv.as_bytes()),
            Err(SentimentError::DuplicatePostId(id)) if id == "1"
        ));
    }

    #[test]
    fn near_one_sum_is_renormalized() {
        let csv = "\
post_id,p_neg,p_neu,p_pos
1,0.5000002,0.25,0.25
";
        let scores = load_external_scores(csv.as_bytes()).unwrap();
        let s = &scores["1"];
        let sum = s.p_negative() + s.p_neutral() + s.p_positive();
        assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn sentiment_arithmetic_on_sample_rows() {
        let row1 = SentimentScore::new(0.0613335, 0.0000005, 0.938666).unwrap();
        assert!((post_sentiment(&row1) - 0.8773325).abs() < 1e-9);

        let row2 = SentimentScore::new(0.99702, 0.0, 0.00298048).unwrap();
        assert!((post_sentiment(&row2) - (-0.99403952)).abs() < 1e-9);

        let even = SentimentScore::new(0.5, 0.0, 0.5).unwrap();
        assert_eq!(post_sentiment(&even), 0.0);
    }

    #[test]
    fn daily_index_means_per_day() {
        let sentiments = vec![
            PostSentiment {
                post_id: "1".into(),
                posted_at: d("2020-06-09"),
                value: 0.8773325,
            },
            PostSentiment {
                post_id: "2".into(),
                posted_at: d("2020-06-09"),
                value: -0.99403952,
            },
        ];
        let points = daily_index(&sentiments);
        assert_eq!(points.len(), 1);
        // Hand mean of the two values.
        assert!((points[0].emotions - (-0.05835351)).abs() < 1e-12);
        assert_eq!(points[0].n_posts, 2);
    }

    #[test]
    fn daily_index_single_post_and_empty() {
        let one = vec![PostSentiment {
            post_id: "1".into(),
            posted_at: d("2020-06-09"),
            value: 0.25,
        }];
        let points = daily_index(&one);
        assert_eq!(points[0].emotions, 0.25);
        assert!(daily_index(&[]).is_empty());
    }

    #[test]
    fn daily_index_sorted_by_date() {
        let sentiments = vec![
            PostSentiment {
                post_id: "1".into(),
                posted_at: d("2020-06-10"),
                value: 0.5,
            },
            PostSentiment {
                post_id: "2".into(),
                posted_at: d("2020-06-09"),
                value: -0.5,
            },
        ];
        let points = daily_index(&sentiments);
        assert_eq!(points[0].date, d("2020-06-09"));
        assert_eq!(points[1].date, d("2020-06-10"));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lexicon_scores_sum_to_one(
                w_pos in 0.0f64..6.0,
                w_neg in 0.0f64..6.0,
                bias in -2.0f64..2.0,
            ) {
                let lex = lexicon(&[("涨", w_pos.max(1e-3)), ("跌", -w_neg.max(1e-3))], bias);
                let score = score_with_lexicon("涨跌", &lex).unwrap();
                let sum = score.p_negative() + score.p_neutral() + score.p_positive();
                prop_assert!((sum - 1.0).abs() <= 1e-9);
                let label = score.label();
                let max = score.p_negative().max(score.p_neutral()).max(score.p_positive());
                let max_of = match label {
                    SentimentLabel::Negative => score.p_negative(),
                    SentimentLabel::Neutral => score.p_neutral(),
                    SentimentLabel::Positive => score.p_positive(),
                };
                prop_assert!(max_of >= max - 1e-15);
            }

            #[test]
            fn sentiment_is_antisymmetric(p_neg in 0.0f64..1.0, p_pos in 0.0f64..1.0) {
                prop_assume!(p_neg + p_pos <= 1.0);
                let p_neu = 1.0 - p_neg - p_pos;
                let a = SentimentScore::new(p_neg, p_neu, p_pos).unwrap();
                let b = SentimentScore::new(p_pos, p_neu, p_neg).unwrap();
                prop_assert_eq!(post_sentiment(&a), -post_sentiment(&b));
            }

            #[test]
            fn daily_index_bounded_by_member_values(
                values in proptest::collection::vec(-1.0f64..=1.0, 1..40),
                day_span in 1usize..5,
            ) {
                let sentiments: Vec<PostSentiment> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| PostSentiment {
                        post_id: i.to_string(),
                        posted_at: NaiveDate::from_ymd_opt(2020, 6, 1 + (i % day_span) as u32).unwrap(),
                        value: v,
                    })
                    .collect();
                let points = daily_index(&sentiments);
                for p in points {
                    prop_assert!((-1.0..=1.0).contains(&p.emotions));
                    let day_vals: Vec<f64> = sentiments
                        .iter()
                        .filter(|s| s.posted_at == p.date)
                        .map(|s| s.value)
                        .collect();
                    let lo = day_vals.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = day_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(p.emotions >= lo - 1e-12 && p.emotions <= hi + 1e-12);
                    prop_assert_eq!(p.n_posts, day_vals.len());
                }
            }

            #[test]
            fn scores_csv_round_trips_probabilities(
                rows in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
            ) {
                let scored: Vec<ScoredPost> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, &(a, b))| {
                        // Build a valid triple from two raw draws.
                        let z = a + b + 1.0;
                        let score = SentimentScore::new(a / z, b / z, 1.0 - a / z - b / z).unwrap();
                        ScoredPost {
                            post_id: (i + 1).to_string(),
                            posted_at: NaiveDate::from_ymd_opt(2020, 6, 9).unwrap(),
                            score,
                        }
                    })
                    .collect();
                let mut buf = Vec::new();
                write_scores(&scored, &mut buf).unwrap();
                let back = load_external_scores(&buf[..]).unwrap();
                prop_assert_eq!(back.len(), scored.len());
                for s in &scored {
                    let got = &back[&s.post_id];
                    prop_assert!((got.p_negative() - s.score.p_negative()).abs() <= 1e-9);
                    prop_assert!((got.p_neutral() - s.score.p_neutral()).abs() <= 1e-9);
                    prop_assert!((got.p_positive() - s.score.p_positive()).abs() <= 1e-9);
                    prop_assert_eq!(got.label(), s.score.label());
                }
            }
        }
    }
}
