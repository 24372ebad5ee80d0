//! Daily price-bar loading and the series transforms feeding the analysis:
//! min-max normalization onto [0,1], trailing-window smoothing, and calendar
//! alignment of the sentiment index onto trading days.

use std::collections::BTreeMap;
use std::io;

use chrono::NaiveDate;
use thiserror::Error;

/// Absolute tolerance for `change == close - prev_close`. Source tables carry
/// prices at two decimals but the change column at four, so the recomputed
/// difference can be off by up to ~0.01.
const CHANGE_TOLERANCE: f64 = 2e-2;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("no data rows in input")]
    EmptyInput,
    #[error("bar {date}: {which}")]
    InvariantViolation { date: NaiveDate, which: String },
    #[error("series '{0}' is constant; min-max range is zero")]
    DegenerateRange(String),
    #[error("series dates must be strictly increasing (at {0})")]
    UnsortedDates(NaiveDate),
    #[error("non-finite value in series at {0}")]
    NonFiniteValue(NaiveDate),
    #[error("fewer than 2 dates remain after alignment")]
    InsufficientOverlap,
    #[error("series is empty")]
    EmptySeries,
    #[error("rolling window parameters invalid: window {window}, min_obs {min_obs}")]
    BadWindow { window: usize, min_obs: usize },
    #[error("sentiment weights length {got} does not match series length {want}")]
    WeightLengthMismatch { got: usize, want: usize },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// One trading day's quote record.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub close: f64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub prev_close: f64,
    pub change: f64,
    pub pct_change: f64,
    pub volume: f64,
    pub turnover: f64,
}

impl PriceBar {
    fn validate(&self) -> Result<(), SeriesError> {
        let fields = [
            self.close,
            self.open,
            self.high,
            self.low,
            self.prev_close,
            self.change,
            self.pct_change,
            self.volume,
            self.turnover,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(self.violation("non-finite field"));
        }
        if self.low > self.open.min(self.close) {
            return Err(self.violation("low exceeds min(open, close)"));
        }
        if self.high < self.open.max(self.close) {
            return Err(self.violation("high below max(open, close)"));
        }
        if ((self.close - self.prev_close) - self.change).abs() > CHANGE_TOLERANCE {
            return Err(self.violation("change inconsistent with close - prev_close"));
        }
        if self.volume < 0.0 {
            return Err(self.violation("negative volume"));
        }
        if self.turnover < 0.0 {
            return Err(self.violation("negative turnover"));
        }
        Ok(())
    }

    fn violation(&self, which: &str) -> SeriesError {
        SeriesError::InvariantViolation {
            date: self.date,
            which: which.to_string(),
        }
    }
}

/// A named, date-ordered sequence of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    points: Vec<(NaiveDate, f64)>,
    name: String,
}

impl Series {
    /// Builds a series, rejecting out-of-order dates and non-finite values.
    pub fn new(name: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self, SeriesError> {
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(SeriesError::UnsortedDates(pair[1].0));
            }
        }
        if let Some(&(d, _)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SeriesError::NonFiniteValue(d));
        }
        Ok(Series {
            points,
            name: name.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|(d, _)| *d)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|(_, v)| *v)
    }
}

/// Sentiment and price values paired onto a shared trading-day calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub dates: Vec<NaiveDate>,
    pub sentiment: Vec<f64>,
    pub price: Vec<f64>,
}

impl AlignedSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        sentiment: Vec<f64>,
        price: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if dates.len() != sentiment.len() || dates.len() != price.len() {
            return Err(SeriesError::InsufficientOverlap);
        }
        if dates.len() < 2 {
            return Err(SeriesError::InsufficientOverlap);
        }
        Ok(AlignedSeries {
            dates,
            sentiment,
            price,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Calendar rule for sentiment dates that are not trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignPolicy {
    /// Reassign the value to the next existing price date; values landing on
    /// the same trading day are averaged (weighted when weights are given).
    NextTradingDay,
    /// Discard sentiment dates absent from the price calendar.
    Drop,
}

impl AlignPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "next" => Some(AlignPolicy::NextTradingDay),
            "drop" => Some(AlignPolicy::Drop),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AlignPolicy::NextTradingDay => "next",
            AlignPolicy::Drop => "drop",
        }
    }
}

/// Parses the daily-quote CSV (`date,close,open,high,low,prev_close,change,
/// pct_change,volume,turnover`, dates `YYYYMMDD`) and returns bars sorted by
/// ascending date. Rows violating the bar invariants are rejected.
pub fn load_price_bars<R: io::Read>(input: R) -> Result<Vec<PriceBar>, SeriesError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut bars = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| SeriesError::MalformedRow {
            line: csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |detail: String| SeriesError::MalformedRow { line, detail };

        if record.len() != 10 {
            return Err(malformed(format!("expected 10 columns, got {}", record.len())));
        }

        let date = NaiveDate::parse_from_str(&record[0], "%Y%m%d")
            .map_err(|e| malformed(format!("bad date '{}': {e}", &record[0])))?;
        let mut nums = [0.0f64; 9];
        for (i, slot) in nums.iter_mut().enumerate() {
            let field = &record[i + 1];
            *slot = field
                .trim()
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad number '{field}': {e}")))?;
        }

        let bar = PriceBar {
            date,
            close: nums[0],
            open: nums[1],
            high: nums[2],
            low: nums[3],
            prev_close: nums[4],
            change: nums[5],
            pct_change: nums[6],
            volume: nums[7],
            turnover: nums[8],
        };
        bar.validate()?;
        bars.push(bar);
    }

    if bars.is_empty() {
        return Err(SeriesError::EmptyInput);
    }

    bars.sort_by_key(|b| b.date);
    for pair in bars.windows(2) {
        if pair[1].date == pair[0].date {
            return Err(SeriesError::InvariantViolation {
                date: pair[1].date,
                which: "duplicate date".to_string(),
            });
        }
    }
    Ok(bars)
}

pub(crate) fn csv_error_line(e: &csv::Error) -> u64 {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, .. } => pos.as_ref().map(|p| p.line()).unwrap_or(0),
        _ => e.position().map(|p| p.line()).unwrap_or(0),
    }
}

/// Close-price series of a bar sequence.
pub fn close_series(bars: &[PriceBar]) -> Result<Series, SeriesError> {
    Series::new("price", bars.iter().map(|b| (b.date, b.close)).collect())
}

/// Maps every value through `(x - min) / (max - min)`, onto [0,1].
pub fn min_max_normalize(series: &Series) -> Result<Series, SeriesError> {
    if series.len() < 2 {
        return Err(SeriesError::EmptySeries);
    }
    let min = series.values().fold(f64::INFINITY, f64::min);
    let max = series.values().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Err(SeriesError::DegenerateRange(series.name.clone()));
    }
    let range = max - min;
    let points = series
        .points
        .iter()
        .map(|&(d, v)| (d, (v - min) / range))
        .collect();
    Series::new(series.name.clone(), points)
}

/// Trailing-window mean: the value at index `i` averages the window
/// `max(0, i-window+1)..=i`. Positions where fewer than `min_obs`
/// observations are available are omitted; with `min_obs = 1` the output has
/// the input's length.
///
/// Windows are summed directly rather than by a running sum so that
/// `window = 1` reproduces the input bit for bit.
pub fn rolling_mean(series: &Series, window: usize, min_obs: usize) -> Result<Series, SeriesError> {
    if window == 0 || min_obs == 0 || min_obs > window {
        return Err(SeriesError::BadWindow { window, min_obs });
    }
    let pts = &series.points;
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let start = (i + 1).saturating_sub(window);
        let count = i + 1 - start;
        if count < min_obs {
            continue;
        }
        let sum: f64 = pts[start..=i].iter().map(|(_, v)| v).sum();
        out.push((pts[i].0, sum / count as f64));
    }
    Series::new(series.name.clone(), out)
}

/// Pairs the sentiment series with the price series on the price calendar.
///
/// `weights`, when given, must parallel the sentiment points (one weight per
/// point, e.g. that day's post count) and is used for the averaging that
/// occurs when several sentiment dates collapse onto one trading day.
pub fn align_series(
    sentiment: &Series,
    weights: Option<&[f64]>,
    price: &Series,
    policy: AlignPolicy,
) -> Result<AlignedSeries, SeriesError> {
    if sentiment.is_empty() || price.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    if let Some(w) = weights {
        if w.len() != sentiment.len() {
            return Err(SeriesError::WeightLengthMismatch {
                got: w.len(),
                want: sentiment.len(),
            });
        }
    }

    let price_dates: Vec<NaiveDate> = price.dates().collect();
    // (weighted sum, weight sum) per trading day
    let mut buckets: BTreeMap<NaiveDate, (f64, f64)> = BTreeMap::new();

    for (i, &(date, value)) in sentiment.points.iter().enumerate() {
        let target = if price_dates.binary_search(&date).is_ok() {
            Some(date)
        } else {
            match policy {
                AlignPolicy::Drop => None,
                AlignPolicy::NextTradingDay => {
                    let idx = price_dates.partition_point(|&d| d < date);
                    price_dates.get(idx).copied()
                }
            }
        };
        if let Some(day) = target {
            let w = weights.map(|w| w[i]).unwrap_or(1.0);
            let slot = buckets.entry(day).or_insert((0.0, 0.0));
            slot.0 += w * value;
            slot.1 += w;
        }
    }

    let price_by_date: BTreeMap<NaiveDate, f64> = price.points.iter().copied().collect();
    let mut dates = Vec::new();
    let mut sent = Vec::new();
    let mut px = Vec::new();
    for (day, (num, den)) in buckets {
        if den == 0.0 {
            continue;
        }
        dates.push(day);
        sent.push(num / den);
        px.push(price_by_date[&day]);
    }

    if dates.len() < 2 {
        return Err(SeriesError::InsufficientOverlap);
    }
    AlignedSeries::new(dates, sent, px)
}

/// Writes the raw aligned pair as `date,sentiment,price`.
pub fn write_aligned_raw<W: io::Write>(aligned: &AlignedSeries, out: W) -> Result<(), SeriesError> {
    write_aligned_with_header(aligned, out, ["date", "sentiment", "price"])
}

/// Writes the smoothed aligned pair as `date,avg_sentiment,avg_price`.
pub fn write_aligned<W: io::Write>(aligned: &AlignedSeries, out: W) -> Result<(), SeriesError> {
    write_aligned_with_header(aligned, out, ["date", "avg_sentiment", "avg_price"])
}

fn write_aligned_with_header<W: io::Write>(
    aligned: &AlignedSeries,
    out: W,
    header: [&str; 3],
) -> Result<(), SeriesError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).map_err(csv_io_error)?;
    for i in 0..aligned.len() {
        writer
            .write_record(&[
                aligned.dates[i].format("%Y-%m-%d").to_string(),
                aligned.sentiment[i].to_string(),
                aligned.price[i].to_string(),
            ])
            .map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a 3-column aligned CSV written by either writer above.
pub fn read_aligned<R: io::Read>(input: R) -> Result<AlignedSeries, SeriesError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut dates = Vec::new();
    let mut sent = Vec::new();
    let mut px = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SeriesError::MalformedRow {
            line: csv_error_line(&e),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |detail: String| SeriesError::MalformedRow { line, detail };
        if record.len() != 3 {
            return Err(malformed(format!("expected 3 columns, got {}", record.len())));
        }
        dates.push(
            NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
                .map_err(|e| malformed(format!("bad date '{}': {e}", &record[0])))?,
        );
        sent.push(
            record[1]
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad number '{}': {e}", &record[1])))?,
        );
        px.push(
            record[2]
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad number '{}': {e}", &record[2])))?,
        );
    }
    if dates.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    AlignedSeries::new(dates, sent, px)
}

fn csv_io_error(e: csv::Error) -> SeriesError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SeriesError::Io(io),
        other => SeriesError::MalformedRow {
            line: 0,
            detail: format!("{other:?}"),
        },
    }
}
