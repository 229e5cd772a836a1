//! Two-decimal timestamps and half-open time ranges.
//!
//! A [`Timestamp`] is stored as a whole number of centiseconds, so every value
//! the pipeline handles is exactly representable and arithmetic on durations
//! never drifts. Conversion from floating point goes through the shortest
//! decimal rendering of the input, which makes `12.345` round to `12.35` even
//! though the nearest binary double sits just below the midpoint.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest accepted timestamp, in seconds (roughly 31 700 years).
pub const MAX_SECONDS: f64 = 1.0e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimestampError {
    #[error("invalid timestamp {0}: must be finite, non-negative and at most {MAX_SECONDS} s")]
    InvalidTimestamp(f64),
    #[error("cannot parse time value {raw:?}")]
    TimeParseError { raw: String },
}

/// Non-negative point in time with centisecond resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_centis(centis: u64) -> Self {
        Timestamp(centis)
    }

    /// Whole seconds, without rounding.
    pub const fn from_secs(secs: u64) -> Self {
        Timestamp(secs * 100)
    }

    pub const fn centis(self) -> u64 {
        self.0
    }

    pub const fn millis(self) -> u64 {
        self.0 * 10
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn saturating_sub(self, other: Timestamp) -> Timestamp {
        Timestamp(self.0.saturating_sub(other.0))
    }

    pub fn checked_add(self, other: Timestamp) -> Option<Timestamp> {
        self.0.checked_add(other.0).map(Timestamp)
    }

    /// Shifts by a signed number of centiseconds, clamping at zero.
    pub fn offset_clamped(self, delta_centis: i64) -> Timestamp {
        if delta_centis >= 0 {
            Timestamp(self.0.saturating_add(delta_centis as u64))
        } else {
            Timestamp(self.0.saturating_sub(delta_centis.unsigned_abs()))
        }
    }
}

impl std::ops::Add for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: Timestamp) -> Timestamp {
        Timestamp(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Timestamp {
    type Output = Timestamp;
    fn sub(self, rhs: Timestamp) -> Timestamp {
        Timestamp(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Timestamp {
    fn sum<I: Iterator<Item = Timestamp>>(iter: I) -> Timestamp {
        Timestamp(iter.map(|t| t.0).sum())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_time_to_seconds(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // cents / 100 is the double nearest to the two-decimal value, so the
        // shortest round-trip rendering never shows more than two decimals.
        serializer.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => normalize_timestamp(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => parse_time_to_seconds(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Rounds a non-negative real to two decimals, half away from zero.
pub fn normalize_timestamp(t: f64) -> Result<Timestamp, TimestampError> {
    if !t.is_finite() || t < 0.0 || t > MAX_SECONDS {
        return Err(TimestampError::InvalidTimestamp(t));
    }
    // Display for f64 is the shortest string that round-trips and never uses
    // exponent notation.
    let rendered = format!("{t}");
    decimal_to_centis(&rendered).map(Timestamp).ok_or(TimestampError::InvalidTimestamp(t))
}

/// Parses decimal seconds (`"125.456"`) or clock form (`"H:MM:SS.fff"`,
/// `"MM:SS"`) into a normalized timestamp.
pub fn parse_time_to_seconds(raw: &str) -> Result<Timestamp, TimestampError> {
    let err = || TimestampError::TimeParseError {
        raw: raw.to_string(),
    };
    let s = raw.trim();
    if s.is_empty() {
        return Err(err());
    }
    if s.contains(':') {
        return parse_clock(s).ok_or_else(err);
    }
    if let Some(c) = decimal_to_centis(s.strip_prefix('+').unwrap_or(s)) {
        return Ok(Timestamp(c));
    }
    // Exponent forms such as "1.25e2".
    match s.parse::<f64>() {
        Ok(v) => normalize_timestamp(v).map_err(|_| err()),
        Err(_) => Err(err()),
    }
}

fn parse_clock(s: &str) -> Option<Timestamp> {
    let parts: Vec<&str> = s.split(':').collect();
    let (hours, minutes, seconds) = match parts.as_slice() {
        [m, sec] => (0u64, parse_digits(m)?, *sec),
        [h, m, sec] => {
            let minutes = parse_digits(m)?;
            if minutes >= 60 || m.len() != 2 {
                return None;
            }
            (parse_digits(h)?, minutes, *sec)
        }
        _ => return None,
    };
    // SRT-style "05,500" is accepted alongside "05.500".
    let seconds = seconds.replace(',', ".");
    let int_part = seconds.split('.').next()?;
    if int_part.len() != 2 {
        return None;
    }
    let sec_centis = decimal_to_centis(&seconds)?;
    if sec_centis >= 6000 && parts.len() == 3 {
        return None;
    }
    let whole = hours.checked_mul(3600)?.checked_add(minutes.checked_mul(60)?)?;
    whole.checked_mul(100)?.checked_add(sec_centis).map(Timestamp)
}

fn parse_digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Exact decimal rounding of a plain `digits[.digits]` string to centiseconds.
fn decimal_to_centis(s: &str) -> Option<u64> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let int_ok = int_part.bytes().all(|b| b.is_ascii_digit());
    let frac_ok = frac_part.bytes().all(|b| b.is_ascii_digit());
    if !int_ok || !frac_ok {
        return None;
    }
    let whole: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let frac = frac_part.as_bytes();
    let digit = |i: usize| frac.get(i).map_or(0, |b| u64::from(b - b'0'));
    let mut centis = whole.checked_mul(100)?.checked_add(digit(0) * 10 + digit(1))?;
    if digit(2) >= 5 {
        centis = centis.checked_add(1)?;
    }
    Some(centis)
}

/// Half-open interval `[start, end)` in source time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeRange {
    /// Builds a range, rejecting `end <= start`.
    pub fn new(start: Timestamp, end: Timestamp) -> Option<TimeRange> {
        (end > start).then_some(TimeRange { start, end })
    }

    /// Builds a range without checking ordering; used for raw, unsanitized picks.
    pub const fn unchecked(start: Timestamp, end: Timestamp) -> TimeRange {
        TimeRange { start, end }
    }

    pub fn from_secs_f64(start: f64, end: f64) -> Result<TimeRange, TimestampError> {
        Ok(TimeRange::unchecked(
            normalize_timestamp(start)?,
            normalize_timestamp(end)?,
        ))
    }

    pub fn is_valid(&self) -> bool {
        self.end > self.start
    }

    pub fn duration(&self) -> Timestamp {
        self.end.saturating_sub(self.start)
    }

    pub fn overlaps(&self, other: &TimeRange) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn intersect(&self, other: &TimeRange) -> Option<TimeRange> {
        TimeRange::new(self.start.max(other.start), self.end.min(other.end))
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}
