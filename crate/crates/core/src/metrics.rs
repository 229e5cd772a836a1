//! Clip quality metrics over a summary (cut-list) and its source transcript.
//!
//! All similarity work goes through an [`EmbeddingProvider`]; the built-in
//! [`HashedBagOfWords`] provider is deterministic and dependency-free. The
//! numeric core is generic over the float type.

use std::fmt::Write as _;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutlist::{CutList, CutSegment};
use crate::text::tokens;
use crate::transcript::{Transcript, TranscriptSegment};

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_TAU: f64 = 0.60;
pub const HASHED_BOW_ID: &str = "hashed-bow-256";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("tau must lie strictly between 0 and 1, got {0}")]
    InvalidTau(f64),
}

/// Unit-length vector, or the all-zero vector for text without tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<F> {
    components: Vec<F>,
}

impl<F: Float> EmbeddingVector<F> {
    pub fn zero(dim: usize) -> Self {
        EmbeddingVector {
            components: vec![F::zero(); dim],
        }
    }

    /// L2-normalizes `raw`; a zero-norm input stays the zero vector.
    pub fn from_components(raw: Vec<F>) -> Self {
        let norm = raw.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt();
        if norm == F::zero() || !norm.is_finite() {
            return Self::zero(raw.len());
        }
        EmbeddingVector {
            components: raw.into_iter().map(|x| x / norm).collect(),
        }
    }

    pub fn components(&self) -> &[F] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&x| x == F::zero())
    }

    pub fn norm(&self) -> F {
        self.components.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt()
    }
}

pub trait EmbeddingProvider<F>: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> EmbeddingVector<F>;
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Term-frequency vector over hashed token buckets.
///
/// Tokens are lowercased alphanumeric runs of at least two characters; each
/// lands in bucket `fnv1a64(token) % dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfWords {
    dim: usize,
}

impl HashedBagOfWords {
    pub fn new(dim: usize) -> Self {
        HashedBagOfWords { dim: dim.max(1) }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dim as u64) as usize
    }
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        HashedBagOfWords::new(DEFAULT_DIMENSION)
    }
}

impl<F: Float> EmbeddingProvider<F> for HashedBagOfWords {
    fn id(&self) -> &str {
        if self.dim == DEFAULT_DIMENSION {
            HASHED_BOW_ID
        } else {
            "hashed-bow"
        }
    }

    fn embed(&self, text: &str) -> EmbeddingVector<F> {
        let mut raw = vec![F::zero(); self.dim];
        for tok in tokens(text) {
            if tok.chars().count() >= 2 {
                let b = self.bucket(&tok);
                raw[b] = raw[b] + F::one();
            }
        }
        EmbeddingVector::from_components(raw)
    }
}

pub fn embed_text<F: Float>(text: &str, provider: &dyn EmbeddingProvider<F>) -> EmbeddingVector<F> {
    provider.embed(text)
}

/// Cosine similarity; zero whenever either side is the zero vector or the
/// dimensions differ.
pub fn cosine<F: Float>(u: &EmbeddingVector<F>, v: &EmbeddingVector<F>) -> F {
    if u.dim() != v.dim() || u.is_zero() || v.is_zero() {
        return F::zero();
    }
    let dot = u
        .components
        .iter()
        .zip(&v.components)
        .fold(F::zero(), |acc, (&a, &b)| acc + a * b);
    let c = dot / (u.norm() * v.norm());
    c.max(-F::one()).min(F::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig<F> {
    pub tau: F,
    pub provider: String,
}

impl<F: Float> MetricsConfig<F> {
    pub fn with_tau(tau: F) -> Result<Self, MetricsError> {
        let cfg = MetricsConfig {
            tau,
            provider: HASHED_BOW_ID.to_string(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), MetricsError> {
        if self.tau > F::zero() && self.tau < F::one() {
            Ok(())
        } else {
            Err(MetricsError::InvalidTau(self.tau.to_f64().unwrap_or(f64::NAN)))
        }
    }
}

impl<F: Float> Default for MetricsConfig<F> {
    fn default() -> Self {
        MetricsConfig {
            tau: F::from(DEFAULT_TAU).expect("representable"),
            provider: HASHED_BOW_ID.to_string(),
        }
    }
}

fn mean<F: Float>(sum: F, n: usize) -> F {
    sum / F::from(n).expect("count fits the float type")
}

/// Fraction of `originals` whose best similarity to any summary vector
/// reaches `tau`.
pub fn coverage_coherence_vectors<F: Float>(
    originals: &[EmbeddingVector<F>],
    summary: &[EmbeddingVector<F>],
    tau: F,
) -> Result<F, MetricsError> {
    if originals.is_empty() {
        return Err(MetricsError::UndefinedMetric("coverage needs at least one original segment"));
    }
    let covered = originals
        .iter()
        .filter(|s| summary.iter().any(|c| cosine(*s, c) >= tau))
        .count();
    Ok(mean(F::from(covered).expect("count fits"), originals.len()))
}

/// Mean similarity of consecutive summary vectors; zero for a single one.
pub fn adjacency_coherence_vectors<F: Float>(summary: &[EmbeddingVector<F>]) -> Result<F, MetricsError> {
    match summary.len() {
        0 => Err(MetricsError::UndefinedMetric("adjacency needs at least one clip")),
        1 => Ok(F::zero()),
        n => {
            let sum = summary.windows(2).fold(F::zero(), |acc, w| acc + cosine(&w[0], &w[1]));
            Ok(mean(sum, n - 1))
        }
    }
}

/// Mean over summary vectors of their best similarity to any original.
pub fn informativeness_vectors<F: Float>(
    originals: &[EmbeddingVector<F>],
    summary: &[EmbeddingVector<F>],
) -> Result<F, MetricsError> {
    if originals.is_empty() || summary.is_empty() {
        return Err(MetricsError::UndefinedMetric("informativeness needs originals and clips"));
    }
    let sum = summary.iter().fold(F::zero(), |acc, c| {
        acc + originals.iter().map(|s| cosine(c, s)).fold(F::neg_infinity(), F::max)
    });
    Ok(mean(sum, summary.len()))
}

/// Mean similarity over unordered distinct pairs; zero for a single vector.
pub fn redundancy_vectors<F: Float>(summary: &[EmbeddingVector<F>]) -> Result<F, MetricsError> {
    let n = summary.len();
    match n {
        0 => Err(MetricsError::UndefinedMetric("redundancy needs at least one clip")),
        1 => Ok(F::zero()),
        _ => {
            let mut sum = F::zero();
            for i in 0..n {
                for j in i + 1..n {
                    sum = sum + cosine(&summary[i], &summary[j]);
                }
            }
            Ok(mean(sum, n * (n - 1) / 2))
        }
    }
}

fn embed_all<'a, F: Float>(
    texts: impl IntoIterator<Item = &'a str>,
    provider: &dyn EmbeddingProvider<F>,
) -> Vec<EmbeddingVector<F>> {
    texts.into_iter().map(|t| provider.embed(t)).collect()
}

pub fn coverage_coherence<F: Float>(
    originals: &[TranscriptSegment],
    summary: &[CutSegment],
    cfg: &MetricsConfig<F>,
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricsError> {
    cfg.check()?;
    coverage_coherence_vectors(
        &embed_all(originals.iter().map(|s| s.text.as_str()), provider),
        &embed_all(summary.iter().map(|s| s.text.as_str()), provider),
        cfg.tau,
    )
}

pub fn adjacency_coherence<F: Float>(
    summary: &[CutSegment],
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricsError> {
    adjacency_coherence_vectors(&embed_all(summary.iter().map(|s| s.text.as_str()), provider))
}

pub fn informativeness<F: Float>(
    originals: &[TranscriptSegment],
    summary: &[CutSegment],
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricsError> {
    informativeness_vectors(
        &embed_all(originals.iter().map(|s| s.text.as_str()), provider),
        &embed_all(summary.iter().map(|s| s.text.as_str()), provider),
    )
}

pub fn redundancy<F: Float>(
    summary: &[CutSegment],
    provider: &dyn EmbeddingProvider<F>,
) -> Result<F, MetricsError> {
    redundancy_vectors(&embed_all(summary.iter().map(|s| s.text.as_str()), provider))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub coverage_coherence: f64,
    pub adjacency_coherence: f64,
    pub informativeness: f64,
    pub redundancy: f64,
    pub segment_count: usize,
    /// Seconds.
    pub mean_segment_duration: f64,
    pub meaningful_text_length: usize,
    pub tau: f64,
    pub provider: String,
}

/// Computes every metric for one job. Clips are taken in playback order.
pub fn build_report<F: Float>(
    t: &Transcript,
    c: &CutList,
    cfg: &MetricsConfig<F>,
    provider: &dyn EmbeddingProvider<F>,
) -> Result<MetricsReport, MetricsError> {
    cfg.check()?;
    let clips: Vec<CutSegment> = c.playback().cloned().collect();
    let originals = embed_all(t.segments.iter().map(|s| s.text.as_str()), provider);
    let summary = embed_all(clips.iter().map(|s| s.text.as_str()), provider);
    let f = |x: F| x.to_f64().unwrap_or(f64::NAN);
    let total: u64 = clips.iter().map(|s| s.duration().centis()).sum();
    let words: usize = clips.iter().map(|s| s.text.split_whitespace().count()).sum();
    Ok(MetricsReport {
        coverage_coherence: f(coverage_coherence_vectors(&originals, &summary, cfg.tau)?),
        adjacency_coherence: f(adjacency_coherence_vectors(&summary)?),
        informativeness: f(informativeness_vectors(&originals, &summary)?),
        redundancy: f(redundancy_vectors(&summary)?),
        segment_count: clips.len(),
        mean_segment_duration: total as f64 / 100.0 / clips.len() as f64,
        meaningful_text_length: words,
        tau: f(cfg.tau),
        provider: provider.id().to_string(),
    })
}

/// Mean and sample standard deviation; the deviation is `None` below two
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: Option<f64>,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Option<MeanStd> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.len() > 1).then(|| {
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        });
        Some(MeanStd { mean, std })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.3} ± {:.3}", self.mean, s),
            None => write!(f, "{:.3}", self.mean),
        }
    }
}

/// Report rows in display order: (label, column name, accessor).
pub const REPORT_ROWS: [(&str, &str, fn(&MetricsReport) -> f64); 7] = [
    ("Clip coherence (coverage)", "coverage_coherence", |r| r.coverage_coherence),
    ("Clip coherence (adjacency)", "adjacency_coherence", |r| r.adjacency_coherence),
    ("Clip informativeness", "informativeness", |r| r.informativeness),
    ("Clip redundancy", "redundancy", |r| r.redundancy),
    ("Segments number of clips", "segment_count", |r| r.segment_count as f64),
    ("Mean segment duration (s)", "mean_segment_duration", |r| r.mean_segment_duration),
    ("Clips meaningful text length", "meaningful_text_length", |r| r.meaningful_text_length as f64),
];

/// Per-metric mean ± sample standard deviation across jobs.
pub fn summarize(reports: &[MetricsReport]) -> Vec<(&'static str, MeanStd)> {
    REPORT_ROWS
        .iter()
        .filter_map(|(label, _, get)| {
            let xs: Vec<f64> = reports.iter().map(get).collect();
            MeanStd::of(&xs).map(|m| (*label, m))
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per job followed by `mean` and `std` rows.
pub fn batch_csv(jobs: &[(String, MetricsReport)]) -> String {
    let mut out = String::from("job");
    for (_, col, _) in REPORT_ROWS {
        out.push(',');
        out.push_str(col);
    }
    out.push('\n');
    for (job, r) in jobs {
        out.push_str(&csv_field(job));
        for (_, _, get) in REPORT_ROWS {
            let _ = write!(out, ",{:.6}", get(r));
        }
        out.push('\n');
    }
    let reports: Vec<MetricsReport> = jobs.iter().map(|(_, r)| r.clone()).collect();
    let stats = summarize(&reports);
    if !stats.is_empty() {
        out.push_str("mean");
        for (_, m) in &stats {
            let _ = write!(out, ",{:.6}", m.mean);
        }
        out.push_str("\nstd");
        for (_, m) in &stats {
            match m.std {
                Some(s) => {
                    let _ = write!(out, ",{s:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Aligned two-column table of `mean ± std` per metric.
pub fn batch_table(reports: &[MetricsReport], tau: f64) -> String {
    let stats = summarize(reports);
    let width = REPORT_ROWS.iter().map(|(l, _, _)| l.chars().count()).max().unwrap_or(0);
    let mut out = format!("{:<width$}  value (n = {}, τ = {tau:.2})\n", "metric", reports.len());
    let _ = writeln!(out, "{}", "-".repeat(width + 30));
    for (label, m) in stats {
        let _ = writeln!(out, "{label:<width$}  {m}");
    }
    out
}
