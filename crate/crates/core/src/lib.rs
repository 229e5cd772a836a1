//! Domain model and pure pipeline logic for extractive highlight clips:
//! timestamps and cut-lists, transcripts and transcriber backends, segment
//! selection, subtitle remapping and clip quality metrics.
//!
//! Media I/O lives in `clipsmith-media`; the job service and HTTP backends
//! live in `clipsmith-service`.

pub mod cutlist;
pub mod media;
pub mod metrics;
pub mod persona;
pub mod select;
pub mod subtitles;
pub mod text;
pub mod timestamp;
pub mod transcribe;
pub mod transcript;

pub use cutlist::{validate_cutlist, CutList, CutListError, CutSegment, ValidatedCutList, Violation};
pub use media::{AudioArtifact, AudioFormat, Container, Extractor, VideoMeta};
pub use persona::Persona;
pub use timestamp::{normalize_timestamp, parse_time_to_seconds, TimeRange, Timestamp, TimestampError};
pub use transcript::{Transcript, TranscriptSegment};

/// Embedding vector over `f64`, the default scalar for metrics.
pub type Embedding = metrics::EmbeddingVector<f64>;
/// Metrics configuration over `f64`.
pub type MetricsConfig = metrics::MetricsConfig<f64>;
