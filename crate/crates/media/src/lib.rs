//! Media operations backed by an external transcoder (ffmpeg): probing,
//! audio extraction with fallback, faded per-segment re-encoding, concat
//! assembly, reframing and subtitle burn-in.

pub mod analysis;
pub mod cutmerge;
pub mod extract;
pub mod probe;
pub mod reframe;
pub mod synth;
pub mod tool;

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub use cutmerge::{
    concat_clips, effective_fade, merge, process_clip, ClipArtifact, MergeConfig, Orientation,
};
pub use extract::extract_audio;
pub use probe::{probe, probe_video, ProbeInfo};
pub use reframe::{burn_subtitles, reframe};
pub use tool::{run_transcoder, ProcessResult, Transcoder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MediaError {
    #[error("transcoder not found: {}", program.display())]
    ToolNotFound { program: PathBuf },
    #[error("transcoder {} timed out after {after:?}", program.display())]
    ToolTimeout { program: PathBuf, after: Duration },
    #[error("unsupported container: {}", path.display())]
    UnsupportedFormat { path: PathBuf },
    #[error("probe failed for {}: {diagnostics}", path.display())]
    ProbeFailed { path: PathBuf, diagnostics: String },
    #[error("no audio stream in {}", path.display())]
    NoAudioStream { path: PathBuf },
    #[error("audio extraction failed; primary: {primary}; fallback: {fallback}")]
    ExtractionFailed { primary: String, fallback: String },
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("invalid merge configuration: {0}")]
    InvalidConfig(String),
    #[error("clip encode failed{}: {stderr}", index.map(|i| format!(" (segment {i})")).unwrap_or_default())]
    ClipEncodeFailed { index: Option<usize>, stderr: String },
    #[error("concat failed: {0}")]
    ConcatFailed(String),
    #[error("cut-list is empty")]
    EmptyCutList,
    #[error("reframe failed: {0}")]
    ReframeFailed(String),
    #[error("subtitle burn-in failed: {0}")]
    SubtitleBurnFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
}
