//! Job service for the highlight-clip pipeline.
//!
//! Each job lives in its own directory under a work root: the uploaded
//! source, a `manifest.json` describing state and artifacts, and every
//! artifact a stage produced. [`Pipeline`] runs stages against that store and
//! [`http::router`] exposes it over HTTP.

pub mod backends;
pub mod clock;
pub mod http;
pub mod manifest;
pub mod pipeline;
pub mod store;

use thiserror::Error;

pub use backends::{BackendConfig, Backends, HttpEndpoint, TranscriberEndpoint};
pub use clock::{Clock, FixedClock, IdStrategy, SystemClock};
pub use manifest::{ArtifactKind, Artifacts, JobFailure, JobManifest, JobState, Stage};
pub use pipeline::{CutListEdit, JobSource, Pipeline, PipelineConfig, SelectorKind};
pub use store::{FsJobStore, JobStore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("not ready: {0}")]
    NotReady(String),
    #[error("stage {stage} cannot run from state {from}")]
    InvalidTransition { from: JobState, stage: Stage },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("job creation failed: {0}")]
    JobCreateFailed(String),
    #[error("edit rejected: {0}")]
    EditRejected(String),
    #[error("stage {stage} failed: {message}")]
    StageFailed { stage: Stage, message: String },
    #[error("storage error: {0}")]
    Storage(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}
