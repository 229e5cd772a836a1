//! Turning a transcript and persona into a cut-list.
//!
//! Two routes produce candidates: an LLM prompted with the persona
//! ([`build_prompt`], [`request_selection`], [`parse_selection`]) and a
//! deterministic scorer plus knapsack ([`heuristic_select`]). Both routes end
//! in [`sanitize_cutlist`], which is the only way a selection becomes a
//! validated cut-list.

mod backend;
mod heuristic;
mod parse;
mod prompt;
mod sanitize;
mod score;
mod visual;

use thiserror::Error;

use crate::cutlist::CutListError;

pub use backend::{
    prompt_hash, request_selection, ChatRequest, Exchange, LlmBackend, LlmError, MockLlm,
    RetryPolicy, ScriptedLlm, SelectionResponse,
};
pub use heuristic::{
    choose_candidates, heuristic_select, Candidate, HeuristicConfig, Selection,
    DP_CANDIDATE_LIMIT, DURATION_QUANTUM, SCORE_SCALE,
};
pub use parse::{parse_selection, Annotation, AnnotationKind, ParseMode, ParsedSelection};
pub use prompt::{build_prompt, build_visual_prompt, PromptBundle, SCHEMA_HINT};
pub use sanitize::{sanitize_cutlist, BUDGET_TOLERANCE, MERGE_GAP, MIN_SEGMENT};
pub use score::{score_segment, tfidf_keywords, Scorer, ScoringConfig, SegmentScore};
pub use visual::select_visual;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("selection backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { attempts: u32, message: String },
    #[error("no select_segments structure found in backend response")]
    SelectionParseError { raw: String },
    #[error("no segment survived selection")]
    EmptySelection,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    CutList(#[from] CutListError),
    #[error("audit log write failed: {0}")]
    Audit(String),
}
