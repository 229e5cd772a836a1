//! The persisted job record and its state machine.

use std::fmt;
use std::str::FromStr;

use clipsmith_core::transcript::LanguageVerdict;
use clipsmith_core::{AudioArtifact, Persona, VideoMeta};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobState {
    Created,
    AudioExtracted,
    Transcribed,
    Selected,
    Merged,
    Failed,
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobState::Created => "CREATED",
            JobState::AudioExtracted => "AUDIO_EXTRACTED",
            JobState::Transcribed => "TRANSCRIBED",
            JobState::Selected => "SELECTED",
            JobState::Merged => "MERGED",
            JobState::Failed => "FAILED",
        })
    }
}

/// A pipeline step; running it moves a job from [`Stage::from`] to
/// [`Stage::to`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ExtractAudio,
    Transcribe,
    Select,
    Merge,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::ExtractAudio, Stage::Transcribe, Stage::Select, Stage::Merge];

    pub fn from(self) -> JobState {
        match self {
            Stage::ExtractAudio => JobState::Created,
            Stage::Transcribe => JobState::AudioExtracted,
            Stage::Select => JobState::Transcribed,
            Stage::Merge => JobState::Selected,
        }
    }

    pub fn to(self) -> JobState {
        match self {
            Stage::ExtractAudio => JobState::AudioExtracted,
            Stage::Transcribe => JobState::Transcribed,
            Stage::Select => JobState::Selected,
            Stage::Merge => JobState::Merged,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::ExtractAudio => "extract_audio",
            Stage::Transcribe => "transcribe",
            Stage::Select => "select",
            Stage::Merge => "merge",
        }
    }

    /// The stage that follows `state`, if any.
    pub fn after(state: JobState) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.from() == state)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "extract_audio" | "audio" => Ok(Stage::ExtractAudio),
            "transcribe" => Ok(Stage::Transcribe),
            "select" => Ok(Stage::Select),
            "merge" => Ok(Stage::Merge),
            other => Err(format!("unknown stage {other:?}")),
        }
    }
}

/// Artifact kinds addressable over the API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Video,
    Audio,
    Transcript,
    Cutlist,
    Clip,
    Subtitles,
    Metrics,
    LlmExchange,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 8] = [
        ArtifactKind::Video,
        ArtifactKind::Audio,
        ArtifactKind::Transcript,
        ArtifactKind::Cutlist,
        ArtifactKind::Clip,
        ArtifactKind::Subtitles,
        ArtifactKind::Metrics,
        ArtifactKind::LlmExchange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Video => "video",
            ArtifactKind::Audio => "audio",
            ArtifactKind::Transcript => "transcript",
            ArtifactKind::Cutlist => "cutlist",
            ArtifactKind::Clip => "clip",
            ArtifactKind::Subtitles => "subtitles",
            ArtifactKind::Metrics => "metrics",
            ArtifactKind::LlmExchange => "llm_exchange",
        }
    }
}

impl FromStr for ArtifactKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "video" | "source" => Ok(ArtifactKind::Video),
            "audio" => Ok(ArtifactKind::Audio),
            "transcript" => Ok(ArtifactKind::Transcript),
            "cutlist" | "cut_list" => Ok(ArtifactKind::Cutlist),
            "clip" => Ok(ArtifactKind::Clip),
            "subtitles" | "srt" => Ok(ArtifactKind::Subtitles),
            "metrics" => Ok(ArtifactKind::Metrics),
            "llm_exchange" | "exchange" => Ok(ArtifactKind::LlmExchange),
            other => Err(format!("unknown artifact kind {other:?}")),
        }
    }
}

/// Paths relative to the job directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifacts {
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_fast: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutlist: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtitles: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_exchange: Option<String>,
}

impl Artifacts {
    pub fn get(&self, kind: ArtifactKind) -> Option<&str> {
        match kind {
            ArtifactKind::Video => Some(self.video.as_str()),
            ArtifactKind::Audio => self.audio.as_deref(),
            ArtifactKind::Transcript => self.transcript.as_deref(),
            ArtifactKind::Cutlist => self.cutlist.as_deref(),
            ArtifactKind::Clip => self.clip.as_deref(),
            ArtifactKind::Subtitles => self.subtitles.as_deref(),
            ArtifactKind::Metrics => self.metrics.as_deref(),
            ArtifactKind::LlmExchange => self.llm_exchange.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: JobState,
    pub at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobManifest {
    pub job_id: String,
    pub state: JobState,
    pub persona: Persona,
    /// Source metadata; `path` is relative to the job directory.
    pub source: VideoMeta,
    /// Original file name of the upload or path.
    pub source_name: String,
    pub artifacts: Artifacts,
    /// Extracted audio details; `path` is relative to the job directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<AudioArtifact>,
    /// Current cut-list version; earlier versions stay on disk.
    #[serde(default)]
    pub cutlist_version: u32,
    /// Set once the source turns out to carry no speech.
    #[serde(default)]
    pub voiceover_free: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<LanguageVerdict>,
    /// Which selector produced the current cut-list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<String>,
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<JobFailure>,
    /// State to resume from after a failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume_from: Option<JobState>,
}

impl JobManifest {
    /// State a stage must start from, treating a failed job as sitting at
    /// its resume state.
    pub fn effective_state(&self) -> JobState {
        match (self.state, self.resume_from) {
            (JobState::Failed, Some(s)) => s,
            (s, _) => s,
        }
    }

    pub fn record(&mut self, state: JobState, at: String) {
        self.state = state;
        self.transitions.push(Transition { state, at });
    }
}
