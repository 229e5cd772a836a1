//! Command-line definition.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use clipsmith_core::{AudioFormat, Timestamp};
use clipsmith_media::Orientation;

#[derive(Debug, Parser)]
#[command(name = "clipsmith", version, about = "Extractive highlight clips from long videos")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "CLIPSMITH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Transcoder executable.
    #[arg(long, global = true, env = "CLIPSMITH_FFMPEG")]
    pub ffmpeg: Option<PathBuf>,
    /// Use offline mock backends for anything not configured explicitly.
    #[arg(long, global = true, env = "CLIPSMITH_MOCK")]
    pub mock: bool,
    /// Directory with mock transcripts and LLM responses.
    #[arg(long, global = true, env = "CLIPSMITH_MOCK_DIR")]
    pub mock_dir: Option<PathBuf>,
    /// Force the transcription language.
    #[arg(long, global = true, env = "CLIPSMITH_LANGUAGE")]
    pub language: Option<String>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PersonaArgs {
    /// Audience or style of the clip, e.g. marketing or training.
    #[arg(long)]
    pub role: Option<String>,
    /// Extra instructions for the selector.
    #[arg(long = "requirements")]
    pub extra_requirements: Option<String>,
    /// Comma-separated keywords.
    #[arg(long, value_delimiter = ',')]
    pub keywords: Option<Vec<String>>,
    /// Clip length budget in seconds or HH:MM:SS.
    #[arg(long)]
    pub max_duration: Option<Timestamp>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SelectorArgs {
    /// Deterministic keyword and structure scoring.
    #[arg(long, conflicts_with = "backend")]
    pub heuristic: bool,
    /// The configured LLM backend.
    #[arg(long)]
    pub backend: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MergeArgs {
    /// Fade length in seconds at each segment edge.
    #[arg(long)]
    pub fade: Option<f64>,
    /// x264 constant rate factor.
    #[arg(long)]
    pub crf: Option<u32>,
    /// x264 preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// AAC bitrate in kbit/s.
    #[arg(long)]
    pub audio_bitrate: Option<u32>,
    /// horizontal or vertical.
    #[arg(long)]
    pub orientation: Option<Orientation>,
    /// Render subtitles into the picture.
    #[arg(long)]
    pub burn_subtitles: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect a video file.
    Probe {
        video: PathBuf,
        /// Write the metadata document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract mono speech audio from a video.
    ExtractAudio {
        video: PathBuf,
        /// Audio file to write; its extension picks the format.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<AudioFormat>,
    },
    /// Transcribe audio with the fast and accurate backends.
    Transcribe {
        audio: PathBuf,
        /// Merged accurate transcript.
        #[arg(long)]
        out: PathBuf,
        /// Also keep the fast backend's transcript.
        #[arg(long)]
        fast_out: Option<PathBuf>,
    },
    /// Select segments from a transcript.
    Select {
        transcript: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Source video; required when the transcript is empty.
        #[arg(long)]
        video: Option<PathBuf>,
        /// Where to record the raw LLM exchange.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[command(flatten)]
        selector: SelectorArgs,
        #[command(flatten)]
        persona: PersonaArgs,
    },
    /// Cut, fade and join the segments of a cut-list.
    Merge {
        video: PathBuf,
        cutlist: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep per-segment clips here.
        #[arg(long)]
        workdir: Option<PathBuf>,
        /// Transcript for burned-in subtitles.
        #[arg(long, requires = "burn_subtitles")]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        merge: MergeArgs,
    },
    /// Subtitles for a merged clip, in output time.
    Subs {
        transcript: PathBuf,
        cutlist: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Change a clip's orientation.
    Reframe {
        clip: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        merge: MergeArgs,
    },
    /// Score cut-lists against their transcripts.
    Eval {
        /// Pairs of transcript and cut-list files.
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        /// Report document (one report, or an array for several pairs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-job CSV with mean and deviation rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every stage on one video.
    E2e {
        video: PathBuf,
        /// Directory that receives the job.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        selector: SelectorArgs,
        #[command(flatten)]
        persona: PersonaArgs,
        #[command(flatten)]
        merge: MergeArgs,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run the HTTP job service.
    Serve {
        #[arg(long, env = "CLIPSMITH_LISTEN")]
        listen: Option<SocketAddr>,
        /// Root directory for job data.
        #[arg(long, env = "CLIPSMITH_WORKDIR")]
        workdir: Option<PathBuf>,
        #[command(flatten)]
        selector: SelectorArgs,
    },
}
