//! Descriptions of source videos and extracted audio.
//!
//! The values are produced by the transcoder wrapper in `clipsmith-media`;
//! they live here because selection and the service need them too.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::timestamp::Timestamp;

/// Container families accepted as pipeline input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Container {
    Mp4,
    M4v,
    QuickTime,
    Wmv,
    WebM,
    MsVideo,
    Mpg,
    ThreeGpp,
}

impl Container {
    pub const ALL: [Container; 8] = [
        Container::Mp4,
        Container::M4v,
        Container::QuickTime,
        Container::Wmv,
        Container::WebM,
        Container::MsVideo,
        Container::Mpg,
        Container::ThreeGpp,
    ];

    pub fn from_extension(ext: &str) -> Option<Container> {
        Some(match ext.to_ascii_lowercase().as_str() {
            "mp4" => Container::Mp4,
            "m4v" => Container::M4v,
            "mov" | "qt" => Container::QuickTime,
            "wmv" => Container::Wmv,
            "webm" => Container::WebM,
            "avi" => Container::MsVideo,
            "mpg" | "mpeg" => Container::Mpg,
            "3gp" | "3gpp" => Container::ThreeGpp,
            _ => return None,
        })
    }

    pub fn from_path(path: &Path) -> Option<Container> {
        path.extension()
            .and_then(|e| e.to_str())
            .and_then(Container::from_extension)
    }

    /// Name of the transcoder demuxer that reads this container.
    pub fn demuxer(self) -> &'static str {
        match self {
            Container::Mp4 | Container::M4v | Container::QuickTime | Container::ThreeGpp => "mov",
            Container::Wmv => "asf",
            Container::WebM => "matroska",
            Container::MsVideo => "avi",
            Container::Mpg => "mpeg",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Container::Mp4 => "mp4",
            Container::M4v => "m4v",
            Container::QuickTime => "mov",
            Container::Wmv => "wmv",
            Container::WebM => "webm",
            Container::MsVideo => "avi",
            Container::Mpg => "mpg",
            Container::ThreeGpp => "3gp",
        }
    }

    pub fn mime_type(self) -> &'static str {
        match self {
            Container::Mp4 => "video/mp4",
            Container::M4v => "video/x-m4v",
            Container::QuickTime => "video/quicktime",
            Container::Wmv => "video/x-ms-wmv",
            Container::WebM => "video/webm",
            Container::MsVideo => "video/x-msvideo",
            Container::Mpg => "video/mpeg",
            Container::ThreeGpp => "video/3gpp",
        }
    }
}

impl fmt::Display for Container {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Container::Mp4 => "MP4",
            Container::M4v => "M4V",
            Container::QuickTime => "QuickTime",
            Container::Wmv => "WMV",
            Container::WebM => "WebM",
            Container::MsVideo => "MSVideo",
            Container::Mpg => "MPG",
            Container::ThreeGpp => "3GPP",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub path: PathBuf,
    pub container: Container,
    pub duration: Timestamp,
    pub has_audio: bool,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_codec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_codec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AudioFormat {
    Mp3,
    #[default]
    Wav,
    M4a,
    Flac,
}

impl AudioFormat {
    pub fn extension(self) -> &'static str {
        match self {
            AudioFormat::Mp3 => "mp3",
            AudioFormat::Wav => "wav",
            AudioFormat::M4a => "m4a",
            AudioFormat::Flac => "flac",
        }
    }

    pub fn from_extension(ext: &str) -> Option<AudioFormat> {
        Some(match ext.to_ascii_lowercase().as_str() {
            "mp3" => AudioFormat::Mp3,
            "wav" => AudioFormat::Wav,
            "m4a" => AudioFormat::M4a,
            "flac" => AudioFormat::Flac,
            _ => return None,
        })
    }
}

impl std::str::FromStr for AudioFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AudioFormat::from_extension(s).ok_or_else(|| format!("unsupported audio format {s:?}"))
    }
}

/// Which extraction strategy produced an audio artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extractor {
    Primary,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioArtifact {
    pub path: PathBuf,
    pub format: AudioFormat,
    pub duration: Timestamp,
    pub extractor_used: Extractor,
}
