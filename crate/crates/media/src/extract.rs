//! Audio extraction with a primary and a fallback strategy.
//!
//! The primary strategy invokes the transcoder directly on the source file,
//! from the source's directory. Names the transcoder cannot take literally
//! (URL-like names containing `:`, non-UTF-8 bytes) or an output the
//! transcoder left empty make it fail. The fallback links or copies the
//! source to a short ASCII name in a private temp directory, forces the input
//! demuxer from the container type, and moves the result into place.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clipsmith_core::{AudioArtifact, AudioFormat, Extractor, VideoMeta};

use crate::probe::probe;
use crate::tool::Transcoder;
use crate::MediaError;

/// Sample rate of extracted speech audio.
pub const SPEECH_SAMPLE_RATE: u32 = 16_000;

fn codec_args(format: AudioFormat) -> Vec<&'static str> {
    match format {
        AudioFormat::Wav => vec!["-c:a", "pcm_s16le"],
        AudioFormat::Mp3 => vec!["-c:a", "libmp3lame", "-q:a", "4"],
        AudioFormat::M4a => vec!["-c:a", "aac", "-b:a", "64k"],
        AudioFormat::Flac => vec!["-c:a", "flac"],
    }
}

fn extraction_args(input: OsString, demuxer: Option<&str>, format: AudioFormat, out: OsString) -> Vec<OsString> {
    let mut args: Vec<OsString> = ["-hide_banner", "-loglevel", "error", "-y"].map(OsString::from).to_vec();
    if let Some(d) = demuxer {
        args.extend(["-f", d].map(OsString::from));
    }
    args.push("-i".into());
    args.push(input);
    args.extend(["-vn", "-ac", "1", "-ar"].map(OsString::from));
    args.push(SPEECH_SAMPLE_RATE.to_string().into());
    args.extend(codec_args(format).into_iter().map(OsString::from));
    args.push(out);
    args
}

fn non_empty(path: &Path) -> bool {
    std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false)
}

fn primary(tool: &Transcoder, source: &Path, format: AudioFormat, out: &Path) -> Result<(), String> {
    let name = source.file_name().ok_or("source has no file name")?;
    if name.to_str().is_none() {
        return Err(format!("source name is not valid UTF-8: {}", source.display()));
    }
    let dir = match source.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let out_abs = std::path::absolute(out).map_err(|e| e.to_string())?;
    let res = tool
        .run_in(
            extraction_args(name.to_owned(), None, format, out_abs.into_os_string()),
            &dir,
        )
        .map_err(|e| e.to_string())?;
    if !res.success() {
        return Err(format!("exit {:?}: {}", res.status, res.stderr_tail()));
    }
    if !non_empty(out) {
        return Err("transcoder produced no output".into());
    }
    Ok(())
}

fn fallback(tool: &Transcoder, meta: &VideoMeta, format: AudioFormat, out: &Path) -> Result<(), String> {
    let tmp = tempfile::Builder::new()
        .prefix("clipsmith-extract")
        .tempdir()
        .map_err(|e| e.to_string())?;
    let input = tmp.path().join(format!("input.{}", meta.container.extension()));
    if std::fs::hard_link(&meta.path, &input).is_err() {
        std::fs::copy(&meta.path, &input).map_err(|e| format!("staging source: {e}"))?;
    }
    let staged_out = tmp.path().join(format!("audio.{}", format.extension()));
    let res = tool
        .run_in(
            extraction_args(
                input.into_os_string(),
                Some(meta.container.demuxer()),
                format,
                staged_out.clone().into_os_string(),
            ),
            tmp.path(),
        )
        .map_err(|e| e.to_string())?;
    if !res.success() {
        return Err(format!("exit {:?}: {}", res.status, res.stderr_tail()));
    }
    if !non_empty(&staged_out) {
        return Err("transcoder produced no output".into());
    }
    if std::fs::rename(&staged_out, out).is_err() {
        std::fs::copy(&staged_out, out).map_err(|e| format!("placing output: {e}"))?;
    }
    Ok(())
}

/// Extracts mono speech audio from `video` into `out`.
pub fn extract_audio(
    tool: &Transcoder,
    video: &VideoMeta,
    format: AudioFormat,
    out: &Path,
) -> Result<AudioArtifact, MediaError> {
    if !video.has_audio {
        return Err(MediaError::NoAudioStream {
            path: video.path.clone(),
        });
    }
    let used = match primary(tool, &video.path, format, out) {
        Ok(()) => Extractor::Primary,
        Err(first) => {
            tracing::warn!(source = %video.path.display(), "primary audio extraction failed: {first}");
            let _ = std::fs::remove_file(out);
            match fallback(tool, video, format, out) {
                Ok(()) => Extractor::Fallback,
                Err(second) => {
                    let _ = std::fs::remove_file(out);
                    return Err(MediaError::ExtractionFailed {
                        primary: first,
                        fallback: second,
                    });
                }
            }
        }
    };
    let info = probe(tool, out)?;
    let duration = info.duration.ok_or_else(|| MediaError::ProbeFailed {
        path: out.to_path_buf(),
        diagnostics: "extracted audio has no duration".into(),
    })?;
    Ok(AudioArtifact {
        path: out.to_path_buf(),
        format,
        duration,
        extractor_used: used,
    })
}
