//! Cutting segments with fades, re-encoding them uniformly, and joining them
//! with the concat demuxer.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clipsmith_core::subtitles::{segment_map, SegmentMapping};
use clipsmith_core::{TimeRange, Timestamp, ValidatedCutList, VideoMeta};
use serde::{Deserialize, Serialize};

use crate::probe::probe;
use crate::tool::Transcoder;
use crate::MediaError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Horizontal,
    Vertical,
}

impl std::str::FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "horizontal" | "landscape" => Ok(Orientation::Horizontal),
            "vertical" | "portrait" => Ok(Orientation::Vertical),
            other => Err(format!("unknown orientation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeConfig {
    /// Seconds of fade at each segment edge, in (0, 1].
    pub fade_window: f64,
    /// x264 constant rate factor.
    pub video_quality: u32,
    pub encode_preset: String,
    /// AAC bitrate in kbit/s.
    pub audio_bitrate: u32,
    pub orientation: Orientation,
    pub burn_subtitles: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            fade_window: 0.5,
            video_quality: 23,
            encode_preset: "fast".into(),
            audio_bitrate: 128,
            orientation: Orientation::Horizontal,
            burn_subtitles: false,
        }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<(), MediaError> {
        if !(self.fade_window > 0.0 && self.fade_window <= 1.0) {
            return Err(MediaError::InvalidConfig(format!(
                "fade_window must be in (0, 1], got {}",
                self.fade_window
            )));
        }
        if self.video_quality > 51 {
            return Err(MediaError::InvalidConfig(format!(
                "video_quality must be at most 51, got {}",
                self.video_quality
            )));
        }
        if self.encode_preset.is_empty() || !self.encode_preset.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(MediaError::InvalidConfig(format!(
                "invalid encode_preset {:?}",
                self.encode_preset
            )));
        }
        if self.audio_bitrate == 0 {
            return Err(MediaError::InvalidConfig("audio_bitrate must be positive".into()));
        }
        Ok(())
    }
}

/// Fade length actually applied: the window, shrunk to half the segment.
pub fn effective_fade(duration: Timestamp, fade_window: f64) -> f64 {
    fade_window.min(duration.as_secs_f64() / 2.0)
}

fn secs(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() { "0".to_string() } else { s.to_string() }
}

/// Audio and video filter chains for a segment of length `d`.
pub fn fade_filters(d: Timestamp, fade_window: f64) -> (String, String) {
    let f = effective_fade(d, fade_window);
    let out_start = d.as_secs_f64() - f;
    let (f, st) = (secs(f), secs(out_start));
    let video = format!("format=yuv420p,fade=t=in:st=0:d={f},fade=t=out:st={st}:d={f}");
    let audio = format!("afade=t=in:st=0:d={f},afade=t=out:st={st}:d={f}");
    (video, audio)
}

/// `file:` URL form of an absolute path so the transcoder never treats a
/// name as a protocol.
pub(crate) fn file_arg(path: &Path) -> Result<OsString, MediaError> {
    let abs = std::path::absolute(path).map_err(|e| MediaError::Io(e.to_string()))?;
    let mut s = OsString::from("file:");
    s.push(abs.as_os_str());
    Ok(s)
}

/// Arguments for one faded, re-encoded segment.
pub fn process_clip_args(
    video: &VideoMeta,
    r: TimeRange,
    cfg: &MergeConfig,
    out: &Path,
) -> Result<Vec<OsString>, MediaError> {
    let (vf, af) = fade_filters(r.duration(), cfg.fade_window);
    let mut args: Vec<OsString> = vec![
        "-hide_banner".into(),
        "-loglevel".into(),
        "error".into(),
        "-y".into(),
        "-ss".into(),
        r.start.to_string().into(),
        "-to".into(),
        r.end.to_string().into(),
        "-i".into(),
        file_arg(&video.path)?,
        "-vf".into(),
        vf.into(),
    ];
    if video.has_audio {
        args.extend(["-af".into(), af.into()]);
    }
    args.extend(
        [
            "-c:v",
            "libx264",
            "-preset",
            cfg.encode_preset.as_str(),
            "-crf",
            &cfg.video_quality.to_string(),
        ]
        .map(OsString::from),
    );
    if video.has_audio {
        args.extend(["-c:a", "aac", "-b:a", &format!("{}k", cfg.audio_bitrate)].map(OsString::from));
    } else {
        args.push("-an".into());
    }
    args.push(file_arg(out)?);
    Ok(args)
}

/// Cuts `r` out of `video` with fades at both ends and re-encodes it.
pub fn process_clip(
    tool: &Transcoder,
    video: &VideoMeta,
    r: TimeRange,
    cfg: &MergeConfig,
    out: &Path,
) -> Result<PathBuf, MediaError> {
    cfg.validate()?;
    if !r.is_valid() {
        return Err(MediaError::InvalidSegment(format!("empty or reversed range {r}")));
    }
    if r.end > video.duration {
        return Err(MediaError::InvalidSegment(format!(
            "range {r} exceeds source duration {}",
            video.duration
        )));
    }
    let res = tool.run(process_clip_args(video, r, cfg, out)?)?;
    if !res.success() || !out.is_file() {
        return Err(MediaError::ClipEncodeFailed {
            index: None,
            stderr: res.stderr_tail(),
        });
    }
    Ok(out.to_path_buf())
}

fn concat_line(path: &Path) -> Result<String, MediaError> {
    let abs = std::path::absolute(path).map_err(|e| MediaError::Io(e.to_string()))?;
    let s = abs
        .to_str()
        .ok_or_else(|| MediaError::ConcatFailed(format!("path is not UTF-8: {}", abs.display())))?;
    Ok(format!("file '{}'\n", s.replace('\'', "'\\''")))
}

/// Joins clips with the concat demuxer and stream copy. All inputs must
/// share codec parameters; mismatches are rejected before invoking the tool.
pub fn concat_clips(tool: &Transcoder, clips: &[PathBuf], out: &Path) -> Result<PathBuf, MediaError> {
    let Some(first) = clips.first() else {
        return Err(MediaError::EmptyCutList);
    };
    let reference = probe(tool, first)?;
    for c in &clips[1..] {
        let other = probe(tool, c)?;
        let same_video = match (&reference.video, &other.video) {
            (Some(a), Some(b)) => {
                a.codec == b.codec
                    && a.width == b.width
                    && a.height == b.height
                    && a.pixel_format == b.pixel_format
            }
            (None, None) => true,
            _ => false,
        };
        let same_audio = match (&reference.audio, &other.audio) {
            (Some(a), Some(b)) => a.codec == b.codec && a.sample_rate == b.sample_rate && a.channels == b.channels,
            (None, None) => true,
            _ => false,
        };
        if !same_video || !same_audio {
            return Err(MediaError::ConcatFailed(format!(
                "{} does not match the codec parameters of {}",
                c.display(),
                first.display()
            )));
        }
    }
    let list = out.with_file_name("list.txt");
    let mut body = String::new();
    for c in clips {
        body.push_str(&concat_line(c)?);
    }
    std::fs::write(&list, body).map_err(|e| MediaError::Io(e.to_string()))?;
    let args: Vec<OsString> = vec![
        "-hide_banner".into(),
        "-loglevel".into(),
        "error".into(),
        "-y".into(),
        "-f".into(),
        "concat".into(),
        "-safe".into(),
        "0".into(),
        "-i".into(),
        file_arg(&list)?,
        "-c".into(),
        "copy".into(),
        file_arg(out)?,
    ];
    let res = tool.run(args)?;
    if !res.success() || !out.is_file() {
        return Err(MediaError::ConcatFailed(res.stderr_tail()));
    }
    Ok(out.to_path_buf())
}

/// The merged highlight and how it maps back to the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipArtifact {
    pub path: PathBuf,
    pub duration: Timestamp,
    pub segment_map: Vec<SegmentMapping>,
    pub config_used: MergeConfig,
    /// Intermediate per-segment clips, in playback order.
    pub clips: Vec<PathBuf>,
}

/// Per-segment processing followed by concatenation, in playback order.
///
/// Writes `clip_1.mp4 … clip_N.mp4`, `list.txt` and `final.mp4` under
/// `workdir` and keeps them all. Segments are encoded in parallel.
pub fn merge(
    tool: &Transcoder,
    video: &VideoMeta,
    c: &ValidatedCutList,
    cfg: &MergeConfig,
    workdir: &Path,
) -> Result<ClipArtifact, MediaError> {
    cfg.validate()?;
    std::fs::create_dir_all(workdir).map_err(|e| MediaError::Io(e.to_string()))?;
    let map = segment_map(c);
    if map.is_empty() {
        return Err(MediaError::EmptyCutList);
    }
    let outputs: Vec<PathBuf> = (1..=map.len()).map(|i| workdir.join(format!("clip_{i}.mp4"))).collect();
    let workers = std::thread::available_parallelism().map_or(2, |n| n.get()).clamp(1, 4).min(map.len());
    let next = AtomicUsize::new(0);
    let mut failures: Vec<(usize, String)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut errs = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= map.len() {
                            break;
                        }
                        if let Err(e) = process_clip(tool, video, map[i].source, cfg, &outputs[i]) {
                            let detail = match e {
                                MediaError::ClipEncodeFailed { stderr, .. } => stderr,
                                other => other.to_string(),
                            };
                            errs.push((i, detail));
                        }
                    }
                    errs
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap_or_default()).collect()
    });
    failures.sort_by_key(|(i, _)| *i);
    if let Some((i, stderr)) = failures.into_iter().next() {
        return Err(MediaError::ClipEncodeFailed {
            index: Some(i + 1),
            stderr,
        });
    }
    let final_path = workdir.join("final.mp4");
    concat_clips(tool, &outputs, &final_path)?;
    let duration = probe(tool, &final_path)?.duration.ok_or_else(|| {
        MediaError::ConcatFailed("merged output has no duration".into())
    })?;
    Ok(ClipArtifact {
        path: final_path,
        duration,
        segment_map: map,
        config_used: cfg.clone(),
        clips: outputs,
    })
}

/// Human-readable summary of a segment map, one line per segment.
pub fn describe_segment_map(map: &[SegmentMapping]) -> String {
    let mut s = String::new();
    for (i, m) in map.iter().enumerate() {
        let _ = writeln!(s, "{:>3}  {} -> {}", i + 1, m.source, m.output);
    }
    s
}
