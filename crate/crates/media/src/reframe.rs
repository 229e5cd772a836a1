//! Orientation reframing and subtitle burn-in for a merged clip.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::cutmerge::{file_arg, ClipArtifact, Orientation};
use crate::probe::probe;
use crate::tool::Transcoder;
use crate::MediaError;

pub const VERTICAL_WIDTH: u32 = 1080;
pub const VERTICAL_HEIGHT: u32 = 1920;

/// Filter for a 9:16 frame: a centred crop for anything wider than 9:16,
/// otherwise scale to fit and pad.
pub fn vertical_filter(width: u32, height: u32) -> String {
    let (w, h) = (VERTICAL_WIDTH, VERTICAL_HEIGHT);
    if u64::from(width) * 16 > u64::from(height) * 9 {
        format!("crop=trunc(ih*9/16/2)*2:ih,scale={w}:{h},setsar=1")
    } else {
        format!(
            "scale={w}:{h}:force_original_aspect_ratio=decrease,pad={w}:{h}:(ow-iw)/2:(oh-ih)/2,setsar=1"
        )
    }
}

fn encode_video_args(clip: &ClipArtifact, filter: &str, input: OsString, out: &Path) -> Result<Vec<OsString>, MediaError> {
    let cfg = &clip.config_used;
    let mut args: Vec<OsString> = ["-hide_banner", "-loglevel", "error", "-y", "-i"]
        .map(OsString::from)
        .to_vec();
    args.push(input);
    args.extend(
        [
            "-vf",
            filter,
            "-c:v",
            "libx264",
            "-preset",
            &cfg.encode_preset,
            "-crf",
            &cfg.video_quality.to_string(),
            "-pix_fmt",
            "yuv420p",
            "-c:a",
            "copy",
        ]
        .map(OsString::from),
    );
    args.push(file_arg(out)?);
    Ok(args)
}

/// Horizontal returns the clip unchanged; vertical writes
/// `<stem>_vertical.mp4` next to the clip at 1080×1920.
pub fn reframe(tool: &Transcoder, clip: &ClipArtifact, orientation: Orientation) -> Result<ClipArtifact, MediaError> {
    if orientation == Orientation::Horizontal {
        return Ok(clip.clone());
    }
    let info = probe(tool, &clip.path)?;
    let v = info
        .video
        .ok_or_else(|| MediaError::ReframeFailed("clip has no video stream".into()))?;
    let stem = clip.path.file_stem().and_then(|s| s.to_str()).unwrap_or("final");
    let out = clip.path.with_file_name(format!("{stem}_vertical.mp4"));
    let args = encode_video_args(clip, &vertical_filter(v.width, v.height), file_arg(&clip.path)?, &out)?;
    let res = tool.run(args)?;
    if !res.success() || !out.is_file() {
        return Err(MediaError::ReframeFailed(res.stderr_tail()));
    }
    let mut framed = clip.clone();
    framed.path = out;
    framed.config_used.orientation = Orientation::Vertical;
    Ok(framed)
}

/// Renders `srt` into the picture, writing `<stem>_subtitled.mp4`.
pub fn burn_subtitles(tool: &Transcoder, clip: &ClipArtifact, srt: &Path) -> Result<ClipArtifact, MediaError> {
    let tmp = tempfile::Builder::new()
        .prefix("clipsmith-subs")
        .tempdir()
        .map_err(|e| MediaError::Io(e.to_string()))?;
    std::fs::copy(srt, tmp.path().join("subs.srt")).map_err(|e| MediaError::Io(e.to_string()))?;
    let stem = clip.path.file_stem().and_then(|s| s.to_str()).unwrap_or("final");
    let out: PathBuf = clip.path.with_file_name(format!("{stem}_subtitled.mp4"));
    let args = encode_video_args(clip, "subtitles=subs.srt", file_arg(&clip.path)?, &out)?;
    let res = tool.run_in(args, tmp.path())?;
    if !res.success() || !out.is_file() {
        return Err(MediaError::SubtitleBurnFailed(res.stderr_tail()));
    }
    let mut burned = clip.clone();
    burned.path = out;
    burned.config_used.burn_subtitles = true;
    Ok(burned)
}
