//! Stream metadata from the transcoder's input summary.
//!
//! `ffmpeg -i <file>` prints a summary of every stream to stderr before
//! complaining that no output was given; that summary is parsed here.

use std::path::Path;

use clipsmith_core::{Container, Timestamp, VideoMeta};

use crate::tool::Transcoder;
use crate::MediaError;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoStream {
    pub codec: String,
    pub pixel_format: Option<String>,
    pub width: u32,
    pub height: u32,
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioStream {
    pub codec: String,
    pub sample_rate: Option<u32>,
    pub channels: Option<String>,
}

/// First video and audio stream of a media file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeInfo {
    pub duration: Option<Timestamp>,
    pub video: Option<VideoStream>,
    pub audio: Option<AudioStream>,
}

/// Splits on `", "` outside parentheses and brackets.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth -= 1,
            b',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    parts.push(s[start..].trim());
    parts.into_iter().filter(|p| !p.is_empty()).collect()
}

fn first_word(s: &str) -> String {
    s.split_whitespace().next().unwrap_or("").to_string()
}

fn parse_duration(line: &str) -> Option<Timestamp> {
    let rest = line.trim_start().strip_prefix("Duration:")?.trim_start();
    let value = rest.split(',').next()?.trim();
    let mut it = value.split(':');
    let h: u64 = it.next()?.parse().ok()?;
    let m: u64 = it.next()?.parse().ok()?;
    let sec = it.next()?;
    let (whole, frac) = sec.split_once('.').unwrap_or((sec, "0"));
    let s: u64 = whole.parse().ok()?;
    let mut frac = frac.to_string();
    frac.truncate(2);
    while frac.len() < 2 {
        frac.push('0');
    }
    let cs: u64 = frac.parse().ok()?;
    Some(Timestamp::from_centis(((h * 60 + m) * 60 + s) * 100 + cs))
}

fn parse_video(desc: &str) -> Option<VideoStream> {
    let parts = split_top_level(desc);
    let codec = first_word(parts.first()?);
    let mut v = VideoStream {
        codec,
        pixel_format: None,
        width: 0,
        height: 0,
        fps: None,
    };
    for (i, p) in parts.iter().enumerate().skip(1) {
        let head = first_word(p);
        if let Some((w, h)) = head.split_once('x') {
            if let (Ok(w), Ok(h)) = (w.parse(), h.parse()) {
                v.width = w;
                v.height = h;
                continue;
            }
        }
        if i == 1 {
            v.pixel_format = Some(head.split('(').next().unwrap_or("").to_string());
        }
        if let Some(f) = p.strip_suffix(" fps") {
            v.fps = f.trim().parse().ok();
        } else if v.fps.is_none() {
            if let Some(f) = p.strip_suffix(" tbr") {
                v.fps = f.trim().parse().ok();
            }
        }
    }
    (v.width > 0 && v.height > 0).then_some(v)
}

fn parse_audio(desc: &str) -> Option<AudioStream> {
    let parts = split_top_level(desc);
    let codec = first_word(parts.first()?);
    let mut a = AudioStream {
        codec,
        sample_rate: None,
        channels: None,
    };
    for (i, p) in parts.iter().enumerate().skip(1) {
        if let Some(hz) = p.strip_suffix(" Hz") {
            a.sample_rate = hz.trim().parse().ok();
            if let Some(ch) = parts.get(i + 1) {
                a.channels = Some(ch.to_string());
            }
        }
    }
    Some(a)
}

/// Parses an input summary; `None` when no input section is present.
pub fn parse_probe_output(stderr: &str) -> Option<ProbeInfo> {
    if !stderr.lines().any(|l| l.starts_with("Input #0")) {
        return None;
    }
    let mut info = ProbeInfo {
        duration: None,
        video: None,
        audio: None,
    };
    for line in stderr.lines() {
        let t = line.trim_start();
        if t.starts_with("Input #1") {
            break;
        }
        if t.starts_with("Duration:") {
            info.duration = parse_duration(t);
        } else if t.starts_with("Stream #0:") {
            if let Some((_, desc)) = t.split_once(": Video: ") {
                if info.video.is_none() && !desc.contains("(attached pic)") {
                    info.video = parse_video(desc);
                }
            } else if let Some((_, desc)) = t.split_once(": Audio: ") {
                if info.audio.is_none() {
                    info.audio = parse_audio(desc);
                }
            }
        }
    }
    Some(info)
}

/// Reads stream metadata of any media file the transcoder can open.
pub fn probe(tool: &Transcoder, path: &Path) -> Result<ProbeInfo, MediaError> {
    let failed = |diagnostics: String| MediaError::ProbeFailed {
        path: path.to_path_buf(),
        diagnostics,
    };
    let meta = std::fs::metadata(path).map_err(|e| failed(e.to_string()))?;
    if !meta.is_file() {
        return Err(failed("not a regular file".into()));
    }
    let abs = std::path::absolute(path).map_err(|e| failed(e.to_string()))?;
    let mut input = std::ffi::OsString::from("file:");
    input.push(abs.as_os_str());
    let res = tool.run([std::ffi::OsStr::new("-hide_banner"), "-i".as_ref(), input.as_os_str()])?;
    parse_probe_output(&res.stderr).ok_or_else(|| failed(res.stderr_tail()))
}

/// Probes a source video. The container is decided by file extension.
pub fn probe_video(tool: &Transcoder, path: &Path) -> Result<VideoMeta, MediaError> {
    let container = Container::from_path(path).ok_or_else(|| MediaError::UnsupportedFormat {
        path: path.to_path_buf(),
    })?;
    let info = probe(tool, path)?;
    let failed = |why: &str| MediaError::ProbeFailed {
        path: path.to_path_buf(),
        diagnostics: why.to_string(),
    };
    let video = info.video.ok_or_else(|| failed("no video stream"))?;
    let duration = info
        .duration
        .filter(|d| *d > Timestamp::ZERO)
        .ok_or_else(|| failed("no positive duration"))?;
    Ok(VideoMeta {
        path: path.to_path_buf(),
        container,
        duration,
        has_audio: info.audio.is_some(),
        width: video.width,
        height: video.height,
        fps: video.fps.unwrap_or(0.0),
        video_codec: Some(video.codec),
        pixel_format: video.pixel_format,
        audio_codec: info.audio.as_ref().map(|a| a.codec.clone()),
        sample_rate: info.audio.as_ref().and_then(|a| a.sample_rate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "Input #0, mov,mp4,m4a,3gp,3g2,mj2, from 'src.mp4':
  Metadata:
    major_brand     : isom
  Duration: 00:01:00.02, start: 0.000000, bitrate: 799 kb/s
  Stream #0:0[0x1](und): Video: h264 (High) (avc1 / 0x31637661), yuv420p(tv, bt709, progressive), 1920x1080 [SAR 1:1 DAR 16:9], 723 kb/s, 29.97 fps, 29.97 tbr, 30k tbn (default)
      Metadata:
        handler_name    : VideoHandler
  Stream #0:1[0x2](und): Audio: aac (LC) (mp4a / 0x6134706D), 48000 Hz, stereo, fltp, 69 kb/s (default)
At least one output file must be specified
";

    #[test]
    fn parses_summary() {
        let info = parse_probe_output(SAMPLE).unwrap();
        assert_eq!(info.duration, Some(Timestamp::from_centis(6002)));
        let v = info.video.unwrap();
        assert_eq!((v.codec.as_str(), v.width, v.height), ("h264", 1920, 1080));
        assert_eq!(v.pixel_format.as_deref(), Some("yuv420p"));
        assert_eq!(v.fps, Some(29.97));
        let a = info.audio.unwrap();
        assert_eq!((a.codec.as_str(), a.sample_rate), ("aac", Some(48000)));
        assert_eq!(a.channels.as_deref(), Some("stereo"));
    }

    #[test]
    fn audio_only_and_missing_duration() {
        let s = "Input #0, wav, from 'a.wav':\n  Duration: N/A, bitrate: 256 kb/s\n  Stream #0:0: Audio: pcm_s16le ([1][0][0][0] / 0x0001), 16000 Hz, mono, s16, 256 kb/s\n";
        let info = parse_probe_output(s).unwrap();
        assert_eq!(info.duration, None);
        assert!(info.video.is_none());
        assert_eq!(info.audio.unwrap().sample_rate, Some(16000));
    }

    #[test]
    fn error_output_is_not_a_summary() {
        assert!(parse_probe_output("Error opening input file x.mp4.\n").is_none());
    }
}
