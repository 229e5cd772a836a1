//! Measurements on encoded media: decoded PCM levels, decoded-frame hashes
//! and the encoder settings an x264 stream carries.

use std::ffi::OsString;
use std::path::Path;

use crate::cutmerge::file_arg;
use crate::tool::Transcoder;
use crate::MediaError;

/// Decodes the first audio stream to mono signed 16-bit samples.
pub fn decode_pcm_mono(tool: &Transcoder, path: &Path, sample_rate: u32) -> Result<Vec<i16>, MediaError> {
    let mut args: Vec<OsString> = ["-hide_banner", "-loglevel", "error", "-i"].map(OsString::from).to_vec();
    args.push(file_arg(path)?);
    args.extend(["-map", "0:a:0", "-ac", "1", "-ar"].map(OsString::from));
    args.push(sample_rate.to_string().into());
    args.extend(["-f", "s16le", "-"].map(OsString::from));
    let res = tool.run(args)?;
    if !res.success() {
        return Err(MediaError::ProbeFailed {
            path: path.to_path_buf(),
            diagnostics: res.stderr_tail(),
        });
    }
    Ok(res
        .stdout
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect())
}

/// Root mean square of normalized samples.
pub fn rms(samples: &[i16]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let ss: f64 = samples
        .iter()
        .map(|&s| {
            let x = f64::from(s) / 32768.0;
            x * x
        })
        .sum();
    (ss / samples.len() as f64).sqrt()
}

/// Level of `rms` in dB relative to full scale; very quiet input is floored
/// at -120 dB.
pub fn to_db(rms: f64) -> f64 {
    20.0 * rms.max(1e-6).log10()
}

/// SHA-256 over every decoded video frame.
pub fn video_frame_hash(tool: &Transcoder, path: &Path) -> Result<String, MediaError> {
    let mut args: Vec<OsString> = ["-hide_banner", "-loglevel", "error", "-i"].map(OsString::from).to_vec();
    args.push(file_arg(path)?);
    args.extend(["-map", "0:v:0", "-f", "hash", "-hash", "sha256", "-"].map(OsString::from));
    let res = tool.run(args)?;
    if !res.success() {
        return Err(MediaError::ProbeFailed {
            path: path.to_path_buf(),
            diagnostics: res.stderr_tail(),
        });
    }
    Ok(String::from_utf8_lossy(&res.stdout).trim().to_string())
}

/// Option string from the x264 SEI message embedded in the stream, e.g.
/// `"cabac=1 ref=3 … crf=23.0 …"`.
pub fn x264_settings(path: &Path) -> std::io::Result<Option<String>> {
    let bytes = std::fs::read(path)?;
    let marker = b"x264 - core";
    let Some(start) = bytes.windows(marker.len()).position(|w| w == marker) else {
        return Ok(None);
    };
    let rest = &bytes[start..];
    let end = rest.iter().position(|&b| b == 0).unwrap_or(rest.len());
    let text = String::from_utf8_lossy(&rest[..end]);
    Ok(text.split_once(" - options: ").map(|(_, o)| o.to_string()))
}

/// Value of one `key=value` entry in an x264 option string.
pub fn x264_option<'a>(settings: &'a str, key: &str) -> Option<&'a str> {
    settings
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}
