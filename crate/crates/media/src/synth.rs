//! Synthetic test sources generated by the transcoder itself.

use std::ffi::OsString;
use std::path::Path;

use crate::cutmerge::file_arg;
use crate::tool::Transcoder;
use crate::MediaError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthAudio {
    /// No audio stream at all.
    None,
    /// An audio stream of digital silence.
    Silence,
    /// A constant sine tone at the given frequency in Hz.
    Tone(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub duration_secs: f64,
    pub width: u32,
    pub height: u32,
    pub fps: u32,
    pub audio: SynthAudio,
    pub sample_rate: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            duration_secs: 60.0,
            width: 320,
            height: 240,
            fps: 25,
            audio: SynthAudio::Tone(440.0),
            sample_rate: 48_000,
        }
    }
}

/// Writes a test-pattern video (H.264/AAC in the container implied by the
/// extension of `out`).
pub fn synth_video(tool: &Transcoder, spec: &SynthSpec, out: &Path) -> Result<(), MediaError> {
    let mut args: Vec<OsString> = ["-hide_banner", "-loglevel", "error", "-y", "-f", "lavfi", "-i"]
        .map(OsString::from)
        .to_vec();
    args.push(format!("testsrc2=size={}x{}:rate={}", spec.width, spec.height, spec.fps).into());
    match spec.audio {
        SynthAudio::None => {}
        SynthAudio::Silence => {
            args.extend(["-f", "lavfi", "-i"].map(OsString::from));
            args.push(format!("anullsrc=channel_layout=mono:sample_rate={}", spec.sample_rate).into());
        }
        SynthAudio::Tone(f) => {
            args.extend(["-f", "lavfi", "-i"].map(OsString::from));
            args.push(format!("sine=frequency={f}:sample_rate={}", spec.sample_rate).into());
        }
    }
    args.push("-t".into());
    args.push(format!("{}", spec.duration_secs).into());
    args.extend(["-c:v", "libx264", "-preset", "ultrafast", "-pix_fmt", "yuv420p"].map(OsString::from));
    if spec.audio != SynthAudio::None {
        args.extend(["-c:a", "aac", "-b:a", "96k"].map(OsString::from));
    }
    args.push(file_arg(out)?);
    let res = tool.run(args)?;
    if !res.success() {
        return Err(MediaError::ClipEncodeFailed {
            index: None,
            stderr: res.stderr_tail(),
        });
    }
    Ok(())
}
