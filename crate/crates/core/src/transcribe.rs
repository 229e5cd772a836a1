//! Transcriber backends and the dual-backend transcription flow.
//!
//! Two backend roles are configured: a fast one whose language identification
//! is trusted, and an accurate one whose timestamps are forwarded to
//! selection. Real backends are external commands (or HTTP services, see the
//! service crate); [`MockTranscriber`] serves scripted transcripts offline.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::media::{AudioArtifact, AudioFormat};
use crate::timestamp::{TimeRange, Timestamp};
use crate::transcript::{
    cross_validate_language, merge_fragments, LanguageVerdict, Transcript, VerdictStatus,
    DEFAULT_GAP_THRESHOLD, DEFAULT_MAX_MERGED_DURATION,
};

#[derive(Debug, Error)]
pub enum TranscribeError {
    #[error("transcriber backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("transcriber returned no speech for voiced audio")]
    EmptyTranscript,
    #[error("transcriber output is not a valid transcript: {0}")]
    InvalidOutput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendRole {
    Fast,
    Accurate,
}

impl BackendRole {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendRole::Fast => "fast",
            BackendRole::Accurate => "accurate",
        }
    }
}

/// A speech-to-text backend.
pub trait Transcriber: Send + Sync {
    fn id(&self) -> &str;

    /// Raw backend call; [`transcribe`] applies the post-conditions.
    fn run(
        &self,
        audio: &AudioArtifact,
        forced_language: Option<&str>,
    ) -> Result<Transcript, TranscribeError>;
}

/// Runs a backend and brings its output into canonical form: sorted,
/// renumbered, clipped to the audio, non-overlapping, language set.
pub fn transcribe(
    backend: &dyn Transcriber,
    audio: &AudioArtifact,
    forced_language: Option<&str>,
) -> Result<Transcript, TranscribeError> {
    let mut t = backend.run(audio, forced_language)?;
    t.backend_id = backend.id().to_string();
    if audio.duration > Timestamp::ZERO {
        t.source_duration = audio.duration;
    }
    t.canonicalize();
    let mut cursor = Timestamp::ZERO;
    t.segments.retain_mut(|s| {
        s.range.start = s.range.start.max(cursor);
        s.range.end = s.range.end.min(t.source_duration);
        if !s.range.is_valid() || s.text.is_empty() {
            return false;
        }
        cursor = s.range.end;
        true
    });
    for (i, s) in t.segments.iter_mut().enumerate() {
        s.index = i;
    }
    if t.segments.is_empty() {
        return Err(TranscribeError::EmptyTranscript);
    }
    if let Some(lang) = forced_language {
        t.detected_language = Some(lang.to_string());
    }
    Ok(t)
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Peak absolute sample of a 16-bit PCM WAV file, normalized to [0, 1].
/// Returns `None` for files that are not PCM16 WAV.
pub fn wav_peak(path: &Path) -> Option<f64> {
    let bytes = fs::read(path).ok()?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return None;
    }
    let mut pos = 12;
    let mut bits = 0u16;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        let body = pos + 8;
        if id == b"fmt " && body + 16 <= bytes.len() {
            let format = u16::from_le_bytes([bytes[body], bytes[body + 1]]);
            bits = u16::from_le_bytes([bytes[body + 14], bytes[body + 15]]);
            if format != 1 {
                return None;
            }
        } else if id == b"data" {
            if bits != 16 {
                return None;
            }
            let end = bytes.len().min(body.saturating_add(len));
            let peak = bytes[body..end]
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]).unsigned_abs())
                .max()
                .unwrap_or(0);
            return Some(f64::from(peak) / 32768.0);
        }
        pos = body.saturating_add(len + (len & 1));
    }
    None
}

/// Peak level below which WAV audio is treated as silence (about -60 dBFS).
const SILENCE_PEAK: f64 = 0.001;

/// Offline backend serving scripted transcripts.
///
/// Fixtures are transcript documents looked up, in order, as
/// `<dir>/<audio-sha256>.<role>.json`, `<dir>/<audio-sha256>.json` and
/// `<dir>/default.json`, then the built-in demo transcript. Silent WAV input
/// yields an empty transcript.
#[derive(Debug, Clone)]
pub struct MockTranscriber {
    id: String,
    role: BackendRole,
    dir: Option<PathBuf>,
    /// Language reported when not forced, overriding the fixture's own tag.
    default_language: Option<String>,
}

pub const BUILTIN_DEMO_TRANSCRIPT: &str = include_str!("../fixtures/demo_transcript.json");

impl MockTranscriber {
    pub fn new(role: BackendRole, dir: Option<PathBuf>) -> Self {
        MockTranscriber {
            id: format!("mock-{}", role.as_str()),
            role,
            dir,
            default_language: None,
        }
    }

    pub fn with_default_language(mut self, lang: impl Into<String>) -> Self {
        self.default_language = Some(lang.into());
        self
    }

    fn fixture(&self, audio: &AudioArtifact) -> Result<Transcript, TranscribeError> {
        if let Some(dir) = &self.dir {
            let hash = sha256_file(&audio.path)
                .map_err(|e| TranscribeError::BackendUnavailable(format!("{}: {e}", audio.path.display())))?;
            let candidates = [
                dir.join(format!("{hash}.{}.json", self.role.as_str())),
                dir.join(format!("{hash}.json")),
                dir.join("default.json"),
            ];
            for path in candidates {
                if path.is_file() {
                    let raw = fs::read_to_string(&path)
                        .map_err(|e| TranscribeError::BackendUnavailable(e.to_string()))?;
                    return serde_json::from_str(&raw)
                        .map_err(|e| TranscribeError::InvalidOutput(format!("{}: {e}", path.display())));
                }
            }
        }
        serde_json::from_str(BUILTIN_DEMO_TRANSCRIPT)
            .map_err(|e| TranscribeError::InvalidOutput(e.to_string()))
    }
}

impl Transcriber for MockTranscriber {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(
        &self,
        audio: &AudioArtifact,
        _forced_language: Option<&str>,
    ) -> Result<Transcript, TranscribeError> {
        if !audio.path.is_file() {
            return Err(TranscribeError::BackendUnavailable(format!(
                "audio {} not found",
                audio.path.display()
            )));
        }
        if audio.format == AudioFormat::Wav {
            if let Some(peak) = wav_peak(&audio.path) {
                if peak < SILENCE_PEAK {
                    return Err(TranscribeError::EmptyTranscript);
                }
            }
        }
        let mut t = self.fixture(audio)?;
        if let Some(lang) = &self.default_language {
            t.detected_language = Some(lang.clone());
        }
        Ok(t)
    }
}

/// External transcriber program. Arguments may contain `{audio}` and
/// `{language}` placeholders; the program prints a transcript document on
/// standard output.
#[derive(Debug, Clone)]
pub struct CommandTranscriber {
    id: String,
    program: PathBuf,
    args: Vec<String>,
}

impl CommandTranscriber {
    pub fn new(id: impl Into<String>, program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        CommandTranscriber {
            id: id.into(),
            program: program.into(),
            args,
        }
    }
}

impl Transcriber for CommandTranscriber {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(
        &self,
        audio: &AudioArtifact,
        forced_language: Option<&str>,
    ) -> Result<Transcript, TranscribeError> {
        let audio_path = audio.path.to_string_lossy();
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{audio}", &audio_path)
                    .replace("{language}", forced_language.unwrap_or("auto"))
            })
            .collect();
        let out = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| TranscribeError::BackendUnavailable(format!("{}: {e}", self.program.display())))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(TranscribeError::BackendUnavailable(format!(
                "{} exited with {}: {}",
                self.program.display(),
                out.status,
                stderr.trim()
            )));
        }
        serde_json::from_slice(&out.stdout).map_err(|e| TranscribeError::InvalidOutput(e.to_string()))
    }
}

/// Fragment-merging parameters applied to the forwarded transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragmentConfig {
    pub gap_threshold: Timestamp,
    pub max_merged_duration: Timestamp,
}

impl Default for FragmentConfig {
    fn default() -> Self {
        FragmentConfig {
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            max_merged_duration: DEFAULT_MAX_MERGED_DURATION,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualTranscription {
    /// Accurate backend's transcript after fragment merging; this is what
    /// selection sees.
    pub transcript: Transcript,
    /// Accurate backend's output before merging.
    pub raw_accurate: Transcript,
    pub fast: Option<Transcript>,
    pub verdict: LanguageVerdict,
}

/// Runs both backends concurrently, cross-checks their language tags,
/// re-runs the accurate backend with the fast backend's language on
/// mismatch, and merges fragments in the accurate transcript.
pub fn transcribe_dual(
    fast: &dyn Transcriber,
    accurate: &dyn Transcriber,
    audio: &AudioArtifact,
    forced_language: Option<&str>,
    fragments: FragmentConfig,
) -> Result<DualTranscription, TranscribeError> {
    let (fast_res, acc_res) = std::thread::scope(|s| {
        let f = s.spawn(|| transcribe(fast, audio, forced_language));
        let a = transcribe(accurate, audio, forced_language);
        (f.join().expect("fast transcriber thread panicked"), a)
    });
    let mut accurate_t = acc_res?;
    let fast_t = match fast_res {
        Ok(t) => Some(t),
        Err(e) => {
            tracing::warn!("fast transcriber failed, language check skipped: {e}");
            None
        }
    };
    let verdict = match &fast_t {
        Some(f) => cross_validate_language(f, &accurate_t),
        None => LanguageVerdict {
            status: VerdictStatus::Unknown,
            chosen: accurate_t.detected_language.clone(),
            details: "fast backend unavailable".into(),
            rerun_with: None,
        },
    };
    if verdict.status == VerdictStatus::Mismatch && forced_language.is_none() {
        if let Some(lang) = &verdict.rerun_with {
            accurate_t = transcribe(accurate, audio, Some(lang))?;
        }
    }
    let merged = merge_fragments(&accurate_t, fragments.gap_threshold, fragments.max_merged_duration);
    Ok(DualTranscription {
        transcript: merged,
        raw_accurate: accurate_t,
        fast: fast_t,
        verdict,
    })
}

/// Range helper used by fixtures and tests.
pub fn range_secs(start: f64, end: f64) -> TimeRange {
    TimeRange::from_secs_f64(start, end).expect("finite non-negative range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Extractor;
    use crate::transcript::TranscriptSegment;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    fn write_wav(path: &Path, samples: &[i16]) {
        let data_len = (samples.len() * 2) as u32;
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data_len).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&16000u32.to_le_bytes());
        b.extend_from_slice(&32000u32.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&16u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&data_len.to_le_bytes());
        for s in samples {
            b.extend_from_slice(&s.to_le_bytes());
        }
        fs::write(path, b).unwrap();
    }

    fn artifact(path: PathBuf, secs: u64) -> AudioArtifact {
        AudioArtifact {
            path,
            format: AudioFormat::Wav,
            duration: Timestamp::from_secs(secs),
            extractor_used: Extractor::Primary,
        }
    }

    fn tmpdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("clipsmith-core-{tag}-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn mock_serves_fixture_byte_identical() {
        let dir = tmpdir("mock");
        let wav = dir.join("a.wav");
        write_wav(&wav, &[1000, -1000, 500]);
        let hash = sha256_file(&wav).unwrap();
        let fixture = Transcript {
            segments: vec![TranscriptSegment::new(0, range_secs(0.0, 1.5), "Hello there.")],
            backend_id: "mock-accurate".into(),
            detected_language: Some("en".into()),
            source_duration: Timestamp::from_secs(2),
        };
        let doc = serde_json::to_string(&fixture).unwrap();
        fs::write(dir.join(format!("{hash}.json")), &doc).unwrap();
        let mock = MockTranscriber::new(BackendRole::Accurate, Some(dir.clone()));
        let t = transcribe(&mock, &artifact(wav.clone(), 2), None).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), doc);

        let forced = transcribe(&mock, &artifact(wav, 2), Some("de")).unwrap();
        assert_eq!(forced.detected_language.as_deref(), Some("de"));
    }

    #[test]
    fn silent_audio_is_empty_transcript() {
        let dir = tmpdir("silent");
        let wav = dir.join("s.wav");
        write_wav(&wav, &[0; 1600]);
        let mock = MockTranscriber::new(BackendRole::Fast, None);
        assert!(matches!(
            transcribe(&mock, &artifact(wav, 1), None),
            Err(TranscribeError::EmptyTranscript)
        ));
    }

    #[test]
    fn missing_audio_is_unavailable() {
        let mock = MockTranscriber::new(BackendRole::Fast, None);
        let a = artifact(PathBuf::from("/nonexistent/clipsmith.wav"), 1);
        assert!(matches!(transcribe(&mock, &a, None), Err(TranscribeError::BackendUnavailable(_))));
    }

    struct Scripted {
        id: &'static str,
        lang: &'static str,
        calls: AtomicUsize,
        forced_seen: Mutex<Vec<Option<String>>>,
    }

    impl Transcriber for Scripted {
        fn id(&self) -> &str {
            self.id
        }
        fn run(&self, _a: &AudioArtifact, forced: Option<&str>) -> Result<Transcript, TranscribeError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.forced_seen.lock().unwrap().push(forced.map(str::to_string));
            let mut t = Transcript::new(
                self.id,
                Timestamp::from_secs(10),
                vec![
                    TranscriptSegment::new(0, range_secs(0.0, 1.2), "We begin"),
                    TranscriptSegment::new(1, range_secs(1.3, 2.5), "with the agenda."),
                ],
            );
            t.detected_language = Some(self.lang.into());
            Ok(t)
        }
    }

    #[test]
    fn dual_flow_forwards_accurate_and_reruns_on_mismatch() {
        let dir = tmpdir("dual");
        let wav = dir.join("d.wav");
        write_wav(&wav, &[100; 10]);
        let fast = Scripted { id: "fast", lang: "en", calls: 0.into(), forced_seen: Default::default() };
        let acc = Scripted { id: "accurate", lang: "cy", calls: 0.into(), forced_seen: Default::default() };
        let out = transcribe_dual(&fast, &acc, &artifact(wav, 10), None, FragmentConfig::default()).unwrap();
        assert_eq!(out.verdict.status, VerdictStatus::Mismatch);
        assert_eq!(out.transcript.backend_id, "accurate");
        assert_eq!(out.transcript.detected_language.as_deref(), Some("en"));
        assert_eq!(out.transcript.segments.len(), 1);
        assert_eq!(acc.calls.load(Ordering::SeqCst), 2);
        assert_eq!(acc.forced_seen.lock().unwrap()[1].as_deref(), Some("en"));
    }

    #[test]
    fn wav_peak_reads_pcm16() {
        let dir = tmpdir("peak");
        let wav = dir.join("p.wav");
        write_wav(&wav, &[0, 16384, -8192]);
        assert!((wav_peak(&wav).unwrap() - 0.5).abs() < 1e-9);
        fs::write(dir.join("junk.wav"), b"not a wav").unwrap();
        assert_eq!(wav_peak(&dir.join("junk.wav")), None);
    }
}
