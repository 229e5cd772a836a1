#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use clipsmith_core::select::RetryPolicy;
use clipsmith_core::{Persona, Timestamp};
use clipsmith_media::synth::{synth_video, SynthAudio, SynthSpec};
use clipsmith_media::{MergeConfig, Transcoder};
use clipsmith_service::{Backends, FixedClock, FsJobStore, IdStrategy, Pipeline, PipelineConfig};

pub fn tool() -> Transcoder {
    Transcoder::from_env()
}

fn fixture_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = std::env::temp_dir().join(format!("clipsmith-service-fixtures-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    })
}

fn synth(name: &str, audio: SynthAudio, duration_secs: f64) -> PathBuf {
    let out = fixture_dir().join(name);
    if !out.is_file() {
        let spec = SynthSpec {
            duration_secs,
            width: 160,
            height: 120,
            fps: 10,
            audio,
            sample_rate: 16_000,
        };
        let tmp = fixture_dir().join(format!("tmp-{}-{name}", std::thread::current().name().unwrap_or("t").replace("::", "_")));
        synth_video(&tool(), &spec, &tmp).expect("synthesize fixture");
        std::fs::rename(&tmp, &out).unwrap();
    }
    out
}

/// 60 s tone video; the built-in mock transcript covers the same span.
pub fn talk_video() -> PathBuf {
    static P: OnceLock<PathBuf> = OnceLock::new();
    P.get_or_init(|| synth("talk.mp4", SynthAudio::Tone(440.0), 60.0)).clone()
}

pub fn mute_video() -> PathBuf {
    static P: OnceLock<PathBuf> = OnceLock::new();
    P.get_or_init(|| synth("mute.mp4", SynthAudio::None, 30.0)).clone()
}

pub fn silent_video() -> PathBuf {
    static P: OnceLock<PathBuf> = OnceLock::new();
    P.get_or_init(|| synth("silent.mp4", SynthAudio::Silence, 30.0)).clone()
}

pub fn persona() -> Persona {
    Persona::new("training", Timestamp::from_secs(20)).with_keywords(["dosing", "patients"])
}

pub fn config() -> PipelineConfig {
    PipelineConfig {
        transcoder: tool(),
        retry: RetryPolicy::no_delay(1),
        merge: MergeConfig {
            encode_preset: "ultrafast".into(),
            ..MergeConfig::default()
        },
        ..PipelineConfig::default()
    }
}

pub fn pipeline_with(root: &Path, backends: Backends, cfg: PipelineConfig) -> Arc<Pipeline> {
    let store = FsJobStore::open(root).unwrap();
    Arc::new(
        Pipeline::new(Arc::new(store), backends, cfg)
            .with_clock(Arc::new(FixedClock::default()))
            .with_ids(IdStrategy::Deterministic),
    )
}

pub fn pipeline(root: &Path) -> Arc<Pipeline> {
    pipeline_with(root, Backends::mock(None), config())
}
