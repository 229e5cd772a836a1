use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use clipsmith_core::transcribe::{range_secs, sha256_file};
use clipsmith_core::{validate_cutlist, AudioFormat, CutList, CutSegment, Extractor, Timestamp, VideoMeta};
use clipsmith_media::analysis::{decode_pcm_mono, rms, to_db, video_frame_hash, x264_option, x264_settings};
use clipsmith_media::synth::{synth_video, SynthAudio, SynthSpec};
use clipsmith_media::{
    burn_subtitles, concat_clips, extract_audio, merge, probe, probe_video, process_clip, reframe, MediaError,
    MergeConfig, Orientation, Transcoder,
};

fn tool() -> Transcoder {
    Transcoder::from_env()
}

fn scratch() -> tempfile::TempDir {
    tempfile::Builder::new().prefix("clipsmith-media-test").tempdir().unwrap()
}

/// 60 s, 320×240, 440 Hz tone; generated once per test binary.
fn source() -> &'static Path {
    static SRC: OnceLock<PathBuf> = OnceLock::new();
    SRC.get_or_init(|| {
        let dir = scratch().keep();
        let p = dir.join("source.mp4");
        synth_video(&tool(), &SynthSpec::default(), &p).unwrap();
        p
    })
}

fn source_meta() -> VideoMeta {
    probe_video(&tool(), source()).unwrap()
}

fn secs(t: Timestamp) -> f64 {
    t.as_secs_f64()
}

#[test]
fn version_query_succeeds() {
    let r = tool().run(["-version"]).unwrap();
    assert!(r.success());
    assert!(String::from_utf8_lossy(&r.stdout).starts_with("ffmpeg version"));
}

#[test]
fn bogus_flag_surfaces_stderr() {
    let r = tool().run(["-definitely-not-a-flag"]).unwrap();
    assert!(!r.success());
    assert!(r.stderr_tail().contains("definitely-not-a-flag"));
}

#[test]
fn endless_input_times_out() {
    let t = tool().with_timeout(Duration::from_millis(800));
    let err = t
        .run(["-re", "-f", "lavfi", "-i", "testsrc=size=64x64:rate=5", "-f", "null", "-"])
        .unwrap_err();
    assert!(matches!(err, MediaError::ToolTimeout { .. }), "{err:?}");
}

#[test]
fn probe_synthetic_source() {
    let before = sha256_file(source()).unwrap();
    let m = source_meta();
    assert_eq!(m.duration, Timestamp::from_secs(60));
    assert!(m.has_audio);
    assert_eq!((m.width, m.height), (320, 240));
    assert_eq!(m.fps, 25.0);
    assert_eq!(m.video_codec.as_deref(), Some("h264"));
    assert_eq!(sha256_file(source()).unwrap(), before);
}

#[test]
fn probe_rejects_unknown_and_empty() {
    let dir = scratch();
    let xyz = dir.path().join("clip.xyz");
    std::fs::copy(source(), &xyz).unwrap();
    assert!(matches!(probe_video(&tool(), &xyz), Err(MediaError::UnsupportedFormat { .. })));
    let empty = dir.path().join("empty.mp4");
    std::fs::write(&empty, b"").unwrap();
    assert!(matches!(probe_video(&tool(), &empty), Err(MediaError::ProbeFailed { .. })));
    let missing = dir.path().join("missing.mp4");
    assert!(matches!(probe_video(&tool(), &missing), Err(MediaError::ProbeFailed { .. })));
}

#[test]
fn extract_clean_source_uses_primary() {
    let dir = scratch();
    let out = dir.path().join("audio.wav");
    let a = extract_audio(&tool(), &source_meta(), AudioFormat::Wav, &out).unwrap();
    assert_eq!(a.extractor_used, Extractor::Primary);
    assert!((secs(a.duration) - 60.0).abs() <= 0.5, "{}", a.duration);
}

#[test]
fn extract_awkward_name_uses_fallback() {
    let dir = scratch();
    let odd = dir.path().join("clip:weird ünïcødé.mp4");
    std::fs::copy(source(), &odd).unwrap();
    let meta = probe_video(&tool(), &odd).unwrap();
    let out = dir.path().join("out:odd.wav");
    let a = extract_audio(&tool(), &meta, AudioFormat::Wav, &out).unwrap();
    assert_eq!(a.extractor_used, Extractor::Fallback);
    assert!((secs(a.duration) - 60.0).abs() <= 0.5);
}

#[cfg(unix)]
#[test]
fn extract_non_utf8_name_uses_fallback() {
    use std::os::unix::ffi::OsStrExt;
    let dir = scratch();
    let odd = dir.path().join(std::ffi::OsStr::from_bytes(b"talk-\xff\xfe.mp4"));
    std::fs::copy(source(), &odd).unwrap();
    let meta = probe_video(&tool(), &odd).unwrap();
    let a = extract_audio(&tool(), &meta, AudioFormat::Flac, &dir.path().join("a.flac")).unwrap();
    assert_eq!(a.extractor_used, Extractor::Fallback);
}

#[test]
fn extract_without_audio_stream() {
    let dir = scratch();
    let p = dir.path().join("mute.mp4");
    let spec = SynthSpec {
        duration_secs: 3.0,
        audio: SynthAudio::None,
        ..SynthSpec::default()
    };
    synth_video(&tool(), &spec, &p).unwrap();
    let meta = probe_video(&tool(), &p).unwrap();
    assert!(!meta.has_audio);
    let err = extract_audio(&tool(), &meta, AudioFormat::Wav, &dir.path().join("a.wav")).unwrap_err();
    assert!(matches!(err, MediaError::NoAudioStream { .. }));
}

#[test]
fn extract_reports_both_failures() {
    let dir = scratch();
    let broken = dir.path().join("broken.mp4");
    std::fs::write(&broken, b"not really a video").unwrap();
    let mut meta = source_meta();
    meta.path = broken;
    let err = extract_audio(&tool(), &meta, AudioFormat::Wav, &dir.path().join("a.wav")).unwrap_err();
    match err {
        MediaError::ExtractionFailed { primary, fallback } => {
            assert!(!primary.is_empty());
            assert!(!fallback.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn processed_clip_is_reencoded_with_fades() {
    let dir = scratch();
    let out = dir.path().join("clip.mp4");
    process_clip(&tool(), &source_meta(), range_secs(10.0, 20.0), &MergeConfig::default(), &out).unwrap();
    let d = probe(&tool(), &out).unwrap().duration.unwrap();
    assert!((secs(d) - 10.0).abs() <= 0.3, "{d}");
    let settings = x264_settings(&out).unwrap().expect("x264 SEI present");
    assert_eq!(x264_option(&settings, "crf"), Some("23.0"));

    let pcm = decode_pcm_mono(&tool(), &out, 48_000).unwrap();
    let q = 12_000; // 250 ms
    let n = pcm.len();
    let head = to_db(rms(&pcm[..q]));
    let tail = to_db(rms(&pcm[n - q..]));
    let mid = to_db(rms(&pcm[n / 2 - q / 2..n / 2 + q / 2]));
    assert!(mid - head >= 6.0, "head {head} mid {mid}");
    assert!(mid - tail >= 6.0, "tail {tail} mid {mid}");
}

#[test]
fn reversed_range_is_invalid() {
    let dir = scratch();
    let r = clipsmith_core::TimeRange::unchecked(Timestamp::from_secs(20), Timestamp::from_secs(10));
    let err = process_clip(&tool(), &source_meta(), r, &MergeConfig::default(), &dir.path().join("x.mp4"));
    assert!(matches!(err, Err(MediaError::InvalidSegment(_))));
    let err = process_clip(
        &tool(),
        &source_meta(),
        range_secs(50.0, 70.0),
        &MergeConfig::default(),
        &dir.path().join("y.mp4"),
    );
    assert!(matches!(err, Err(MediaError::InvalidSegment(_))));
}

#[test]
fn concat_three_clips() {
    let dir = scratch();
    let meta = source_meta();
    let clips: Vec<PathBuf> = [(5.0, 10.0), (20.0, 25.0), (40.0, 45.0)]
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let p = dir.path().join(format!("c{i}.mp4"));
            process_clip(&tool(), &meta, range_secs(a, b), &MergeConfig::default(), &p).unwrap()
        })
        .collect();
    let out = concat_clips(&tool(), &clips, &dir.path().join("all.mp4")).unwrap();
    let d = probe(&tool(), &out).unwrap().duration.unwrap();
    assert!((secs(d) - 15.0).abs() <= 0.3, "{d}");
    assert!(dir.path().join("list.txt").is_file());
}

#[test]
fn concat_single_clip_is_frame_identical() {
    let dir = scratch();
    let c = dir.path().join("one.mp4");
    process_clip(&tool(), &source_meta(), range_secs(1.0, 4.0), &MergeConfig::default(), &c).unwrap();
    let out = concat_clips(&tool(), std::slice::from_ref(&c), &dir.path().join("out.mp4")).unwrap();
    assert_eq!(video_frame_hash(&tool(), &c).unwrap(), video_frame_hash(&tool(), &out).unwrap());
}

#[test]
fn concat_rejects_mixed_inputs() {
    let dir = scratch();
    let a = dir.path().join("a.mp4");
    process_clip(&tool(), &source_meta(), range_secs(1.0, 3.0), &MergeConfig::default(), &a).unwrap();
    let b = dir.path().join("b.mp4");
    let spec = SynthSpec {
        duration_secs: 2.0,
        width: 640,
        height: 360,
        ..SynthSpec::default()
    };
    synth_video(&tool(), &spec, &b).unwrap();
    assert!(matches!(
        concat_clips(&tool(), &[a, b], &dir.path().join("o.mp4")),
        Err(MediaError::ConcatFailed(_))
    ));
    assert!(matches!(
        concat_clips(&tool(), &[], &dir.path().join("o.mp4")),
        Err(MediaError::EmptyCutList)
    ));
}

fn cutlist(ranges: &[(f64, f64)], chronological: bool) -> clipsmith_core::ValidatedCutList {
    let segs: Vec<CutSegment> = ranges
        .iter()
        .map(|&(a, b)| CutSegment::new(range_secs(a, b), format!("segment at {a}")))
        .collect();
    let c = if chronological {
        CutList::new("v", "p", segs)
    } else {
        CutList::in_play_order("v", "p", segs)
    };
    validate_cutlist(c, Timestamp::from_secs(60)).unwrap()
}

#[test]
fn merge_two_segments() {
    let dir = scratch();
    let art = merge(
        &tool(),
        &source_meta(),
        &cutlist(&[(10.0, 15.0), (30.0, 40.0)], true),
        &MergeConfig::default(),
        dir.path(),
    )
    .unwrap();
    assert!((secs(art.duration) - 15.0).abs() <= 0.6, "{}", art.duration);
    assert_eq!(art.segment_map[0].source, range_secs(10.0, 15.0));
    assert_eq!(art.segment_map[0].output, range_secs(0.0, 5.0));
    assert_eq!(art.segment_map[1].source, range_secs(30.0, 40.0));
    assert_eq!(art.segment_map[1].output, range_secs(5.0, 15.0));
    for f in ["clip_1.mp4", "clip_2.mp4", "list.txt", "final.mp4"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn merge_follows_user_order_and_short_segments() {
    let dir = scratch();
    let art = merge(
        &tool(),
        &source_meta(),
        &cutlist(&[(30.0, 40.0), (10.0, 15.0), (58.5, 59.2)], false),
        &MergeConfig::default(),
        dir.path(),
    )
    .unwrap();
    assert_eq!(art.segment_map[0].source, range_secs(30.0, 40.0));
    assert_eq!(art.segment_map[2].source, range_secs(58.5, 59.2));
    let first = probe(&tool(), &art.clips[0]).unwrap().duration.unwrap();
    assert!((secs(first) - 10.0).abs() <= 0.3);
    let short = probe(&tool(), &art.clips[2]).unwrap().duration.unwrap();
    assert!((secs(short) - 0.7).abs() <= 0.3, "{short}");
}

#[test]
fn reframe_orientations() {
    let dir = scratch();
    let wide = dir.path().join("wide.mp4");
    let spec = SynthSpec {
        duration_secs: 4.0,
        width: 1920,
        height: 1080,
        ..SynthSpec::default()
    };
    synth_video(&tool(), &spec, &wide).unwrap();
    let meta = probe_video(&tool(), &wide).unwrap();
    let c = validate_cutlist(
        CutList::new("v", "p", vec![CutSegment::new(range_secs(0.5, 3.5), "x")]),
        meta.duration,
    )
    .unwrap();
    let art = merge(&tool(), &meta, &c, &MergeConfig::default(), dir.path()).unwrap();
    assert_eq!(reframe(&tool(), &art, Orientation::Horizontal).unwrap(), art);
    let v = reframe(&tool(), &art, Orientation::Vertical).unwrap();
    let info = probe(&tool(), &v.path).unwrap().video.unwrap();
    assert_eq!((info.width, info.height), (1080, 1920));

    let tall_dir = dir.path().join("tall");
    let tall = dir.path().join("tall.mp4");
    let spec = SynthSpec {
        duration_secs: 3.0,
        width: 540,
        height: 1200,
        ..SynthSpec::default()
    };
    synth_video(&tool(), &spec, &tall).unwrap();
    let meta = probe_video(&tool(), &tall).unwrap();
    let c = validate_cutlist(
        CutList::new("v", "p", vec![CutSegment::new(range_secs(0.0, 2.0), "x")]),
        meta.duration,
    )
    .unwrap();
    let art = merge(&tool(), &meta, &c, &MergeConfig::default(), &tall_dir).unwrap();
    let v = reframe(&tool(), &art, Orientation::Vertical).unwrap();
    let info = probe(&tool(), &v.path).unwrap().video.unwrap();
    assert_eq!((info.width, info.height), (1080, 1920));
}

#[test]
fn subtitles_burn_in() {
    let dir = scratch();
    let art = merge(
        &tool(),
        &source_meta(),
        &cutlist(&[(10.0, 13.0)], true),
        &MergeConfig::default(),
        dir.path(),
    )
    .unwrap();
    let srt = dir.path().join("final.srt");
    std::fs::write(&srt, "1\n00:00:00,500 --> 00:00:02,000\nhello\n\n").unwrap();
    let burned = burn_subtitles(&tool(), &art, &srt).unwrap();
    assert!(burned.path.is_file());
    assert_ne!(
        video_frame_hash(&tool(), &burned.path).unwrap(),
        video_frame_hash(&tool(), &art.path).unwrap()
    );
}
