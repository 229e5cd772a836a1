mod common;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clipsmith_core::select::{ChatRequest, LlmBackend, LlmError, MockLlm};
use clipsmith_core::subtitles::segment_map;
use clipsmith_core::{CutList, Timestamp};
use clipsmith_media::probe;
use clipsmith_service::{
    ArtifactKind, Backends, CutListEdit, JobSource, JobState, Pipeline, SelectorKind, ServiceError, Stage,
};
use common::*;

fn cutlist(p: &Pipeline, id: &str) -> CutList {
    let (path, mime) = p.artifact(id, ArtifactKind::Cutlist).unwrap();
    assert_eq!(mime, "application/json");
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn advance_to(p: &Pipeline, id: &str, target: JobState) {
    let mut m = p.get(id).unwrap();
    while m.state != target {
        m = p.advance(id, Stage::after(m.state).unwrap()).unwrap();
    }
}

#[test]
fn full_chain_reaches_merged_with_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let m = p.create_job(JobSource::Path(talk_video()), persona()).unwrap();
    assert_eq!(m.state, JobState::Created);
    assert!(root.path().join(&m.job_id).join("manifest.json").is_file());

    let m = p.run_to_end(&m.job_id).unwrap();
    assert_eq!(m.state, JobState::Merged);
    let states: Vec<_> = m.transitions.iter().map(|t| t.state).collect();
    assert_eq!(
        states,
        [JobState::Created, JobState::AudioExtracted, JobState::Transcribed, JobState::Selected, JobState::Merged]
    );
    for kind in ArtifactKind::ALL {
        let (path, _) = p.artifact(&m.job_id, kind).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
        assert!(path.is_file(), "{kind:?}");
    }
    assert_eq!(p.artifact(&m.job_id, ArtifactKind::Clip).unwrap().1, "video/mp4");
    assert_eq!(m.selector.as_deref(), Some("llm"));
    assert!(!m.voiceover_free);

    let c = cutlist(&p, &m.job_id);
    assert_eq!(c.video_id, m.job_id);
    let clip = p.artifact(&m.job_id, ArtifactKind::Clip).unwrap().0;
    let got = probe(&tool(), &clip).unwrap().duration.unwrap().as_secs_f64();
    let want = c.total_duration.as_secs_f64();
    assert!((got - want).abs() <= 0.3 * c.len() as f64, "clip {got} s vs cut-list {want} s");

    let report = p.metrics(&m.job_id, None).unwrap();
    assert_eq!(report.segment_count, c.len());
    assert_eq!(report.tau, 0.6);
}

#[test]
fn skipping_a_stage_is_an_invalid_transition() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let m = p.create_job(JobSource::Path(talk_video()), persona()).unwrap();
    let err = p.advance(&m.job_id, Stage::Transcribe).unwrap_err();
    assert_eq!(
        err,
        ServiceError::InvalidTransition {
            from: JobState::Created,
            stage: Stage::Transcribe
        }
    );
    assert_eq!(p.get(&m.job_id).unwrap(), m);
}

#[test]
fn unsupported_upload_leaves_no_job_behind() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let err = p
        .create_job(
            JobSource::Upload {
                file_name: "notes.xyz".into(),
                bytes: b"hello".to_vec(),
            },
            persona(),
        )
        .unwrap_err();
    assert!(matches!(err, ServiceError::UnsupportedFormat(_)), "{err}");
    let garbage = p
        .create_job(
            JobSource::Upload {
                file_name: "broken.mp4".into(),
                bytes: b"not a video".to_vec(),
            },
            persona(),
        )
        .unwrap_err();
    assert!(matches!(garbage, ServiceError::UnsupportedFormat(_)), "{garbage}");
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn duplicate_uploads_get_independent_jobs() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let bytes = std::fs::read(talk_video()).unwrap();
    let upload = || JobSource::Upload {
        file_name: "talk.mp4".into(),
        bytes: bytes.clone(),
    };
    let a = p.create_job(upload(), persona()).unwrap();
    let b = p.create_job(upload(), persona()).unwrap();
    assert_ne!(a.job_id, b.job_id);
    assert_eq!(p.list().unwrap().len(), 2);
    p.advance(&a.job_id, Stage::ExtractAudio).unwrap();
    assert_eq!(p.get(&b.job_id).unwrap().state, JobState::Created);
}

/// Delegates to the offline mock unless switched off.
struct Flaky {
    down: AtomicBool,
    inner: MockLlm,
}

impl LlmBackend for Flaky {
    fn id(&self) -> &str {
        "flaky"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        if self.down.load(Ordering::SeqCst) {
            Err(LlmError::Transient("connection refused".into()))
        } else {
            self.inner.complete(req)
        }
    }
}

#[test]
fn backend_outage_fails_the_job_and_allows_retry() {
    let root = tempfile::tempdir().unwrap();
    let flaky = Arc::new(Flaky {
        down: AtomicBool::new(true),
        inner: MockLlm::new(None),
    });
    let backends = Backends {
        llm: flaky.clone(),
        ..Backends::mock(None)
    };
    let p = pipeline_with(root.path(), backends, config());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    advance_to(&p, &id, JobState::Transcribed);

    let err = p.advance(&id, Stage::Select).unwrap_err();
    assert!(matches!(err, ServiceError::StageFailed { stage: Stage::Select, .. }), "{err}");
    let failed = p.get(&id).unwrap();
    assert_eq!(failed.state, JobState::Failed);
    assert_eq!(failed.resume_from, Some(JobState::Transcribed));
    let failure = failed.error.as_ref().unwrap();
    assert_eq!(failure.stage, Stage::Select);
    assert!(failure.message.contains("connection refused"), "{}", failure.message);
    let (audit, _) = p.artifact(&id, ArtifactKind::LlmExchange).unwrap();
    let audit: serde_json::Value = serde_json::from_slice(&std::fs::read(audit).unwrap()).unwrap();
    assert_eq!(audit["errors"].as_array().unwrap().len(), 2);
    assert!(audit["raw"].is_null());
    assert!(matches!(p.artifact(&id, ArtifactKind::Cutlist), Err(ServiceError::NotReady(_))));

    assert!(matches!(p.advance(&id, Stage::Merge), Err(ServiceError::InvalidTransition { .. })));
    flaky.down.store(false, Ordering::SeqCst);
    let m = p.advance(&id, Stage::Select).unwrap();
    assert_eq!(m.state, JobState::Selected);
    assert_eq!(m.error, None);
    assert_eq!(m.resume_from, None);
    let states: Vec<_> = m.transitions.iter().map(|t| t.state).collect();
    assert_eq!(states[3..], [JobState::Failed, JobState::Selected]);
}

#[test]
fn cutlist_edits_are_versioned_and_merge_follows_them() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    advance_to(&p, &id, JobState::Selected);
    assert!(matches!(p.artifact(&id, ArtifactKind::Clip), Err(ServiceError::NotReady(_))));

    let v1 = cutlist(&p, &id);
    assert!(v1.len() >= 3, "mock selection has {} segments", v1.len());
    let order = v1.play_indices();
    let removed = v1.segments[order[1]].duration();

    let m = p.patch_cutlist(&id, &[CutListEdit::Remove { index: 1 }]).unwrap();
    assert_eq!(m.cutlist_version, 2);
    let v2 = cutlist(&p, &id);
    assert_eq!(v2.len(), v1.len() - 1);
    assert_eq!(v2.total_duration, v1.total_duration - removed);
    assert!(root.path().join(&id).join("cutlist.v1.json").is_file());

    let first_start = v2.playback().next().unwrap().range.start;
    let m = p
        .patch_cutlist(
            &id,
            &[CutListEdit::Adjust {
                index: 0,
                delta_start: -(first_start.as_secs_f64() + 2.0),
                delta_end: 0.0,
            }],
        )
        .unwrap();
    assert_eq!(m.cutlist_version, 3);
    assert_eq!(cutlist(&p, &id).playback().next().unwrap().range.start, Timestamp::ZERO);

    let v3 = cutlist(&p, &id);
    let n = v3.len();
    let order: Vec<usize> = (0..n).rev().collect();
    p.patch_cutlist(&id, &[CutListEdit::Reorder { order: order.clone() }]).unwrap();
    let v4 = cutlist(&p, &id);
    let before: Vec<_> = v3.playback().map(|s| s.range).collect();
    let after: Vec<_> = v4.playback().map(|s| s.range).collect();
    assert_eq!(after, order.iter().map(|&i| before[i]).collect::<Vec<_>>());

    let merged = p.advance(&id, Stage::Merge).unwrap();
    assert_eq!(merged.state, JobState::Merged);
    let map = segment_map(&v4);
    assert_eq!(map[0].source, after[0]);
    assert_eq!(map[0].output.start, Timestamp::ZERO);

    let reset = p.patch_cutlist(&id, &[CutListEdit::Remove { index: 0 }]).unwrap();
    assert_eq!(reset.state, JobState::Selected);
    assert_eq!(reset.cutlist_version, 5);
    assert!(matches!(p.artifact(&id, ArtifactKind::Clip), Err(ServiceError::NotReady(_))));
    for v in 1..=5 {
        assert!(root.path().join(&id).join(format!("cutlist.v{v}.json")).is_file());
    }
}

#[test]
fn rejected_edits_change_nothing() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    assert!(matches!(
        p.patch_cutlist(&id, &[CutListEdit::Remove { index: 0 }]),
        Err(ServiceError::NotReady(_))
    ));
    advance_to(&p, &id, JobState::Selected);
    let before = p.get(&id).unwrap();
    let err = p.patch_cutlist(&id, &[CutListEdit::Remove { index: 99 }]).unwrap_err();
    assert!(matches!(err, ServiceError::EditRejected(_)), "{err}");
    let err = p.patch_cutlist(&id, &[CutListEdit::Reorder { order: vec![0] }]).unwrap_err();
    assert!(matches!(err, ServiceError::EditRejected(_)), "{err}");
    assert_eq!(p.get(&id).unwrap(), before);
}

#[test]
fn concurrent_advances_have_one_winner() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..2).map(|_| s.spawn(|| p.advance(&id, Stage::ExtractAudio))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
    assert_eq!(
        results
            .iter()
            .filter(|r| matches!(r, Err(ServiceError::InvalidTransition { .. })))
            .count(),
        1
    );
    assert_eq!(p.get(&id).unwrap().state, JobState::AudioExtracted);
}

#[test]
fn restarted_service_recovers_jobs_from_disk() {
    let root = tempfile::tempdir().unwrap();
    let id = {
        let p = pipeline(root.path());
        let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
        advance_to(&p, &id, JobState::Transcribed);
        id
    };
    let p = pipeline(root.path());
    let m = p.get(&id).unwrap();
    assert_eq!(m.state, JobState::Transcribed);
    assert_eq!(p.list().unwrap(), vec![m]);
    assert_eq!(p.advance(&id, Stage::Select).unwrap().state, JobState::Selected);
}

#[test]
fn sources_without_speech_use_visual_selection() {
    for (video, has_audio_artifact) in [(mute_video(), false), (silent_video(), true)] {
        let root = tempfile::tempdir().unwrap();
        let p = pipeline(root.path());
        let id = p.create_job(JobSource::Path(video), persona()).unwrap().job_id;
        let m = p.run_to_end(&id).unwrap();
        assert_eq!(m.state, JobState::Merged);
        assert!(m.voiceover_free);
        assert_eq!(m.artifacts.audio.is_some(), has_audio_artifact);
        assert_eq!(m.selector.as_deref(), Some("visual"));
        assert!(cutlist(&p, &id).voiceover_free);
        assert!(matches!(p.artifact(&id, ArtifactKind::Subtitles), Err(ServiceError::NotReady(_))));
        let (audit, _) = p.artifact(&id, ArtifactKind::LlmExchange).unwrap();
        let audit: serde_json::Value = serde_json::from_slice(&std::fs::read(audit).unwrap()).unwrap();
        assert!(audit["request"]["video"].as_str().unwrap().ends_with("source.mp4"));
    }
}

#[test]
fn heuristic_selector_needs_no_llm() {
    let root = tempfile::tempdir().unwrap();
    let cfg = clipsmith_service::PipelineConfig {
        selector: SelectorKind::Heuristic,
        ..config()
    };
    let p = pipeline_with(root.path(), Backends::mock(None), cfg);
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    advance_to(&p, &id, JobState::Selected);
    let m = p.get(&id).unwrap();
    assert_eq!(m.selector.as_deref(), Some("heuristic"));
    assert!(m.artifacts.llm_exchange.is_none());
    let c = cutlist(&p, &id);
    assert!(c.total_duration.centis() <= 2200);
}

#[test]
fn metrics_recompute_with_a_new_tau() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    assert!(matches!(p.metrics(&id, None), Err(ServiceError::NotReady(_))));
    advance_to(&p, &id, JobState::Selected);
    let strict = p.metrics(&id, Some(0.95)).unwrap();
    let loose = p.metrics(&id, Some(0.05)).unwrap();
    assert_eq!(strict.tau, 0.95);
    assert!(loose.coverage_coherence >= strict.coverage_coherence);
    assert!(matches!(p.metrics(&id, Some(1.5)), Err(ServiceError::BadRequest(_))));
}

#[test]
fn unknown_jobs_are_not_found() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    assert!(matches!(p.get("nope"), Err(ServiceError::NotFound(_))));
    assert!(matches!(p.advance("nope", Stage::ExtractAudio), Err(ServiceError::NotFound(_))));
    assert!(matches!(p.artifact("../x", ArtifactKind::Video), Err(ServiceError::NotFound(_))));
}

#[test]
fn remerge_after_removal_shortens_the_clip() {
    let root = tempfile::tempdir().unwrap();
    let p = pipeline(root.path());
    let id = p.create_job(JobSource::Path(talk_video()), persona()).unwrap().job_id;
    advance_to(&p, &id, JobState::Merged);
    let clip_secs = |p: &Pipeline| {
        let path = p.artifact(&id, ArtifactKind::Clip).unwrap().0;
        probe(&tool(), &path).unwrap().duration.unwrap().as_secs_f64()
    };
    let before = clip_secs(&p);
    let c = cutlist(&p, &id);
    let removed = c.segments[c.play_indices()[0]].duration().as_secs_f64();
    p.patch_cutlist(&id, &[CutListEdit::Remove { index: 0 }]).unwrap();
    p.advance(&id, Stage::Merge).unwrap();
    let after = clip_secs(&p);
    assert!(((before - after) - removed).abs() <= 0.3, "{before} -> {after}, removed {removed}");
}
