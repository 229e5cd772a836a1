use std::path::Path;

use super::backend::{request_selection, ChatRequest, LlmBackend, RetryPolicy, SelectionResponse};
use super::parse::ParseMode;
use super::prompt::build_visual_prompt;
use super::sanitize::sanitize_cutlist;
use super::SelectError;
use crate::cutlist::ValidatedCutList;
use crate::media::VideoMeta;
use crate::persona::Persona;
use crate::transcript::Transcript;

/// Selection for sources without speech: the video itself is attached to the
/// request and the backend describes scenes instead of quoting a transcript.
///
/// Only valid when the source has no audio stream or its transcript is empty.
pub fn select_visual(
    meta: &VideoMeta,
    p: &Persona,
    transcript: Option<&Transcript>,
    backend: &dyn LlmBackend,
    policy: RetryPolicy,
    audit: Option<&Path>,
) -> Result<(ValidatedCutList, SelectionResponse), SelectError> {
    let voiced = meta.has_audio && transcript.is_some_and(|t| !t.is_empty());
    if voiced {
        return Err(SelectError::PreconditionViolated(
            "visual selection is reserved for sources without speech".into(),
        ));
    }
    let bundle = build_visual_prompt(meta, p);
    let req = ChatRequest::from_bundle(&bundle).with_video(&meta.path);
    let empty = Transcript::new(backend.id(), meta.duration, Vec::new());
    let resp = request_selection(&req, backend, policy, &empty, meta.duration, ParseMode::Visual, audit)?;
    let Some(parsed) = resp.parsed.as_ref() else {
        return Err(SelectError::SelectionParseError { raw: resp.raw });
    };
    let cutlist = sanitize_cutlist(parsed, meta.duration, p)?;
    Ok((cutlist, resp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Container;
    use crate::select::ScriptedLlm;
    use crate::timestamp::Timestamp;
    use crate::transcribe::range_secs;
    use crate::transcript::TranscriptSegment;

    fn silent_meta() -> VideoMeta {
        VideoMeta {
            path: "silent.mp4".into(),
            container: Container::Mp4,
            duration: Timestamp::from_secs(60),
            has_audio: false,
            width: 320,
            height: 240,
            fps: 25.0,
            video_codec: None,
            pixel_format: None,
            audio_codec: None,
            sample_rate: None,
        }
    }

    const TWO_SCENES: &str = r#"{"select_segments":[
        {"start":"5.0","end":"12.0","text":"title card"},
        {"start":"30.0","end":"41.5","text":"device close-up"}]}"#;

    #[test]
    fn two_ranges_from_mock() {
        let llm = ScriptedLlm::always(TWO_SCENES);
        let (c, _) = select_visual(&silent_meta(), &Persona::default(), None, &llm, RetryPolicy::no_delay(0), None)
            .unwrap();
        assert_eq!(c.segments.len(), 2);
        assert!(c.voiceover_free);
        assert_eq!(llm.calls()[0].video.as_deref(), Some(Path::new("silent.mp4")));
    }

    #[test]
    fn voiced_source_rejected() {
        let mut meta = silent_meta();
        meta.has_audio = true;
        let t = Transcript::new(
            "t",
            meta.duration,
            vec![TranscriptSegment::new(0, range_secs(0.0, 5.0), "hello there.")],
        );
        let llm = ScriptedLlm::always(TWO_SCENES);
        let got = select_visual(&meta, &Persona::default(), Some(&t), &llm, RetryPolicy::no_delay(0), None);
        assert!(matches!(got, Err(SelectError::PreconditionViolated(_))));
        assert!(llm.calls().is_empty());
    }

    #[test]
    fn out_of_range_clamped() {
        let llm = ScriptedLlm::always(r#"{"select_segments":[{"start":50,"end":95,"text":"outro"}]}"#);
        let (c, _) = select_visual(&silent_meta(), &Persona::default(), None, &llm, RetryPolicy::no_delay(0), None)
            .unwrap();
        assert_eq!(c.segments[0].range.end, Timestamp::from_secs(60));
    }
}
