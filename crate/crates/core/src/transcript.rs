//! Timestamped transcripts and the post-processing applied before selection.

use serde::{Deserialize, Serialize};

use crate::timestamp::{TimeRange, Timestamp};

/// Default gap below which an unterminated fragment is joined to its successor.
pub const DEFAULT_GAP_THRESHOLD: Timestamp = Timestamp::from_centis(30);
/// Default upper bound on the span of a merged segment.
pub const DEFAULT_MAX_MERGED_DURATION: Timestamp = Timestamp::from_secs(30);
/// Default minimum silence reported as a pause.
pub const DEFAULT_PAUSE_MIN_GAP: Timestamp = Timestamp::from_centis(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub index: usize,
    #[serde(flatten)]
    pub range: TimeRange,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl TranscriptSegment {
    pub fn new(index: usize, range: TimeRange, text: impl Into<String>) -> Self {
        TranscriptSegment {
            index,
            range,
            text: text.into(),
            language: None,
            confidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub segments: Vec<TranscriptSegment>,
    pub backend_id: String,
    #[serde(rename = "language", default)]
    pub detected_language: Option<String>,
    #[serde(rename = "duration")]
    pub source_duration: Timestamp,
}

impl Transcript {
    pub fn new(
        backend_id: impl Into<String>,
        source_duration: Timestamp,
        segments: Vec<TranscriptSegment>,
    ) -> Self {
        Transcript {
            segments,
            backend_id: backend_id.into(),
            detected_language: None,
            source_duration,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Sorts by start, trims text and renumbers; the canonical form every
    /// backend output is brought into.
    pub fn canonicalize(&mut self) {
        self.segments
            .sort_by_key(|s| (s.range.start, s.range.end, s.index));
        for (i, s) in self.segments.iter_mut().enumerate() {
            s.index = i;
            let trimmed = s.text.trim();
            if trimmed.len() != s.text.len() {
                s.text = trimmed.to_string();
            }
        }
    }

    /// Checks ordering, non-overlap and that every segment lies inside the source.
    pub fn is_well_formed(&self) -> bool {
        self.segments.iter().all(|s| s.range.is_valid() && s.range.end <= self.source_duration)
            && self
                .segments
                .windows(2)
                .all(|w| w[0].range.end <= w[1].range.start)
    }

    /// All segment texts joined by single spaces.
    pub fn full_text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.trim())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn end(&self) -> Timestamp {
        self.segments.last().map_or(Timestamp::ZERO, |s| s.range.end)
    }
}

fn ends_sentence(text: &str) -> bool {
    let trimmed = text
        .trim_end()
        .trim_end_matches(['"', '\'', ')', ']', '”', '’', '」', '』']);
    matches!(
        trimmed.chars().last(),
        Some('.' | '!' | '?' | '…' | '。' | '！' | '？' | '．')
    )
}

/// Joins sentence fragments split by the transcriber.
///
/// A segment absorbs its successor when its text has no terminal punctuation,
/// the silence between them is below `gap_threshold`, and the joined span stays
/// within `max_merged_duration`.
pub fn merge_fragments(
    t: &Transcript,
    gap_threshold: Timestamp,
    max_merged_duration: Timestamp,
) -> Transcript {
    let mut out: Vec<TranscriptSegment> = Vec::with_capacity(t.segments.len());
    for seg in &t.segments {
        if let Some(acc) = out.last_mut() {
            let gap = seg.range.start.saturating_sub(acc.range.end);
            let span = seg.range.end.saturating_sub(acc.range.start);
            if !ends_sentence(&acc.text) && gap < gap_threshold && span <= max_merged_duration {
                let next = seg.text.trim();
                if !next.is_empty() {
                    if !acc.text.is_empty() {
                        acc.text.push(' ');
                    }
                    acc.text.push_str(next);
                }
                acc.range.end = acc.range.end.max(seg.range.end);
                acc.confidence = match (acc.confidence, seg.confidence) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    _ => None,
                };
                continue;
            }
        }
        let mut fresh = seg.clone();
        fresh.text = fresh.text.trim().to_string();
        out.push(fresh);
    }
    for (i, s) in out.iter_mut().enumerate() {
        s.index = i;
    }
    Transcript {
        segments: out,
        backend_id: t.backend_id.clone(),
        detected_language: t.detected_language.clone(),
        source_duration: t.source_duration,
    }
}

/// Silences of at least `min_gap`: leading, between segments, and trailing.
pub fn detect_pauses(t: &Transcript, min_gap: Timestamp) -> Vec<TimeRange> {
    let mut pauses = Vec::new();
    let mut cursor = Timestamp::ZERO;
    for seg in &t.segments {
        if seg.range.start > cursor && seg.range.start - cursor >= min_gap {
            pauses.push(TimeRange::unchecked(cursor, seg.range.start));
        }
        cursor = cursor.max(seg.range.end);
    }
    if t.source_duration > cursor && t.source_duration - cursor >= min_gap {
        pauses.push(TimeRange::unchecked(cursor, t.source_duration));
    }
    pauses
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Confirmed,
    Mismatch,
    Unknown,
}

/// Outcome of comparing the fast and accurate backends' language detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    pub status: VerdictStatus,
    pub chosen: Option<String>,
    pub details: String,
    /// When set, the accurate backend should be re-run with this language forced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerun_with: Option<String>,
}

fn primary_subtag(tag: &str) -> String {
    tag.split(['-', '_']).next().unwrap_or(tag).to_ascii_lowercase()
}

/// Compares language tags from the two backends. The fast backend's tag wins
/// on disagreement because its language identification is the more reliable.
pub fn cross_validate_language(fast: &Transcript, accurate: &Transcript) -> LanguageVerdict {
    let fast_tag = fast.detected_language.as_deref().filter(|s| !s.is_empty());
    let acc_tag = accurate.detected_language.as_deref().filter(|s| !s.is_empty());
    match (fast_tag, acc_tag) {
        (Some(f), Some(a)) if primary_subtag(f) == primary_subtag(a) => LanguageVerdict {
            status: VerdictStatus::Confirmed,
            chosen: Some(a.to_string()),
            details: format!("both backends detected {a}"),
            rerun_with: None,
        },
        (Some(f), Some(a)) => LanguageVerdict {
            status: VerdictStatus::Mismatch,
            chosen: Some(f.to_string()),
            details: format!(
                "{} detected {f}, {} detected {a}; re-run accurate backend forced to {f}",
                fast.backend_id, accurate.backend_id
            ),
            rerun_with: Some(f.to_string()),
        },
        (None, a) => LanguageVerdict {
            status: VerdictStatus::Unknown,
            chosen: a.map(str::to_string),
            details: format!("{} reported no language", fast.backend_id),
            rerun_with: None,
        },
        (Some(f), None) => LanguageVerdict {
            status: VerdictStatus::Unknown,
            chosen: Some(f.to_string()),
            details: format!("{} reported no language", accurate.backend_id),
            rerun_with: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    fn seg(i: usize, a: &str, b: &str, text: &str) -> TranscriptSegment {
        TranscriptSegment::new(i, TimeRange::unchecked(ts(a), ts(b)), text)
    }

    fn transcript(segs: Vec<TranscriptSegment>, dur: &str) -> Transcript {
        Transcript::new("test", ts(dur), segs)
    }

    #[test]
    fn merges_unterminated_fragment() {
        let t = transcript(
            vec![seg(0, "0", "1.2", "We begin"), seg(1, "1.3", "2.5", "with the agenda.")],
            "10",
        );
        let m = merge_fragments(&t, DEFAULT_GAP_THRESHOLD, DEFAULT_MAX_MERGED_DURATION);
        assert_eq!(m.segments.len(), 1);
        assert_eq!(m.segments[0].text, "We begin with the agenda.");
        assert_eq!(m.segments[0].range, TimeRange::unchecked(ts("0"), ts("2.5")));
    }

    #[test]
    fn keeps_terminated_or_distant_segments() {
        let done = transcript(vec![seg(0, "0", "1", "Done."), seg(1, "1.1", "2", "Next topic.")], "5");
        assert_eq!(merge_fragments(&done, ts("0.3"), ts("30")), done);

        let far = transcript(vec![seg(0, "0", "1", "We begin"), seg(1, "1.8", "2", "later")], "5");
        assert_eq!(merge_fragments(&far, ts("0.3"), ts("30")).segments.len(), 2);

        let quoted = transcript(vec![seg(0, "0", "1", "He said \"stop.\""), seg(1, "1", "2", "ok")], "5");
        assert_eq!(merge_fragments(&quoted, ts("0.3"), ts("30")).segments.len(), 2);
    }

    #[test]
    fn respects_max_merged_duration() {
        let t = transcript(
            vec![seg(0, "0", "20", "first part"), seg(1, "20.1", "35", "second part")],
            "40",
        );
        assert_eq!(merge_fragments(&t, ts("0.3"), ts("30")).segments.len(), 2);
        assert_eq!(merge_fragments(&t, ts("0.3"), ts("35")).segments.len(), 1);
    }

    #[test]
    fn cjk_terminal_punctuation() {
        let t = transcript(vec![seg(0, "0", "1", "你好。"), seg(1, "1", "2", "再见")], "5");
        assert_eq!(merge_fragments(&t, ts("0.3"), ts("30")).segments.len(), 2);
    }

    #[test]
    fn pauses_between_and_around_speech() {
        let t = transcript(vec![seg(0, "0", "5", "a."), seg(1, "5.8", "10", "b.")], "10");
        assert_eq!(detect_pauses(&t, ts("0.6")), vec![TimeRange::unchecked(ts("5"), ts("5.8"))]);

        let contiguous = transcript(vec![seg(0, "0", "5", "a."), seg(1, "5", "10", "b.")], "10");
        assert!(detect_pauses(&contiguous, ts("0.6")).is_empty());

        let lead = transcript(vec![seg(0, "2", "5", "a.")], "10");
        assert_eq!(
            detect_pauses(&lead, ts("0.6")),
            vec![
                TimeRange::unchecked(ts("0"), ts("2")),
                TimeRange::unchecked(ts("5"), ts("10"))
            ]
        );
    }

    #[test]
    fn language_verdicts() {
        let mut fast = transcript(vec![], "1");
        let mut acc = transcript(vec![], "1");
        fast.detected_language = Some("en".into());
        acc.detected_language = Some("en".into());
        let v = cross_validate_language(&fast, &acc);
        assert_eq!((v.status, v.chosen.as_deref()), (VerdictStatus::Confirmed, Some("en")));

        acc.detected_language = Some("cy".into());
        let v = cross_validate_language(&fast, &acc);
        assert_eq!(v.status, VerdictStatus::Mismatch);
        assert_eq!(v.chosen.as_deref(), Some("en"));
        assert_eq!(v.rerun_with.as_deref(), Some("en"));

        fast.detected_language = None;
        let v = cross_validate_language(&fast, &acc);
        assert_eq!((v.status, v.chosen.as_deref()), (VerdictStatus::Unknown, Some("cy")));
    }

    #[test]
    fn interchange_format_field_names() {
        let mut t = transcript(vec![seg(0, "0", "1.5", "Hello.")], "2");
        t.detected_language = Some("en".into());
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["language"], "en");
        assert_eq!(json["duration"], 2.0);
        assert_eq!(json["segments"][0]["start"], 0.0);
        assert_eq!(json["segments"][0]["end"], 1.5);
        assert_eq!(json["segments"][0]["index"], 0);
    }
}
