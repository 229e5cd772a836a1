//! Cut-lists: the ordered, editable set of source ranges that make up a clip.
//!
//! Segments are always stored sorted by start. The order in which they are
//! played back may differ (a reviewer can reorder them); that order lives in
//! `play_order`, a permutation of segment indices.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timestamp::{TimeRange, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSegment {
    #[serde(flatten)]
    pub range: TimeRange,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl CutSegment {
    pub fn new(range: TimeRange, text: impl Into<String>) -> Self {
        CutSegment {
            range,
            text: text.into(),
            reason: None,
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }

    pub fn duration(&self) -> Timestamp {
        self.range.duration()
    }
}

/// Wire form of a cut-list. `select_segments` is listed in playback order so
/// the document reads the way the clip plays.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CutListDoc {
    #[serde(default)]
    video_id: String,
    #[serde(default)]
    persona_id: String,
    select_segments: Vec<CutSegment>,
    #[serde(default)]
    total_duration: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    voiceover_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CutListDoc", from = "CutListDoc")]
pub struct CutList {
    pub video_id: String,
    pub persona_id: String,
    pub segments: Vec<CutSegment>,
    pub total_duration: Timestamp,
    /// Playback order as indices into `segments`; `None` means chronological.
    pub play_order: Option<Vec<usize>>,
    /// Set for sources without speech, where segment texts are scene
    /// descriptions and may be empty.
    pub voiceover_free: bool,
}

impl From<CutList> for CutListDoc {
    fn from(c: CutList) -> Self {
        let select_segments = c.playback().cloned().collect();
        CutListDoc {
            video_id: c.video_id,
            persona_id: c.persona_id,
            select_segments,
            total_duration: Some(c.total_duration),
            voiceover_free: c.voiceover_free,
        }
    }
}

impl From<CutListDoc> for CutList {
    fn from(doc: CutListDoc) -> Self {
        let total = doc.total_duration;
        let mut c = CutList::in_play_order(doc.video_id, doc.persona_id, doc.select_segments);
        c.voiceover_free = doc.voiceover_free;
        if let Some(t) = total {
            c.total_duration = t;
        }
        c
    }
}

impl CutList {
    /// Builds a chronological cut-list, sorting segments by start.
    pub fn new(
        video_id: impl Into<String>,
        persona_id: impl Into<String>,
        mut segments: Vec<CutSegment>,
    ) -> Self {
        segments.sort_by_key(|s| (s.range.start, s.range.end));
        let total_duration = segments.iter().map(CutSegment::duration).sum();
        CutList {
            video_id: video_id.into(),
            persona_id: persona_id.into(),
            segments,
            total_duration,
            play_order: None,
            voiceover_free: false,
        }
    }

    /// Builds a cut-list whose playback order is the given order.
    pub fn in_play_order(
        video_id: impl Into<String>,
        persona_id: impl Into<String>,
        segments: Vec<CutSegment>,
    ) -> Self {
        let mut idx: Vec<usize> = (0..segments.len()).collect();
        idx.sort_by_key(|&i| (segments[i].range.start, segments[i].range.end, i));
        // play_order[k] = sorted position of the k-th given segment
        let mut sorted_pos = vec![0; segments.len()];
        for (pos, &i) in idx.iter().enumerate() {
            sorted_pos[i] = pos;
        }
        let chronological = sorted_pos.iter().enumerate().all(|(k, &p)| k == p);
        let mut c = CutList::new(video_id, persona_id, segments);
        if !chronological {
            c.play_order = Some(sorted_pos);
        }
        c
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn recompute_total(&mut self) {
        self.total_duration = self.segments.iter().map(CutSegment::duration).sum();
    }

    /// Indices into `segments` in playback order.
    pub fn play_indices(&self) -> Vec<usize> {
        match &self.play_order {
            Some(order) => order.clone(),
            None => (0..self.segments.len()).collect(),
        }
    }

    pub fn playback(&self) -> impl Iterator<Item = &CutSegment> + '_ {
        self.play_indices().into_iter().map(move |i| &self.segments[i])
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("cut-list serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    ZeroLength,
    OutOfRange,
    Unsorted,
    Overlap,
    EmptyText,
    ScoreOutOfBounds,
    TotalMismatch,
    BadPlayOrder,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::ZeroLength => "end must be after start",
            Violation::OutOfRange => "out of range",
            Violation::Unsorted => "not sorted by start",
            Violation::Overlap => "overlap",
            Violation::EmptyText => "empty text",
            Violation::ScoreOutOfBounds => "score outside [0, 1]",
            Violation::TotalMismatch => "total_duration does not match segments",
            Violation::BadPlayOrder => "play order is not a permutation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CutListError {
    #[error("cut-list is empty")]
    EmptyCutList,
    #[error("cut-list invalid: {violation} at index {index}")]
    CutListInvalid { index: usize, violation: Violation },
}

/// A cut-list that passed [`validate_cutlist`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedCutList(CutList);

impl ValidatedCutList {
    pub fn into_inner(self) -> CutList {
        self.0
    }

    /// Replaces the identifiers, which take no part in validity.
    pub fn with_ids(mut self, video_id: impl Into<String>, persona_id: impl Into<String>) -> Self {
        self.0.video_id = video_id.into();
        self.0.persona_id = persona_id.into();
        self
    }
}

impl Deref for ValidatedCutList {
    type Target = CutList;
    fn deref(&self) -> &CutList {
        &self.0
    }
}

/// Checks every cut-list invariant against the source duration.
pub fn validate_cutlist(
    c: CutList,
    source_duration: Timestamp,
) -> Result<ValidatedCutList, CutListError> {
    if c.segments.is_empty() {
        return Err(CutListError::EmptyCutList);
    }
    let bad = |index, violation| Err(CutListError::CutListInvalid { index, violation });
    for (i, seg) in c.segments.iter().enumerate() {
        if !seg.range.is_valid() {
            return bad(i, Violation::ZeroLength);
        }
        if seg.range.end > source_duration {
            return bad(i, Violation::OutOfRange);
        }
        if i > 0 {
            let prev = &c.segments[i - 1].range;
            if seg.range.start < prev.start {
                return bad(i, Violation::Unsorted);
            }
            if seg.range.start < prev.end {
                return bad(i, Violation::Overlap);
            }
        }
        if seg.text.trim().is_empty() && !c.voiceover_free {
            return bad(i, Violation::EmptyText);
        }
        if let Some(s) = seg.score {
            if !(0.0..=1.0).contains(&s) {
                return bad(i, Violation::ScoreOutOfBounds);
            }
        }
    }
    let total: Timestamp = c.segments.iter().map(CutSegment::duration).sum();
    if total != c.total_duration {
        return bad(0, Violation::TotalMismatch);
    }
    if let Some(order) = &c.play_order {
        let mut seen = vec![false; c.segments.len()];
        let ok = order.len() == seen.len()
            && order
                .iter()
                .all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true));
        if !ok {
            return bad(0, Violation::BadPlayOrder);
        }
    }
    Ok(ValidatedCutList(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: u64, b: u64) -> CutSegment {
        CutSegment::new(
            TimeRange::unchecked(Timestamp::from_secs(a), Timestamp::from_secs(b)),
            "words",
        )
    }

    fn list(segs: Vec<CutSegment>) -> CutList {
        let mut c = CutList::new("v", "p", vec![]);
        c.segments = segs;
        c.recompute_total();
        c
    }

    #[test]
    fn accepts_disjoint_sorted_list() {
        let c = list(vec![seg(10, 20), seg(30, 40)]);
        let v = validate_cutlist(c, Timestamp::from_secs(60)).unwrap();
        assert_eq!(v.total_duration, Timestamp::from_secs(20));
    }

    #[test]
    fn rejects_overlap_with_index() {
        let c = list(vec![seg(10, 20), seg(15, 25)]);
        assert_eq!(
            validate_cutlist(c, Timestamp::from_secs(60)),
            Err(CutListError::CutListInvalid {
                index: 1,
                violation: Violation::Overlap
            })
        );
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        let c = list(vec![seg(50, 70)]);
        assert!(matches!(
            validate_cutlist(c, Timestamp::from_secs(60)),
            Err(CutListError::CutListInvalid {
                index: 0,
                violation: Violation::OutOfRange
            })
        ));
        assert_eq!(
            validate_cutlist(list(vec![]), Timestamp::from_secs(60)),
            Err(CutListError::EmptyCutList)
        );
    }

    #[test]
    fn rejects_order_zero_length_and_text() {
        let unsorted = list(vec![seg(30, 40), seg(10, 20)]);
        assert!(matches!(
            validate_cutlist(unsorted, Timestamp::from_secs(60)),
            Err(CutListError::CutListInvalid { violation: Violation::Unsorted, .. })
        ));
        let zero = list(vec![seg(5, 5)]);
        assert!(matches!(
            validate_cutlist(zero, Timestamp::from_secs(60)),
            Err(CutListError::CutListInvalid { violation: Violation::ZeroLength, .. })
        ));
        let mut silent = list(vec![seg(1, 5)]);
        silent.segments[0].text.clear();
        assert!(validate_cutlist(silent.clone(), Timestamp::from_secs(60)).is_err());
        silent.voiceover_free = true;
        assert!(validate_cutlist(silent, Timestamp::from_secs(60)).is_ok());
    }

    #[test]
    fn adjacent_segments_do_not_overlap() {
        let c = list(vec![seg(10, 20), seg(20, 30)]);
        assert!(validate_cutlist(c, Timestamp::from_secs(30)).is_ok());
    }

    #[test]
    fn play_order_survives_serialization() {
        let c = CutList::in_play_order("v", "p", vec![seg(30, 40), seg(10, 15)]);
        assert_eq!(c.segments[0].range.start, Timestamp::from_secs(10));
        assert_eq!(c.play_order, Some(vec![1, 0]));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#""select_segments":[{"start":30.0,"end":40.0"#), "{json}");
        let back: CutList = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(validate_cutlist(back, Timestamp::from_secs(60)).is_ok());
    }

    #[test]
    fn parses_minimal_document() {
        let c: CutList = serde_json::from_str(
            r#"{"select_segments":[{"start":12.5,"end":25.3,"text":"We begin ..."}]}"#,
        )
        .unwrap();
        assert_eq!(c.segments[0].range.start.to_string(), "12.50");
        assert_eq!(c.total_duration.to_string(), "12.80");
    }
}
