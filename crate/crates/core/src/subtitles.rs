//! SRT subtitles for a merged clip, remapped from source time to output time.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cutlist::CutList;
use crate::timestamp::{TimeRange, Timestamp};
use crate::transcript::Transcript;

/// Where one cut-list segment landed in the merged output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMapping {
    pub source: TimeRange,
    pub output: TimeRange,
}

impl SegmentMapping {
    /// Output time of a source instant inside this mapping.
    pub fn to_output(&self, t: Timestamp) -> Timestamp {
        self.output.start + (t - self.source.start)
    }
}

/// Lays segments end to end in playback order, starting at zero.
pub fn segment_map(c: &CutList) -> Vec<SegmentMapping> {
    let mut cursor = Timestamp::ZERO;
    c.playback()
        .map(|s| {
            let output = TimeRange::unchecked(cursor, cursor + s.duration());
            cursor = output.end;
            SegmentMapping { source: s.range, output }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleFile {
    pub cues: Vec<SubtitleCue>,
}

/// `HH:MM:SS,mmm`.
pub fn srt_time(ms: u64) -> String {
    format!(
        "{:02}:{:02}:{:02},{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

impl SubtitleFile {
    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }

    pub fn to_srt(&self) -> String {
        let mut out = String::new();
        for cue in &self.cues {
            let _ = write!(
                out,
                "{}\n{} --> {}\n{}\n\n",
                cue.index,
                srt_time(cue.start_ms),
                srt_time(cue.end_ms),
                cue.text
            );
        }
        out
    }
}

/// One cue per (mapping, transcript segment) intersection, clipped to the
/// intersection and shifted into output time. Cues are numbered from 1 in
/// output order.
pub fn generate_subtitles(t: &Transcript, map: &[SegmentMapping]) -> SubtitleFile {
    let mut ordered: Vec<&SegmentMapping> = map.iter().collect();
    ordered.sort_by_key(|m| m.output.start);
    let mut cues = Vec::new();
    for m in ordered {
        for seg in &t.segments {
            let text = seg.text.trim();
            if text.is_empty() {
                continue;
            }
            let Some(hit) = seg.range.intersect(&m.source) else {
                continue;
            };
            if !hit.is_valid() {
                continue;
            }
            cues.push(SubtitleCue {
                index: cues.len() + 1,
                start_ms: m.to_output(hit.start).millis(),
                end_ms: m.to_output(hit.end).millis(),
                text: text.to_string(),
            });
        }
    }
    SubtitleFile { cues }
}
