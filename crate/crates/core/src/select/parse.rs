//! Lenient extraction of `select_segments` from free-form model output.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::SelectError;
use crate::cutlist::{CutList, CutSegment};
use crate::text::fold_whitespace_case;
use crate::timestamp::{normalize_timestamp, parse_time_to_seconds, TimeRange, Timestamp};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseMode {
    /// Segment text must be quoted from the transcript.
    Verbatim,
    /// Voiceover-free source: text is a scene description, no verbatim check.
    Visual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    /// `"N/A"` or omitted timestamps.
    NotApplicable,
    /// A timestamp that could not be read.
    BadTimestamp,
    /// Text missing for a voiced source.
    MissingText,
    /// Text not found in the transcript.
    NotVerbatim,
    /// Entry is not an object.
    Malformed,
    /// Kept, but lies partly or wholly outside the source; sanitation decides.
    OutOfRange,
}

/// A model-proposed entry that was discarded or flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub index: usize,
    pub kind: AnnotationKind,
    /// Whether the entry still made it into the cut-list.
    pub kept: bool,
    pub entry: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSelection {
    pub cutlist: CutList,
    pub annotations: Vec<Annotation>,
}

/// Parses a voiced-source selection; see [`parse_selection_mode`].
pub fn parse_selection(
    raw: &str,
    t: &Transcript,
    source_duration: Timestamp,
) -> Result<ParsedSelection, SelectError> {
    parse_selection_mode(raw, t, source_duration, ParseMode::Verbatim)
}

/// Finds the `select_segments` array anywhere in `raw` (code fences and
/// surrounding prose are tolerated), converts timestamps, and applies the
/// verbatim rule. Entries that fail are moved to annotations.
pub fn parse_selection_mode(
    raw: &str,
    t: &Transcript,
    source_duration: Timestamp,
    mode: ParseMode,
) -> Result<ParsedSelection, SelectError> {
    let entries = find_segments(raw).ok_or_else(|| SelectError::SelectionParseError {
        raw: raw.to_string(),
    })?;
    let haystack = fold_whitespace_case(&t.full_text());
    let mut segments = Vec::new();
    let mut annotations = Vec::new();
    for (index, entry) in entries.into_iter().enumerate() {
        let mut note = |kind, kept, entry: &Value| {
            annotations.push(Annotation {
                index,
                kind,
                kept,
                entry: entry.clone(),
            })
        };
        let Some(obj) = entry.as_object() else {
            note(AnnotationKind::Malformed, false, &entry);
            continue;
        };
        let range = match (read_time(obj, "start"), read_time(obj, "end")) {
            (TimeField::Value(s), TimeField::Value(e)) => TimeRange::unchecked(s, e),
            (TimeField::Bad, _) | (_, TimeField::Bad) => {
                note(AnnotationKind::BadTimestamp, false, &entry);
                continue;
            }
            _ => {
                note(AnnotationKind::NotApplicable, false, &entry);
                continue;
            }
        };
        let text = obj
            .get("text")
            .and_then(Value::as_str)
            .map(str::trim)
            .unwrap_or_default()
            .to_string();
        if mode == ParseMode::Verbatim {
            if text.is_empty() {
                note(AnnotationKind::MissingText, false, &entry);
                continue;
            }
            if !is_verbatim(&text, &haystack) {
                note(AnnotationKind::NotVerbatim, false, &entry);
                continue;
            }
        }
        if range.end > source_duration || range.start >= source_duration {
            note(AnnotationKind::OutOfRange, true, &entry);
        }
        let reason = obj
            .get("reason")
            .and_then(Value::as_str)
            .filter(|r| !r.trim().is_empty())
            .map(str::to_string);
        let score = obj
            .get("score")
            .and_then(Value::as_f64)
            .filter(|s| s.is_finite())
            .map(|s| s.clamp(0.0, 1.0));
        segments.push(CutSegment {
            range,
            text,
            reason,
            score,
        });
    }
    if segments.is_empty() {
        return Err(SelectError::EmptySelection);
    }
    let mut cutlist = CutList::new("", "", segments);
    cutlist.voiceover_free = mode == ParseMode::Visual;
    Ok(ParsedSelection {
        cutlist,
        annotations,
    })
}

enum TimeField {
    Value(Timestamp),
    Missing,
    Bad,
}

fn read_time(obj: &Map<String, Value>, key: &str) -> TimeField {
    match obj.get(key) {
        None | Some(Value::Null) => TimeField::Missing,
        Some(Value::Number(n)) => match n.as_f64().map(normalize_timestamp) {
            Some(Ok(ts)) => TimeField::Value(ts),
            _ => TimeField::Bad,
        },
        Some(Value::String(s)) => {
            let s = s.trim();
            let lowered = s.to_ascii_lowercase();
            if s.is_empty() || lowered == "n/a" || lowered == "na" || lowered == "none" {
                return TimeField::Missing;
            }
            // "12.5s" and "12.5 sec" show up in practice
            let s = s
                .trim_end_matches(|c: char| c.is_ascii_alphabetic())
                .trim_end();
            match parse_time_to_seconds(s) {
                Ok(ts) => TimeField::Value(ts),
                Err(_) => TimeField::Bad,
            }
        }
        Some(_) => TimeField::Bad,
    }
}

/// Containment after whitespace and case folding. A trailing ellipsis marks
/// an elided quote; the part before it must still be verbatim.
fn is_verbatim(text: &str, folded_transcript: &str) -> bool {
    let folded = fold_whitespace_case(text);
    let trimmed = folded
        .trim_end_matches(['.', '…', ' '])
        .trim_start_matches(['.', '…', ' ']);
    let needle = if folded.ends_with("...") || folded.ends_with('…') {
        trimmed
    } else {
        folded.as_str()
    };
    !needle.is_empty() && folded_transcript.contains(needle)
}

fn segments_of(v: &Value) -> Option<Vec<Value>> {
    match v {
        Value::Object(o) => match o.get("select_segments") {
            Some(Value::Array(a)) => Some(a.clone()),
            _ => o.values().find_map(|inner| match inner {
                Value::Object(_) => segments_of(inner),
                _ => None,
            }),
        },
        Value::Array(a) if !a.is_empty() && a.iter().all(looks_like_segment) => Some(a.clone()),
        _ => None,
    }
}

fn looks_like_segment(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.contains_key("start") || o.contains_key("text"))
}

fn find_segments(raw: &str) -> Option<Vec<Value>> {
    for block in fenced_blocks(raw).into_iter().chain(std::iter::once(raw)) {
        if let Some(found) = scan_json(block) {
            return Some(found);
        }
    }
    None
}

fn fenced_blocks(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                out.push(body);
                break;
            }
        }
    }
    out
}

/// Tries each `{` / `[` as the start of a JSON value, outermost first.
fn scan_json(text: &str) -> Option<Vec<Value>> {
    for (i, c) in text.char_indices() {
        if c != '{' && c != '[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            if let Some(found) = segments_of(&v) {
                return Some(found);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcribe::range_secs;
    use crate::transcript::TranscriptSegment;

    fn transcript() -> Transcript {
        Transcript::new(
            "acc",
            Timestamp::from_secs(600),
            vec![
                TranscriptSegment::new(0, range_secs(12.0, 26.0), "We begin with the agenda for today."),
                TranscriptSegment::new(1, range_secs(30.0, 40.0), "Safety data   were reassuring."),
            ],
        )
    }

    fn parse(raw: &str) -> Result<ParsedSelection, SelectError> {
        parse_selection(raw, &transcript(), Timestamp::from_secs(600))
    }

    #[test]
    fn required_output_structure() {
        let p = parse(r#"{"select_segments":[{"start":12.5,"end":25.3,"text":"We begin ..."}]}"#).unwrap();
        let r = p.cutlist.segments[0].range;
        assert_eq!((r.start.to_string(), r.end.to_string()), ("12.50".into(), "25.30".into()));
    }

    #[test]
    fn clock_form_out_of_range_is_flagged_not_dropped() {
        let p = parse(
            r#"{"select_segments":[{"start":"00:15:00","end":"00:15:10","text":"safety data were reassuring"}]}"#,
        )
        .unwrap();
        assert_eq!(p.cutlist.segments[0].range.start, Timestamp::from_secs(900));
        assert_eq!(p.annotations[0].kind, AnnotationKind::OutOfRange);
        assert!(p.annotations[0].kept);
    }

    #[test]
    fn paraphrase_moves_to_annotations() {
        let p = parse(
            r#"{"select_segments":[
                {"start":12,"end":20,"text":"We begin with the agenda"},
                {"start":30,"end":40,"text":"The safety results looked good"}]}"#,
        )
        .unwrap();
        assert_eq!(p.cutlist.segments.len(), 1);
        assert_eq!(p.annotations.len(), 1);
        assert_eq!(p.annotations[0].kind, AnnotationKind::NotVerbatim);
        assert_eq!(p.annotations[0].index, 1);
    }

    #[test]
    fn tolerates_fences_and_prose() {
        let raw = "Sure! Here is the selection:\n```json\n{\"select_segments\": [{\"start\": \"30\", \"end\": \"40.004\", \"text\": \"SAFETY data were reassuring.\", \"reason\": \"key result\", \"score\": 1.7}]}\n```\nLet me know.";
        let p = parse(raw).unwrap();
        let s = &p.cutlist.segments[0];
        assert_eq!(s.range.end.to_string(), "40.00");
        assert_eq!(s.reason.as_deref(), Some("key result"));
        assert_eq!(s.score, Some(1.0));
    }

    #[test]
    fn not_applicable_and_bad_entries() {
        let p = parse(
            r#"{"select_segments":[
                {"start":"N/A","end":"N/A","text":"We begin with the agenda"},
                {"text":"We begin with the agenda"},
                {"start":"soon","end":5,"text":"We begin with the agenda"},
                "junk",
                {"start":12,"end":20,"text":""},
                {"start":12,"end":20,"text":"we BEGIN with the agenda"}]}"#,
        )
        .unwrap();
        let kinds: Vec<_> = p.annotations.iter().map(|a| a.kind).collect();
        assert_eq!(
            kinds,
            [
                AnnotationKind::NotApplicable,
                AnnotationKind::NotApplicable,
                AnnotationKind::BadTimestamp,
                AnnotationKind::Malformed,
                AnnotationKind::MissingText
            ]
        );
        assert_eq!(p.cutlist.segments.len(), 1);
    }

    #[test]
    fn typed_errors() {
        assert!(matches!(parse("no json here"), Err(SelectError::SelectionParseError { .. })));
        assert!(matches!(parse(r#"{"other": 1}"#), Err(SelectError::SelectionParseError { .. })));
        assert_eq!(
            parse(r#"{"select_segments":[{"start":1,"end":2,"text":"invented words"}]}"#),
            Err(SelectError::EmptySelection)
        );
        assert_eq!(parse(r#"{"select_segments":[]}"#), Err(SelectError::EmptySelection));
    }

    #[test]
    fn visual_mode_skips_verbatim() {
        let empty = Transcript::new("none", Timestamp::from_secs(60), vec![]);
        let p = parse_selection_mode(
            r#"{"select_segments":[{"start":1,"end":5,"text":"a sunset over the bay"}]}"#,
            &empty,
            Timestamp::from_secs(60),
            ParseMode::Visual,
        )
        .unwrap();
        assert!(p.cutlist.voiceover_free);
        assert_eq!(p.cutlist.segments[0].text, "a sunset over the bay");
    }

    #[test]
    fn bare_array_and_nested_object() {
        assert!(parse(r#"[{"start":12,"end":20,"text":"We begin with the agenda"}]"#).is_ok());
        assert!(parse(r#"{"result":{"select_segments":[{"start":12,"end":20,"text":"We begin with the agenda"}]}}"#).is_ok());
    }
}
