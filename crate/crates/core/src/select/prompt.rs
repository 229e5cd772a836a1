use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::media::VideoMeta;
use crate::persona::Persona;
use crate::transcript::Transcript;

/// Shape the backend must answer with.
pub const SCHEMA_HINT: &str = r#"{
  "select_segments": [
    {
      "start": 12.5,
      "end": 25.3,
      "text": "We begin ...",
      "reason": "optional: why this segment matters"
    }
  ]
}"#;

const SELECTION_CRITERIA: [&str; 3] = [
    "Reflect the most important ideas, agenda points, or transitions.",
    "Ensure coverage across the full video duration, including beginning and end sections when relevant.",
    "Consider speaker tone, pauses, and natural breaks to ensure smooth clip transitions.",
];

const TIMESTAMP_RULES: [&str; 4] = [
    "Do not use timestamps in HH:MM:SS format.",
    "Convert all time references into seconds only.",
    "Use at most two decimal places for timestamps.",
    "If timestamps are not applicable, use \"N/A\" or omit the start and end fields.",
];

/// System and user messages for one selection request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub schema_hint: String,
}

fn system_text(budget_secs: &str, voiced: bool) -> String {
    let mut s = String::new();
    s.push_str("You select the most meaningful content from a video to build a highlight clip.\n");
    let _ = writeln!(
        s,
        "Pick segments that together last at most {budget_secs} seconds."
    );
    if voiced {
        s.push_str(
            "Quote the spoken text exactly as it appears in the transcript. Do not paraphrase.\n",
        );
    } else {
        s.push_str("The video has no voiceover; describe each selected scene in the text field.\n");
    }
    s.push_str("\n## Segment Selection Criteria\n");
    for c in SELECTION_CRITERIA {
        let _ = writeln!(s, "- {c}");
    }
    if voiced {
        s.push_str("\n## Verbatim Extraction\n");
        s.push_str(
            "Every text value MUST be copied word for word from the transcript. \
             Do not rephrase, summarize, or invent sentences.\n",
        );
    }
    s.push_str("\n## Timestamp Rules\n");
    for r in TIMESTAMP_RULES {
        let _ = writeln!(s, "- {r}");
    }
    s.push_str("\n## Output Format\n");
    s.push_str("Respond with a single valid JSON object and nothing else, shaped like:\n");
    s.push_str(SCHEMA_HINT);
    s.push('\n');
    s
}

fn persona_section(s: &mut String, p: &Persona) {
    let _ = writeln!(s, "## Role / Style\n{}\n", p.role.trim());
    if !p.extra_requirements.trim().is_empty() {
        let _ = writeln!(s, "## Additional Requirements\n{}\n", p.extra_requirements.trim());
    }
    if !p.keywords.is_empty() {
        let _ = writeln!(s, "## Keywords\n{}\n", p.keywords.join(", "));
    }
    let _ = writeln!(
        s,
        "## Target Duration\nThe highlight must not exceed {} seconds in total.\n",
        p.max_duration
    );
}

/// Builds the role-injected selection prompt over a transcript.
pub fn build_prompt(t: &Transcript, p: &Persona) -> PromptBundle {
    let mut user = String::new();
    persona_section(&mut user, p);
    let _ = writeln!(
        user,
        "## Transcript\nSource duration: {} seconds. Each line is [start - end] text, in seconds.\n",
        t.source_duration
    );
    for seg in &t.segments {
        let _ = writeln!(user, "[{} - {}] {}", seg.range.start, seg.range.end, seg.text.trim());
    }
    PromptBundle {
        system_text: system_text(&p.max_duration.to_string(), true),
        user_text: user,
        schema_hint: SCHEMA_HINT.to_string(),
    }
}

/// Prompt for sources without speech; the video itself is attached to the request.
pub fn build_visual_prompt(meta: &VideoMeta, p: &Persona) -> PromptBundle {
    let mut user = String::new();
    persona_section(&mut user, p);
    let _ = writeln!(
        user,
        "## Video\nThe attached video lasts {} seconds ({}x{}). Select salient visual segments.",
        meta.duration, meta.width, meta.height
    );
    PromptBundle {
        system_text: system_text(&p.max_duration.to_string(), false),
        user_text: user,
        schema_hint: SCHEMA_HINT.to_string(),
    }
}
