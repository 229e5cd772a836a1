//! Transcript-only relevance scoring for the heuristic selector.
//!
//! Three signals are combined: keyword hits (persona keywords, or the
//! transcript's top TF-IDF terms when the persona has none), agenda cue
//! phrases, and alignment of the segment edges with detected pauses.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::persona::Persona;
use crate::text::{contains_token_run, is_stopword, tokens};
use crate::timestamp::{TimeRange, Timestamp};
use crate::transcript::{Transcript, TranscriptSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub keyword_weight: f64,
    pub agenda_weight: f64,
    pub boundary_weight: f64,
    pub agenda_cues: Vec<String>,
    /// Terms taken from TF-IDF when the persona lists no keywords.
    pub tfidf_terms: usize,
    /// Distance within which a segment edge counts as touching a pause.
    pub boundary_slack: Timestamp,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            keyword_weight: 0.5,
            agenda_weight: 0.25,
            boundary_weight: 0.25,
            agenda_cues: [
                "agenda",
                "today we",
                "first",
                "second",
                "finally",
                "to wrap up",
                "in summary",
            ]
            .map(String::from)
            .to_vec(),
            tfidf_terms: 10,
            boundary_slack: Timestamp::from_centis(5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub keyword: f64,
    pub agenda: f64,
    pub boundary: f64,
    pub combined: f64,
}

/// Top `n` terms by corpus TF-IDF, `sum(tf) * ln(N / df)`, ties alphabetical.
///
/// Terms found in every document score zero and are never returned.
/// Duplicating every document scales all scores by the same factor, so the
/// ranking is unchanged.
pub fn tfidf_keywords(documents: &[&str], n: usize) -> Vec<String> {
    let mut tf: BTreeMap<String, u64> = BTreeMap::new();
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in documents {
        let mut seen = HashSet::new();
        for tok in tokens(doc) {
            if tok.chars().count() < 2 || is_stopword(&tok) || tok.chars().all(|c| c.is_ascii_digit()) {
                continue;
            }
            *tf.entry(tok.clone()).or_default() += 1;
            if seen.insert(tok.clone()) {
                *df.entry(tok).or_default() += 1;
            }
        }
    }
    let docs = documents.len() as f64;
    let mut scored: Vec<(f64, String)> = tf
        .into_iter()
        .map(|(term, count)| {
            let idf = (docs / df[&term] as f64).ln();
            (count as f64 * idf, term)
        })
        .filter(|(s, _)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().take(n).map(|(_, t)| t).collect()
}

/// Precomputed scoring context for one transcript and persona.
#[derive(Debug, Clone)]
pub struct Scorer {
    keywords: Vec<Vec<String>>,
    cues: Vec<Vec<String>>,
    pauses: Vec<TimeRange>,
    transcript_end: Timestamp,
    cfg: ScoringConfig,
}

impl Scorer {
    pub fn new(t: &Transcript, p: &Persona, pauses: &[TimeRange], cfg: &ScoringConfig) -> Self {
        let raw: Vec<String> = if p.keywords.iter().any(|k| !k.trim().is_empty()) {
            p.keywords.clone()
        } else {
            let docs: Vec<&str> = t.segments.iter().map(|s| s.text.as_str()).collect();
            tfidf_keywords(&docs, cfg.tfidf_terms)
        };
        let mut keywords: Vec<Vec<String>> = Vec::new();
        for k in raw {
            let toks = tokens(&k);
            if !toks.is_empty() && !keywords.contains(&toks) {
                keywords.push(toks);
            }
        }
        Scorer {
            keywords,
            cues: cfg.agenda_cues.iter().map(|c| tokens(c)).collect(),
            pauses: pauses.to_vec(),
            transcript_end: t.end(),
            cfg: cfg.clone(),
        }
    }

    pub fn keywords(&self) -> Vec<String> {
        self.keywords.iter().map(|k| k.join(" ")).collect()
    }

    pub fn score_range(&self, range: TimeRange, text: &str) -> SegmentScore {
        let toks = tokens(text);
        let hits = self
            .keywords
            .iter()
            .filter(|k| contains_token_run(&toks, k))
            .count();
        let keyword = hits as f64 / self.keywords.len().max(1) as f64;
        let agenda = if self.cues.iter().any(|c| contains_token_run(&toks, c)) {
            1.0
        } else {
            0.0
        };
        let slack = self.cfg.boundary_slack;
        let after_pause = self
            .pauses
            .iter()
            .any(|p| p.end <= range.start && range.start <= p.end + slack);
        let before_pause = self
            .pauses
            .iter()
            .any(|p| range.end <= p.start && p.start <= range.end + slack)
            || range.end + slack >= self.transcript_end;
        let boundary = 0.5 * f64::from(u8::from(after_pause)) + 0.5 * f64::from(u8::from(before_pause));
        let combined = self.cfg.keyword_weight * keyword
            + self.cfg.agenda_weight * agenda
            + self.cfg.boundary_weight * boundary;
        SegmentScore {
            keyword,
            agenda,
            boundary,
            combined: combined.clamp(0.0, 1.0),
        }
    }

    pub fn score(&self, seg: &TranscriptSegment) -> SegmentScore {
        self.score_range(seg.range, &seg.text)
    }
}

/// Scores one segment against a persona; builds a [`Scorer`] each call, so
/// prefer [`Scorer`] when scoring many segments.
pub fn score_segment(
    seg: &TranscriptSegment,
    p: &Persona,
    t: &Transcript,
    pauses: &[TimeRange],
) -> SegmentScore {
    Scorer::new(t, p, pauses, &ScoringConfig::default()).score(seg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcribe::range_secs;

    fn persona(keywords: &[&str]) -> Persona {
        Persona::new("trainer", Timestamp::from_secs(180)).with_keywords(keywords.iter().copied())
    }

    #[test]
    fn all_signals_present() {
        let seg = TranscriptSegment::new(1, range_secs(5.0, 10.0), "covering the agenda today");
        let other = TranscriptSegment::new(2, range_secs(11.0, 20.0), "something else.");
        let t = Transcript::new("t", Timestamp::from_secs(30), vec![seg.clone(), other]);
        let pauses = [range_secs(0.0, 5.0), range_secs(10.0, 11.0)];
        let s = score_segment(&seg, &persona(&["agenda"]), &t, &pauses);
        assert_eq!((s.keyword, s.agenda, s.boundary), (1.0, 1.0, 1.0));
        assert!((s.combined - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_matches_mid_speech() {
        let seg = TranscriptSegment::new(1, range_secs(5.0, 10.0), "and so we are here");
        let t = Transcript::new(
            "t",
            Timestamp::from_secs(30),
            vec![
                TranscriptSegment::new(0, range_secs(0.0, 5.0), "alpha beta gamma."),
                seg.clone(),
                TranscriptSegment::new(2, range_secs(10.0, 20.0), "delta epsilon."),
            ],
        );
        let s = score_segment(&seg, &persona(&[]), &t, &[]);
        assert_eq!(s.combined, 0.0);
    }

    #[test]
    fn wrap_up_aligned_at_end_only() {
        let seg = TranscriptSegment::new(3, range_secs(40.0, 44.0), "to wrap up");
        let t = Transcript::new(
            "t",
            Timestamp::from_secs(60),
            vec![TranscriptSegment::new(2, range_secs(30.0, 39.9), "x."), seg.clone(), TranscriptSegment::new(4, range_secs(45.0, 50.0), "y.")],
        );
        let pauses = [range_secs(44.0, 45.0), range_secs(50.0, 60.0)];
        let s = score_segment(&seg, &persona(&["zzz"]), &t, &pauses);
        assert_eq!((s.agenda, s.boundary), (1.0, 0.5));
        assert!((s.combined - 0.375).abs() < 1e-12);
    }

    #[test]
    fn tfidf_prefers_distinctive_terms() {
        let docs = ["insulin pump pump training", "insulin dosing schedule", "insulin pump costs"];
        let k = tfidf_keywords(&docs, 3);
        assert_eq!(k[0], "pump");
        assert!(!k.contains(&"insulin".to_string()));
        assert!(tfidf_keywords(&["only one doc"], 10).is_empty());
    }

    #[test]
    fn multiword_keywords_match_as_runs() {
        let t = Transcript::new("t", Timestamp::from_secs(10), vec![]);
        let s = Scorer::new(&t, &persona(&["blood pressure", "stent"]), &[], &ScoringConfig::default());
        let sc = s.score_range(range_secs(1.0, 2.0), "Blood pressure dropped");
        assert_eq!(sc.keyword, 0.5);
        let sc = s.score_range(range_secs(1.0, 2.0), "pressure of blood");
        assert_eq!(sc.keyword, 0.0);
    }
}
