use super::SelectError;
use crate::cutlist::{validate_cutlist, CutList, CutSegment, ValidatedCutList};
use crate::persona::Persona;
use crate::timestamp::{TimeRange, Timestamp};

/// Segments closer than this are merged.
pub const MERGE_GAP: Timestamp = Timestamp::from_centis(25);
/// Shortest segment kept; two half-second fades fit.
pub const MIN_SEGMENT: Timestamp = Timestamp::from_secs(1);
/// Allowed overshoot of the persona budget, in percent.
pub const BUDGET_TOLERANCE: u64 = 10;

/// Segment plus its playback rank; merging keeps the smaller rank.
#[derive(Debug, Clone)]
struct Ranked {
    seg: CutSegment,
    rank: usize,
}

fn merge_close(items: Vec<Ranked>) -> Vec<Ranked> {
    let mut out: Vec<Ranked> = Vec::with_capacity(items.len());
    for item in items {
        if let Some(last) = out.last_mut() {
            let gap = item.seg.range.start.saturating_sub(last.seg.range.end);
            if item.seg.range.start <= last.seg.range.end || gap < MERGE_GAP {
                let a = &mut last.seg;
                let b = item.seg;
                a.range.end = a.range.end.max(b.range.end);
                if !b.text.is_empty() && !a.text.contains(b.text.as_str()) {
                    if !a.text.is_empty() {
                        a.text.push(' ');
                    }
                    a.text.push_str(&b.text);
                }
                a.reason = match (a.reason.take(), b.reason) {
                    (Some(x), Some(y)) if x != y => Some(format!("{x}; {y}")),
                    (x, y) => x.or(y),
                };
                a.score = match (a.score, b.score) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                };
                last.rank = last.rank.min(item.rank);
                continue;
            }
        }
        out.push(item);
    }
    out
}

/// Grows a short range to [`MIN_SEGMENT`], centred where the source allows.
fn extend_to_min(r: TimeRange, source: Timestamp) -> Option<TimeRange> {
    let d = r.duration();
    if d >= MIN_SEGMENT {
        return Some(r);
    }
    if source < MIN_SEGMENT {
        return None;
    }
    let need = (MIN_SEGMENT - d).centis();
    let mut left = need / 2;
    let mut right = need - left;
    if left > r.start.centis() {
        left = r.start.centis();
        right = need - left;
    }
    let room_right = (source - r.end).centis();
    if right > room_right {
        right = room_right;
        left = need - right;
    }
    if left > r.start.centis() {
        return None;
    }
    Some(TimeRange::unchecked(
        Timestamp::from_centis(r.start.centis() - left),
        Timestamp::from_centis(r.end.centis() + right),
    ))
}

/// Repairs a raw selection into a valid cut-list within budget.
///
/// Drops empty ranges, clamps into the source, sorts, merges overlapping or
/// nearly adjacent segments, stretches sub-second segments to one second,
/// then trims lowest-scored segments (latest first on ties) while the total
/// exceeds the budget by more than the tolerance.
pub fn sanitize_cutlist(
    c: &CutList,
    source_duration: Timestamp,
    p: &Persona,
) -> Result<ValidatedCutList, SelectError> {
    let order = c.play_indices();
    let mut rank_of = vec![0; c.segments.len()];
    for (rank, &i) in order.iter().enumerate() {
        if let Some(slot) = rank_of.get_mut(i) {
            *slot = rank;
        }
    }
    let mut items: Vec<Ranked> = c
        .segments
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let mut seg = s.clone();
            seg.range.end = seg.range.end.min(source_duration);
            if !seg.range.is_valid() {
                return None;
            }
            seg.score = seg.score.filter(|v| v.is_finite()).map(|v| v.clamp(0.0, 1.0));
            seg.text = seg.text.trim().to_string();
            Some(Ranked { seg, rank: rank_of[i] })
        })
        .collect();
    items.sort_by_key(|r| (r.seg.range.start, r.seg.range.end, r.rank));
    let mut items = merge_close(items);
    items.retain_mut(|r| match extend_to_min(r.seg.range, source_duration) {
        Some(range) => {
            r.seg.range = range;
            true
        }
        None => false,
    });
    let mut items = merge_close(items);

    let limit = p.max_duration.centis() * (100 + BUDGET_TOLERANCE);
    let total = |items: &[Ranked]| -> u64 { items.iter().map(|r| r.seg.duration().centis()).sum() };
    while !items.is_empty() && total(&items) * 100 > limit {
        let victim = items
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let sa = a.seg.score.unwrap_or(0.0);
                let sb = b.seg.score.unwrap_or(0.0);
                sa.total_cmp(&sb).then(b.seg.range.start.cmp(&a.seg.range.start))
            })
            .map(|(i, _)| i)
            .expect("non-empty");
        items.remove(victim);
    }
    if items.is_empty() {
        return Err(SelectError::EmptySelection);
    }

    let mut by_rank: Vec<usize> = (0..items.len()).collect();
    by_rank.sort_by_key(|&i| (items[i].rank, i));
    let chronological = by_rank.iter().enumerate().all(|(k, &i)| k == i);
    let mut out = CutList::new(
        c.video_id.clone(),
        c.persona_id.clone(),
        items.into_iter().map(|r| r.seg).collect(),
    );
    out.voiceover_free = c.voiceover_free;
    if !chronological {
        out.play_order = Some(by_rank);
    }
    Ok(validate_cutlist(out, source_duration)?)
}
