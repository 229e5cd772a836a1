//! Deterministic selection: score merged transcript segments, then pick the
//! best-scoring set that fits the budget (0/1 knapsack).
//!
//! Durations are quantized to [`DURATION_QUANTUM`] (rounded up) and scores to
//! integer millionths so that optimality and ties are decided exactly. Among
//! equally scored sets the one that includes earlier-starting candidates
//! wins. After the knapsack, the beginning and end of the video are enforced:
//! if a candidate exists in the first (last) tenth of the timeline and none is
//! chosen, the best one there is swapped in by evicting the lowest-scored
//! chosen candidates that lie in neither tenth.

use serde::{Deserialize, Serialize};

use super::sanitize::sanitize_cutlist;
use super::score::{Scorer, ScoringConfig, SegmentScore};
use super::SelectError;
use crate::cutlist::{CutList, CutSegment, ValidatedCutList};
use crate::persona::Persona;
use crate::timestamp::{TimeRange, Timestamp};
use crate::transcribe::FragmentConfig;
use crate::transcript::{merge_fragments, Transcript};

/// Knapsack duration resolution.
pub const DURATION_QUANTUM: Timestamp = Timestamp::from_centis(25);
/// Scores are compared as `round(combined * SCORE_SCALE)`.
pub const SCORE_SCALE: f64 = 1_000_000.0;
/// Above this many candidates the exact program gives way to a greedy pass.
pub const DP_CANDIDATE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub range: TimeRange,
    pub text: String,
    pub score: SegmentScore,
}

impl Candidate {
    /// Duration in quanta, rounded up.
    pub fn weight(&self) -> u64 {
        self.range.duration().centis().div_ceil(DURATION_QUANTUM.centis())
    }

    pub fn value(&self) -> u64 {
        (self.score.combined * SCORE_SCALE).round() as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub scoring: ScoringConfig,
    pub fragments: FragmentConfig,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub candidates: Vec<Candidate>,
    /// Indices into `candidates`, ascending.
    pub chosen: Vec<usize>,
    pub keywords: Vec<String>,
    pub cutlist: ValidatedCutList,
}

fn in_first_decile(r: &TimeRange, source: Timestamp) -> bool {
    r.start.centis() * 10 < source.centis()
}

fn in_last_decile(r: &TimeRange, source: Timestamp) -> bool {
    r.end.centis() * 10 > source.centis() * 9
}

/// Exact 0/1 knapsack over candidates sorted by start. `best[i][w]` is the
/// best value using candidates `i..` within `w` quanta; reconstruction takes
/// a candidate whenever an optimal completion including it exists, which
/// yields the lexicographically earliest optimal set.
fn knapsack_exact(weights: &[u64], values: &[u64], capacity: u64) -> Vec<bool> {
    let n = weights.len();
    let cap = capacity as usize;
    let width = cap + 1;
    let mut best = vec![0u64; (n + 1) * width];
    for i in (0..n).rev() {
        let (w_i, v_i) = (weights[i] as usize, values[i]);
        for w in 0..=cap {
            let skip = best[(i + 1) * width + w];
            let take = if w_i <= w {
                v_i + best[(i + 1) * width + w - w_i]
            } else {
                0
            };
            best[i * width + w] = if w_i <= w { skip.max(take) } else { skip };
        }
    }
    let mut chosen = vec![false; n];
    let mut w = cap;
    for i in 0..n {
        let w_i = weights[i] as usize;
        if w_i <= w && values[i] + best[(i + 1) * width + w - w_i] == best[i * width + w] {
            chosen[i] = true;
            w -= w_i;
        }
    }
    chosen
}

fn knapsack_greedy(weights: &[u64], values: &[u64], capacity: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // density v/w compared exactly as v_a * w_b vs v_b * w_a
    order.sort_by(|&a, &b| {
        let lhs = u128::from(values[b]) * u128::from(weights[a].max(1));
        let rhs = u128::from(values[a]) * u128::from(weights[b].max(1));
        lhs.cmp(&rhs).then(a.cmp(&b))
    });
    let mut chosen = vec![false; weights.len()];
    let mut used = 0;
    for i in order {
        if used + weights[i] <= capacity {
            used += weights[i];
            chosen[i] = true;
        }
    }
    chosen
}

/// Picks candidate indices for the given budget; see the module docs.
pub fn choose_candidates(
    candidates: &[Candidate],
    budget: Timestamp,
    source_duration: Timestamp,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| (candidates[i].range.start, candidates[i].range.end, i));
    let weights: Vec<u64> = order.iter().map(|&i| candidates[i].weight()).collect();
    let values: Vec<u64> = order.iter().map(|&i| candidates[i].value()).collect();
    let capacity = budget.centis() / DURATION_QUANTUM.centis();

    let mut chosen = if order.len() <= DP_CANDIDATE_LIMIT {
        knapsack_exact(&weights, &values, capacity)
    } else {
        knapsack_greedy(&weights, &values, capacity)
    };

    let first: Vec<bool> = order
        .iter()
        .map(|&i| in_first_decile(&candidates[i].range, source_duration))
        .collect();
    let last: Vec<bool> = order
        .iter()
        .map(|&i| in_last_decile(&candidates[i].range, source_duration))
        .collect();
    for zone in [&first, &last] {
        enforce_zone(&mut chosen, zone, &first, &last, &weights, &values, capacity);
    }

    let mut out: Vec<usize> = order
        .iter()
        .zip(&chosen)
        .filter(|(_, &c)| c)
        .map(|(&i, _)| i)
        .collect();
    out.sort_unstable();
    out
}

fn enforce_zone(
    chosen: &mut [bool],
    zone: &[bool],
    first: &[bool],
    last: &[bool],
    weights: &[u64],
    values: &[u64],
    capacity: u64,
) {
    let n = chosen.len();
    if !zone.iter().any(|&z| z) || (0..n).any(|i| zone[i] && chosen[i]) {
        return;
    }
    // highest value in the zone, earliest on ties
    let Some(pick) = (0..n)
        .filter(|&i| zone[i])
        .max_by(|&a, &b| values[a].cmp(&values[b]).then(b.cmp(&a)))
    else {
        return;
    };
    if weights[pick] > capacity {
        return;
    }
    let mut trial = chosen.to_vec();
    trial[pick] = true;
    let used = |t: &[bool]| -> u64 { (0..n).filter(|&i| t[i]).map(|i| weights[i]).sum() };
    while used(&trial) > capacity {
        // lowest value outside both zones, latest on ties
        let victim = (0..n)
            .filter(|&i| trial[i] && !first[i] && !last[i])
            .min_by(|&a, &b| values[a].cmp(&values[b]).then(b.cmp(&a)));
        match victim {
            Some(v) => trial[v] = false,
            None => return,
        }
    }
    chosen.copy_from_slice(&trial);
}

/// Scores merged transcript segments for the persona and selects a cut-list
/// within `p.max_duration`.
pub fn heuristic_select(
    t: &Transcript,
    p: &Persona,
    pauses: &[TimeRange],
    cfg: &HeuristicConfig,
) -> Result<Selection, SelectError> {
    if t.is_empty() {
        return Err(SelectError::PreconditionViolated(
            "heuristic selection needs a non-empty transcript".into(),
        ));
    }
    let merged = merge_fragments(t, cfg.fragments.gap_threshold, cfg.fragments.max_merged_duration);
    let scorer = Scorer::new(&merged, p, pauses, &cfg.scoring);
    let candidates: Vec<Candidate> = merged
        .segments
        .iter()
        .map(|s| Candidate {
            range: s.range,
            text: s.text.clone(),
            score: scorer.score(s),
        })
        .collect();
    let chosen = choose_candidates(&candidates, p.max_duration, t.source_duration);
    if chosen.is_empty() {
        return Err(SelectError::EmptySelection);
    }
    let segments = chosen
        .iter()
        .map(|&i| {
            let c = &candidates[i];
            CutSegment::new(c.range, c.text.clone())
                .with_score(c.score.combined)
                .with_reason(format!(
                    "keyword {:.2}, agenda {}, boundary {:.2}",
                    c.score.keyword, c.score.agenda, c.score.boundary
                ))
        })
        .collect();
    let raw = CutList::new("", p.id(), segments);
    let cutlist = sanitize_cutlist(&raw, t.source_duration, p)?;
    Ok(Selection {
        candidates,
        chosen,
        keywords: scorer.keywords(),
        cutlist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcribe::range_secs;

    fn cand(a: f64, b: f64, score: f64) -> Candidate {
        Candidate {
            range: range_secs(a, b),
            text: format!("{a}"),
            score: SegmentScore {
                keyword: 0.0,
                agenda: 0.0,
                boundary: 0.0,
                combined: score,
            },
        }
    }

    #[test]
    fn picks_best_pair_within_budget() {
        // mid-timeline so the decile rule stays out of the way
        let c = [cand(300.0, 310.0, 0.9), cand(400.0, 410.0, 0.8), cand(500.0, 510.0, 0.1)];
        assert_eq!(choose_candidates(&c, Timestamp::from_secs(20), Timestamp::from_secs(1000)), [0, 1]);
    }

    #[test]
    fn generous_budget_takes_everything() {
        let c = [cand(0.0, 10.0, 0.2), cand(50.0, 60.0, 0.0), cand(90.0, 100.0, 0.4)];
        assert_eq!(choose_candidates(&c, Timestamp::from_secs(30), Timestamp::from_secs(100)), [0, 1, 2]);
    }

    #[test]
    fn last_decile_is_swapped_in() {
        let c = [
            cand(200.0, 220.0, 0.9),
            cand(400.0, 420.0, 0.8),
            cand(500.0, 520.0, 0.3),
            cand(950.0, 970.0, 0.2),
        ];
        // plain knapsack would take 0 and 1; the rule evicts the lowest
        // non-decile pick (1) for the end candidate
        let got = choose_candidates(&c, Timestamp::from_secs(40), Timestamp::from_secs(1000));
        assert_eq!(got, [0, 3]);
    }

    #[test]
    fn ties_prefer_earlier_start() {
        let c = [cand(300.0, 310.0, 0.5), cand(400.0, 410.0, 0.5), cand(500.0, 510.0, 0.5)];
        assert_eq!(choose_candidates(&c, Timestamp::from_secs(10), Timestamp::from_secs(1000)), [0]);
    }

    #[test]
    fn weights_round_up_to_quantum() {
        assert_eq!(cand(0.0, 10.01, 0.0).weight(), 41);
        assert_eq!(cand(0.0, 10.0, 0.0).weight(), 40);
        assert_eq!(cand(0.0, 0.01, 0.0).weight(), 1);
    }

    #[test]
    fn greedy_path_above_limit() {
        let c: Vec<Candidate> = (0..100)
            .map(|i| cand(i as f64 * 10.0, i as f64 * 10.0 + 5.0, (i % 7) as f64 / 10.0))
            .collect();
        let got = choose_candidates(&c, Timestamp::from_secs(60), Timestamp::from_secs(1000));
        let used: u64 = got.iter().map(|&i| c[i].weight()).sum();
        assert!(used <= 240);
        assert!(got.iter().any(|&i| c[i].range.start.centis() < 10_000));
        assert!(got.iter().any(|&i| c[i].range.end.centis() > 90_000));
    }

    #[test]
    fn empty_transcript_rejected() {
        let t = Transcript::new("t", Timestamp::from_secs(10), vec![]);
        assert!(matches!(
            heuristic_select(&t, &Persona::default(), &[], &HeuristicConfig::default()),
            Err(SelectError::PreconditionViolated(_))
        ));
    }
}
