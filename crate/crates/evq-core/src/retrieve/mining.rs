//! Hard-negative mining: for each query, non-positive events whose cosine
//! falls inside a percentile band of that query's score distribution.

use std::collections::{HashMap, HashSet};

use crate::config::PairFilterConfig;
use crate::embedding::{dot, embed_score};
use crate::reformulate::EventPhrase;
use crate::textcore::{jaccard_distance, tokenize};
use crate::{Error, Result};

use super::{DualTower, EventIndex};

/// Percentile band (nearest-rank) selecting informative negatives.
#[derive(Debug, Clone, Copy)]
pub struct HardNegBand {
    pub lower_pct: f64,
    pub upper_pct: f64,
}

impl Default for HardNegBand {
    fn default() -> Self {
        HardNegBand { lower_pct: 60.0, upper_pct: 95.0 }
    }
}

impl HardNegBand {
    pub fn new(lower_pct: f64, upper_pct: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&lower_pct) || upper_pct > 100.0 || lower_pct >= upper_pct {
            return Err(Error::invalid(format!(
                "band requires 0 <= lower < upper <= 100, got ({lower_pct}, {upper_pct})"
            )));
        }
        Ok(HardNegBand { lower_pct, upper_pct })
    }
}

/// A query with its known positive event id.
#[derive(Debug, Clone)]
pub struct QueryPositive {
    pub query: String,
    pub positive_event_id: String,
}

/// Nearest-rank percentile bounds over an unsorted score sample:
/// `rank = max(1, ceil(p/100 · n))`, value at that rank after sorting.
pub fn nearest_rank_bounds(scores: &[f64], lower_pct: f64, upper_pct: f64) -> Option<(f64, f64)> {
    if scores.is_empty() {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = |p: f64| -> usize {
        let r = (p / 100.0 * n as f64).ceil() as usize;
        r.clamp(1, n)
    };
    Some((sorted[rank(lower_pct) - 1], sorted[rank(upper_pct) - 1]))
}

/// Mines per-query hard negatives from the index the tower built.
///
/// For each query: score every event, drop the query's positives, take
/// the nearest-rank band over the remaining scores, and drop candidates
/// that pass the `relevance_gates` (they are too likely to be unjudged
/// positives). Output lists are score-descending, aligned with `pairs`.
pub fn mine_hard_negatives(
    index: &EventIndex,
    tower: &DualTower,
    pairs: &[QueryPositive],
    band: HardNegBand,
    events: &[EventPhrase],
    relevance_gates: Option<&PairFilterConfig>,
) -> Vec<Vec<String>> {
    // All positives per query string, so repeated queries exclude every
    // event they are paired with anywhere.
    let mut positives_of: HashMap<&str, HashSet<&str>> = HashMap::new();
    for p in pairs {
        positives_of
            .entry(p.query.as_str())
            .or_default()
            .insert(p.positive_event_id.as_str());
    }
    let text_of: HashMap<&str, &str> = events
        .iter()
        .map(|e| (e.event_id.as_str(), e.text.as_str()))
        .collect();

    pairs
        .iter()
        .map(|p| {
            let positives = &positives_of[p.query.as_str()];
            let q_tokens = tokenize(&p.query);
            let q_vec = tower.encode_query(&q_tokens);
            let mut scored: Vec<(usize, f64)> = (0..index.len())
                .filter(|&i| !positives.contains(index.ids[i].as_str()))
                .map(|i| (i, dot(&q_vec, index.vector(i))))
                .collect();
            let Some((lo, hi)) =
                nearest_rank_bounds(
                    &scored.iter().map(|(_, s)| *s).collect::<Vec<f64>>(),
                    band.lower_pct,
                    band.upper_pct,
                )
            else {
                return Vec::new();
            };
            scored.retain(|&(i, s)| {
                if s < lo || s > hi {
                    return false;
                }
                match relevance_gates {
                    None => true,
                    Some(gates) => {
                        let text = text_of
                            .get(index.ids[i].as_str())
                            .copied()
                            .unwrap_or("");
                        let e_tokens = tokenize(text);
                        let relevant = jaccard_distance(&q_tokens, &e_tokens)
                            <= gates.max_jaccard
                            && embed_score(tower.query_tower(), &q_tokens, &e_tokens)
                                >= gates.min_embed;
                        !relevant
                    }
                }
            });
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then_with(|| index.ids[a.0].cmp(&index.ids[b.0]))
            });
            scored
                .into_iter()
                .map(|(i, _)| index.ids[i].clone())
                .collect()
        })
        .collect()
}
