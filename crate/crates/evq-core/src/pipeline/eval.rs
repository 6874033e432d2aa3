//! End-to-end evaluation: Recall@K of expanded retrieval against click
//! targets, and the event-discovery coverage timeline.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::collect::ClickRecord;
use crate::{Error, Result};

use super::corpus::{expanded_retrieval, DocCorpus};

/// Mean Recall@K per requested K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallReport {
    pub per_k: Vec<(usize, f64)>,
    pub queries_evaluated: usize,
    /// Queries with no clicked docs in the corpus.
    pub queries_skipped: usize,
}

/// For each query with clicked documents T, retrieves top-K with the
/// expander's expansion and scores `|I ∩ T| / |T|`, averaged over
/// queries. Queries whose clicks never touch the corpus are skipped and
/// counted.
pub fn eval_recall_at_k(
    clicklog: &[ClickRecord],
    expander: &dyn Fn(&str) -> Option<String>,
    corpus: &DocCorpus,
    k_list: &[usize],
) -> Result<RecallReport> {
    if k_list.is_empty() {
        return Err(Error::invalid("recall evaluation needs at least one K"));
    }
    let corpus_ids: HashSet<&str> = corpus.ids.iter().map(String::as_str).collect();
    let mut targets: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for c in clicklog {
        if !targets.contains_key(c.query.as_str()) {
            order.push(c.query.as_str());
        }
        let set = targets.entry(c.query.as_str()).or_default();
        if corpus_ids.contains(c.doc_id.as_str()) {
            set.insert(c.doc_id.as_str());
        }
    }

    let mut sums = vec![0.0; k_list.len()];
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for query in order {
        let t = &targets[query];
        if t.is_empty() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let expansion = expander(query).unwrap_or_default();
        for (slot, &k) in sums.iter_mut().zip(k_list) {
            let retrieved = expanded_retrieval(query, &expansion, corpus, k);
            let hit = retrieved
                .iter()
                .filter(|(id, _)| t.contains(id.as_str()))
                .count();
            *slot += hit as f64 / t.len() as f64;
        }
    }
    Ok(RecallReport {
        per_k: k_list
            .iter()
            .zip(&sums)
            .map(|(&k, &s)| (k, if evaluated > 0 { s / evaluated as f64 } else { 0.0 }))
            .collect(),
        queries_evaluated: evaluated,
        queries_skipped: skipped,
    })
}

/// Event-discovery coverage at fixed minute checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageTimeline {
    pub checkpoints_min: Vec<f64>,
    pub coverage: Vec<f64>,
}

/// Coverage at checkpoint m = fraction of truth events discovered within
/// m minutes of their first publish. Events never discovered count
/// toward no checkpoint.
pub fn eval_coverage_timeline(
    truth: &[(String, i64)],
    discoveries: &[(String, i64)],
    checkpoints_min: &[f64],
) -> Result<CoverageTimeline> {
    if truth.is_empty() {
        return Err(Error::invalid("coverage evaluation needs non-empty truth"));
    }
    let discovered: HashMap<&str, i64> = discoveries
        .iter()
        .map(|(id, ts)| (id.as_str(), *ts))
        .collect();
    let lags_min: Vec<Option<f64>> = truth
        .iter()
        .map(|(id, first_ts)| {
            discovered
                .get(id.as_str())
                .map(|d_ts| (d_ts - first_ts) as f64 / 60.0)
        })
        .collect();
    let coverage = checkpoints_min
        .iter()
        .map(|&m| {
            let covered = lags_min
                .iter()
                .filter(|lag| matches!(lag, Some(l) if *l <= m))
                .count();
            covered as f64 / truth.len() as f64
        })
        .collect();
    Ok(CoverageTimeline { checkpoints_min: checkpoints_min.to_vec(), coverage })
}
