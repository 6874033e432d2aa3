//! Retrieval quality metrics: Recall@K, MRR@K and pairwise AUC.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// One query's scored ranking plus its relevant-id labels.
#[derive(Debug, Clone)]
pub struct LabeledRanking {
    /// (candidate id, score), already ranked best-first.
    pub ranked: Vec<(String, f64)>,
    pub relevant: HashSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalMetricsReport {
    pub recall_at_k: f64,
    pub mrr_at_k: f64,
    pub auc: f64,
    pub k: usize,
    /// Queries excluded for having no usable labels.
    pub skipped_queries: usize,
}

/// Averages per-query metrics.
///
/// - Recall@K: |relevant ∩ top-k| / |relevant|;
/// - MRR@K: 1/rank of the first relevant hit within the top-k, else 0;
/// - AUC: probability a relevant candidate outscores an irrelevant one,
///   ties counting one half; queries lacking either class are skipped for
///   the AUC average.
///
/// Queries with no relevance labels at all are excluded and counted.
pub fn retrieval_metrics(rankings: &[LabeledRanking], k: usize) -> RetrievalMetricsReport {
    let mut recall_sum = 0.0;
    let mut mrr_sum = 0.0;
    let mut labeled = 0usize;
    let mut auc_sum = 0.0;
    let mut auc_queries = 0usize;
    let mut skipped = 0usize;

    for r in rankings {
        if r.relevant.is_empty() {
            skipped += 1;
            continue;
        }
        labeled += 1;
        let topk = &r.ranked[..k.min(r.ranked.len())];
        let hits = topk
            .iter()
            .filter(|(id, _)| r.relevant.contains(id))
            .count();
        recall_sum += hits as f64 / r.relevant.len() as f64;
        if let Some(rank) = topk
            .iter()
            .position(|(id, _)| r.relevant.contains(id))
        {
            mrr_sum += 1.0 / (rank + 1) as f64;
        }

        let rel_scores: Vec<f64> = r
            .ranked
            .iter()
            .filter(|(id, _)| r.relevant.contains(id))
            .map(|(_, s)| *s)
            .collect();
        let irr_scores: Vec<f64> = r
            .ranked
            .iter()
            .filter(|(id, _)| !r.relevant.contains(id))
            .map(|(_, s)| *s)
            .collect();
        if !rel_scores.is_empty() && !irr_scores.is_empty() {
            let mut wins = 0.0;
            for a in &rel_scores {
                for b in &irr_scores {
                    if a > b {
                        wins += 1.0;
                    } else if a == b {
                        wins += 0.5;
                    }
                }
            }
            auc_sum += wins / (rel_scores.len() * irr_scores.len()) as f64;
            auc_queries += 1;
        }
    }

    RetrievalMetricsReport {
        recall_at_k: if labeled > 0 { recall_sum / labeled as f64 } else { 0.0 },
        mrr_at_k: if labeled > 0 { mrr_sum / labeled as f64 } else { 0.0 },
        auc: if auc_queries > 0 { auc_sum / auc_queries as f64 } else { 0.0 },
        k,
        skipped_queries: skipped,
    }
}
