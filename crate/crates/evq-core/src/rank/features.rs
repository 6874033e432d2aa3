//! The versioned feature registry and extraction over (query, event).
//!
//! Query-side signals the production stack would take from upstream
//! operators (domain class, NER, term weighting) are stood in for by
//! computable equivalents: token count, max TF-IDF and lexicon entity
//! overlap. Absent data defaults to 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::collect::TriggerLexicon;
use crate::embedding::{embed_score, EncoderModel};
use crate::reformulate::{extract_keyword, EventPhrase};
use crate::textcore::{
    bm25_score, jaccard_distance, tfidf, tokenize, BM25Params, CorpusStats,
};

/// Feature names in registry order. The order is part of the persisted
/// model contract; bump [`REGISTRY_VERSION`] when it changes.
pub const FEATURE_REGISTRY: [&str; 10] = [
    "cosine_sim",
    "bm25",
    "jaccard_sim",
    "entity_overlap",
    "keyword_in_event",
    "query_token_count",
    "query_max_tfidf",
    "query_freq",
    "event_recency_hours",
    "event_popularity",
];

pub const REGISTRY_VERSION: u32 = 1;

/// A dense vector in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_REGISTRY
            .iter()
            .position(|n| *n == name)
            .map(|i| self.0[i])
    }
}

/// Everything extraction needs, borrowed from the serving state.
pub struct RankContext<'a> {
    pub encoder: &'a EncoderModel,
    /// Stats over the event phrase corpus (BM25 + TF-IDF).
    pub corpus_stats: &'a CorpusStats,
    pub bm25: BM25Params,
    pub lexicon: &'a TriggerLexicon,
    /// event id → cluster size (popularity).
    pub cluster_sizes: &'a HashMap<String, usize>,
    /// query string → historical frequency.
    pub query_freq: &'a HashMap<String, u64>,
    pub now_ts: i64,
}

/// Builds the registry-ordered feature vector for one candidate.
pub fn extract_features(query: &str, event: &EventPhrase, ctx: &RankContext<'_>) -> FeatureVector {
    let q = tokenize(query);
    let e = tokenize(&event.text);

    let cosine_sim = embed_score(ctx.encoder, &q, &e);
    let bm25 = bm25_score(&q, &e, ctx.corpus_stats, &ctx.bm25).unwrap_or(0.0);
    let jaccard_sim = 1.0 - jaccard_distance(&q, &e);

    let q_entities: Vec<&str> = q
        .iter()
        .map(String::as_str)
        .filter(|t| ctx.lexicon.entity_lexicon.contains(*t))
        .collect();
    let shared = q_entities
        .iter()
        .filter(|t| e.iter().any(|et| et == *t))
        .count();
    let entity_overlap = shared as f64 / q_entities.len().max(1) as f64;

    let keyword_in_event = match extract_keyword(query, ctx.corpus_stats, ctx.lexicon) {
        Ok(kw) => e.iter().any(|t| *t == kw) as u8 as f64,
        Err(_) => 0.0,
    };

    let query_max_tfidf = q
        .iter()
        .map(|t| tfidf(t, &q, ctx.corpus_stats))
        .fold(0.0, f64::max);
    let query_freq = ctx.query_freq.get(query).copied().unwrap_or(0) as f64;
    let event_recency_hours = (ctx.now_ts - event.found_ts) as f64 / 3600.0;
    let event_popularity = ctx
        .cluster_sizes
        .get(&event.event_id)
        .copied()
        .unwrap_or(0) as f64;

    FeatureVector(vec![
        cosine_sim,
        bm25,
        jaccard_sim,
        entity_overlap,
        keyword_in_event,
        q.len() as f64,
        query_max_tfidf,
        query_freq,
        event_recency_hours,
        event_popularity,
    ])
}
