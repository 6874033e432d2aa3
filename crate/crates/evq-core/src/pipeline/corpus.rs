//! BM25 document retrieval for the end-to-end evaluation: a corpus with
//! precomputed term counts and the expanded-retrieval bypass (original
//! and expanded query retrieved separately, union re-scored by max).

use std::collections::HashMap;

use crate::textcore::{bm25_from_counts, tokenize, BM25Params, CorpusStats, TokenSeq};

/// A scored document collection (ids with token counts).
pub struct DocCorpus {
    pub ids: Vec<String>,
    token_counts: Vec<HashMap<String, u32>>,
    lens: Vec<usize>,
    pub stats: CorpusStats,
    params: BM25Params,
}

impl DocCorpus {
    pub fn build<'a, I>(docs: I, params: BM25Params) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut ids = Vec::new();
        let mut seqs: Vec<TokenSeq> = Vec::new();
        for (id, text) in docs {
            ids.push(id.to_string());
            seqs.push(tokenize(text));
        }
        let stats = CorpusStats::build(seqs.iter());
        let token_counts = seqs
            .iter()
            .map(|s| {
                let mut m: HashMap<String, u32> = HashMap::new();
                for t in s {
                    *m.entry(t.clone()).or_insert(0) += 1;
                }
                m
            })
            .collect();
        let lens = seqs.iter().map(|s| s.len()).collect();
        DocCorpus { ids, token_counts, lens, stats, params }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn score(&self, query: &TokenSeq, doc: usize) -> f64 {
        let counts: HashMap<&str, u32> = self.token_counts[doc]
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect();
        bm25_from_counts(query, &counts, self.lens[doc], &self.stats, &self.params)
    }

    /// All document scores for one query.
    pub fn bm25_all(&self, query: &TokenSeq) -> Vec<f64> {
        (0..self.len()).map(|i| self.score(query, i)).collect()
    }

    /// Plain BM25 top-k over the whole corpus; zero-score documents fill
    /// the tail in id order, so `k >= n` returns every document.
    pub fn topk(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        let q = tokenize(query);
        let scores = self.bm25_all(&q);
        rank_docs(&self.ids, &scores, k)
    }
}

fn rank_docs(ids: &[String], scores: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| (ids[i].clone(), scores[i]))
        .collect()
}

/// Retrieval with the expansion bypass: top-k for the original query and
/// the expansion separately, union, each doc scored by the max of its two
/// BM25 scores, re-sorted and truncated to k. An empty expansion is plain
/// retrieval.
pub fn expanded_retrieval(
    query: &str,
    expansion: &str,
    corpus: &DocCorpus,
    k: usize,
) -> Vec<(String, f64)> {
    if expansion.is_empty() {
        return corpus.topk(query, k);
    }
    let q_hits = corpus.topk(query, k);
    let e_hits = corpus.topk(expansion, k);
    let mut best: HashMap<&str, f64> = HashMap::new();
    for (id, s) in q_hits.iter().chain(e_hits.iter()) {
        let slot = best.entry(id.as_str()).or_insert(f64::NEG_INFINITY);
        if *s > *slot {
            *slot = *s;
        }
    }
    let mut union: Vec<(String, f64)> = best
        .into_iter()
        .map(|(id, s)| (id.to_string(), s))
        .collect();
    union.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    union.truncate(k);
    union
}
