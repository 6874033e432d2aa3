//! The click-propagation baseline: a BM25-smoothed query–document click
//! graph, iterative representation propagation, query clustering and
//! most-frequent-query expansion.
//!
//! Edge weights are `C = α·BM25(q, d) + 1` on click edges and 0 where no
//! click exists; query and document rows are renormalized to unit L2
//! after every propagation step, queries first, then documents against
//! the refreshed query rows.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collect::ClickRecord;
use crate::config::ClickGraphConfig;
use crate::embedding::dot;
use crate::jsonl;
use crate::textcore::{bm25_score, tokenize, BM25Params, CorpusStats, TokenSeq};
use crate::{Error, Result};

/// Smoothed edge weight: present edges carry `alpha · bm25 + 1`.
pub fn edge_weight(alpha: f64, bm25: f64) -> f64 {
    alpha * bm25 + 1.0
}

/// The sparse bipartite click graph.
#[derive(Debug, Clone)]
pub struct ClickGraph {
    pub queries: Vec<String>,
    pub docs: Vec<String>,
    /// Per-query (doc index, weight) edges.
    edges_by_query: Vec<Vec<(u32, f64)>>,
    /// Per-doc (query index, weight) edges (transpose).
    edges_by_doc: Vec<Vec<(u32, f64)>>,
    /// Click counts per query inside the analysis window.
    pub query_freq: HashMap<String, u64>,
}

impl ClickGraph {
    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn weight(&self, query_idx: usize, doc_idx: usize) -> f64 {
        self.edges_by_query[query_idx]
            .iter()
            .find(|(d, _)| *d as usize == doc_idx)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }

    #[cfg(test)]
    pub(crate) fn scale_weights(&mut self, factor: f64) {
        for edges in self
            .edges_by_query
            .iter_mut()
            .chain(self.edges_by_doc.iter_mut())
        {
            for (_, w) in edges.iter_mut() {
                *w *= factor;
            }
        }
    }
}

/// Builds the adjacency from a click log and the clicked documents'
/// texts. Clicks older than the trailing `window_days` (relative to the
/// newest click) are dropped; repeated clicks on one pair do not stack
/// weight unless `count_multiplicity` is set, in which case the edge
/// weight is multiplied by the click count.
pub fn build_adjacency(
    clicklog: &[ClickRecord],
    doc_texts: &HashMap<String, String>,
    config: &ClickGraphConfig,
    bm25: &BM25Params,
) -> Result<ClickGraph> {
    let mut graph = ClickGraph {
        queries: Vec::new(),
        docs: Vec::new(),
        edges_by_query: Vec::new(),
        edges_by_doc: Vec::new(),
        query_freq: HashMap::new(),
    };
    if clicklog.is_empty() {
        return Ok(graph);
    }
    let max_ts = clicklog.iter().map(|c| c.ts).max().unwrap();
    let cutoff = max_ts - config.window_days * 86_400;
    let windowed: Vec<&ClickRecord> = clicklog.iter().filter(|c| c.ts >= cutoff).collect();

    // Corpus stats over the distinct clicked docs that have text.
    let mut seen_docs = HashSet::new();
    let mut doc_seqs: Vec<TokenSeq> = Vec::new();
    for c in &windowed {
        if seen_docs.insert(c.doc_id.as_str()) {
            if let Some(text) = doc_texts.get(&c.doc_id) {
                doc_seqs.push(tokenize(text));
            }
        }
    }
    let stats = CorpusStats::build(doc_seqs.iter());

    let mut query_index: HashMap<String, usize> = HashMap::new();
    let mut doc_index: HashMap<String, usize> = HashMap::new();
    let mut pair_count: HashMap<(usize, usize), u64> = HashMap::new();
    let mut pair_order: Vec<(usize, usize)> = Vec::new();
    for c in &windowed {
        *graph.query_freq.entry(c.query.clone()).or_insert(0) += 1;
        let qi = match query_index.get(&c.query) {
            Some(&i) => i,
            None => {
                graph.queries.push(c.query.clone());
                query_index.insert(c.query.clone(), graph.queries.len() - 1);
                graph.queries.len() - 1
            }
        };
        let di = match doc_index.get(&c.doc_id) {
            Some(&i) => i,
            None => {
                graph.docs.push(c.doc_id.clone());
                doc_index.insert(c.doc_id.clone(), graph.docs.len() - 1);
                graph.docs.len() - 1
            }
        };
        let entry = pair_count.entry((qi, di)).or_insert(0);
        if *entry == 0 {
            pair_order.push((qi, di));
        }
        *entry += 1;
    }

    graph.edges_by_query = vec![Vec::new(); graph.queries.len()];
    graph.edges_by_doc = vec![Vec::new(); graph.docs.len()];
    for (qi, di) in pair_order {
        let q_tokens = tokenize(&graph.queries[qi]);
        let score = match doc_texts.get(&graph.docs[di]) {
            Some(text) if stats.doc_count > 0 => {
                bm25_score(&q_tokens, &tokenize(text), &stats, bm25)?
            }
            _ => 0.0,
        };
        let mut w = edge_weight(config.alpha, score);
        if config.count_multiplicity {
            w *= pair_count[&(qi, di)] as f64;
        }
        graph.edges_by_query[qi].push((di as u32, w));
        graph.edges_by_doc[di].push((qi as u32, w));
    }
    Ok(graph)
}

/// Query and document representations after `iteration` rounds. Rows
/// with no edges stay zero and are flagged.
#[derive(Debug, Clone)]
pub struct PropagationState {
    /// |Q| rows of dimension |D|.
    pub q_rows: Vec<Vec<f64>>,
    /// |D| rows of dimension |D|.
    pub d_rows: Vec<Vec<f64>>,
    pub iteration: usize,
    pub q_isolated: Vec<bool>,
    pub d_isolated: Vec<bool>,
}

fn normalize_in_place(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if norm <= 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

/// Runs `n_iters` rounds of propagation. Documents start as one-hot
/// rows, so the first query update is exactly each query's normalized
/// click-weight profile.
pub fn propagate(graph: &ClickGraph, n_iters: usize) -> Result<PropagationState> {
    if n_iters == 0 {
        return Err(Error::invalid("propagation needs at least one iteration"));
    }
    let nq = graph.n_queries();
    let nd = graph.n_docs();
    let mut d_rows: Vec<Vec<f64>> = (0..nd)
        .map(|j| {
            let mut row = vec![0.0; nd];
            row[j] = 1.0;
            row
        })
        .collect();
    let mut q_rows: Vec<Vec<f64>> = vec![vec![0.0; nd]; nq];
    let q_isolated: Vec<bool> = graph.edges_by_query.iter().map(|e| e.is_empty()).collect();
    let d_isolated: Vec<bool> = graph.edges_by_doc.iter().map(|e| e.is_empty()).collect();

    for _ in 0..n_iters {
        // Query phase completes before the document phase reads it.
        for (i, row) in q_rows.iter_mut().enumerate() {
            row.iter_mut().for_each(|x| *x = 0.0);
            for &(j, w) in &graph.edges_by_query[i] {
                for (acc, dv) in row.iter_mut().zip(&d_rows[j as usize]) {
                    *acc += w * dv;
                }
            }
            normalize_in_place(row);
        }
        let mut next_d: Vec<Vec<f64>> = vec![vec![0.0; nd]; nd];
        for (j, row) in next_d.iter_mut().enumerate() {
            for &(i, w) in &graph.edges_by_doc[j] {
                for (acc, qv) in row.iter_mut().zip(&q_rows[i as usize]) {
                    *acc += w * qv;
                }
            }
            normalize_in_place(row);
        }
        d_rows = next_d;
    }
    Ok(PropagationState { q_rows, d_rows, iteration: n_iters, q_isolated, d_isolated })
}

/// A query cluster with its most-frequent member as representative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryCluster {
    pub representative: String,
    pub members: Vec<String>,
}

/// Single-link components over cosine ≥ `theta` among non-isolated query
/// rows. The representative is the member with maximal click frequency;
/// ties go to the lexicographically smaller query. Member lists are
/// sorted for stable output.
pub fn cluster_queries(
    state: &PropagationState,
    graph: &ClickGraph,
    theta: f64,
) -> Vec<QueryCluster> {
    let nq = graph.n_queries();
    let live: Vec<usize> = (0..nq).filter(|&i| !state.q_isolated[i]).collect();
    let mut parent: Vec<usize> = (0..nq).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for (a_pos, &i) in live.iter().enumerate() {
        for &j in live.iter().skip(a_pos + 1) {
            if dot(&state.q_rows[i], &state.q_rows[j]) >= theta {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut members_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for &i in &live {
        let root = find(&mut parent, i);
        members_of.entry(root).or_default().push(i);
    }
    let mut roots: Vec<usize> = members_of.keys().copied().collect();
    roots.sort();
    roots
        .into_iter()
        .map(|root| {
            let mut members: Vec<String> = members_of[&root]
                .iter()
                .map(|&i| graph.queries[i].clone())
                .collect();
            members.sort();
            let representative = members
                .iter()
                .max_by(|a, b| {
                    let fa = graph.query_freq.get(*a).copied().unwrap_or(0);
                    let fb = graph.query_freq.get(*b).copied().unwrap_or(0);
                    fa.cmp(&fb).then_with(|| b.cmp(a)) // tie → smaller string
                })
                .expect("non-empty cluster")
                .clone();
            QueryCluster { representative, members }
        })
        .collect()
}

/// The cluster representative standing in as `query`'s expansion; none
/// when the query is unclustered or is itself the representative.
pub fn baseline_expansion(query: &str, clusters: &[QueryCluster]) -> Option<String> {
    let cluster = clusters
        .iter()
        .find(|c| c.members.iter().any(|m| m == query))?;
    if cluster.representative == query {
        None
    } else {
        Some(cluster.representative.clone())
    }
}

pub fn save_clusters(path: &Path, clusters: &[QueryCluster]) -> Result<()> {
    jsonl::write_jsonl(path, clusters)
}

pub fn load_clusters(path: &Path) -> Result<Vec<QueryCluster>> {
    jsonl::read_jsonl(path, &["representative", "members"])
}
