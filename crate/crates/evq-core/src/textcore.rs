//! Deterministic text primitives and metrics used by every pipeline stage:
//! tokenization, Jaccard distance, Okapi BM25, TF-IDF, ROUGE-L and BLEU.
//!
//! All functions here are pure and safe to call concurrently.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An ordered sequence of lowercased unicode tokens.
///
/// Produced by [`tokenize`]; contains no empty tokens, and tokenizing the
/// rendered form (`join(" ")`) again yields the same sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence from pre-split tokens, dropping empty ones.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    /// Unique tokens as a set.
    pub fn token_set(&self) -> HashSet<&str> {
        self.0.iter().map(String::as_str).collect()
    }

    /// Token → occurrence count.
    pub fn counts(&self) -> HashMap<&str, u32> {
        let mut m = HashMap::new();
        for t in &self.0 {
            *m.entry(t.as_str()).or_insert(0) += 1;
        }
        m
    }

    /// Renders the sequence back to text with single spaces.
    pub fn render(&self) -> String {
        self.0.join(" ")
    }
}

impl std::ops::Index<usize> for TokenSeq {
    type Output = String;
    fn index(&self, i: usize) -> &String {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// True for characters that are emitted as single-character tokens:
/// CJK ideographs, kana and hangul. Fullwidth punctuation is not included
/// (it acts as a delimiter like its ASCII counterpart).
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF // CJK unified ideographs
        | 0xF900..=0xFAFF // CJK compatibility ideographs
        | 0x3040..=0x309F // hiragana
        | 0x30A0..=0x30FF // katakana
        | 0xAC00..=0xD7AF // hangul syllables
        | 0x20000..=0x2A6DF // CJK extension B
    )
}

/// Splits text into lowercased tokens.
///
/// Alphanumeric runs form one token each (lowercased); CJK characters are
/// emitted as single-character tokens; everything else is a delimiter.
/// The empty string tokenizes to the empty sequence.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if is_cjk(c) {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            tokens.push(c.to_string());
        } else if c.is_alphanumeric() {
            for lc in c.to_lowercase() {
                word.push(lc);
            }
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    TokenSeq(tokens)
}

/// Jaccard distance between the token sets of `a` and `b`, in [0, 1].
///
/// `1 − |A∩B| / |A∪B|`; both empty → 0.
pub fn jaccard_distance(a: &TokenSeq, b: &TokenSeq) -> f64 {
    let sa = a.token_set();
    let sb = b.token_set();
    if sa.is_empty() && sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    1.0 - inter / union
}

/// Corpus-level statistics backing BM25 and TF-IDF.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: u64,
    /// token → number of documents containing it
    pub doc_freq: HashMap<String, u64>,
    pub avg_doc_len: f64,
}

impl CorpusStats {
    /// Accumulates stats over a document collection.
    pub fn build<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut stats = CorpusStats::default();
        let mut total_len = 0u64;
        for doc in docs {
            stats.doc_count += 1;
            total_len += doc.len() as u64;
            let mut seen = HashSet::new();
            for t in doc {
                if seen.insert(t.as_str()) {
                    *stats.doc_freq.entry(t.clone()).or_insert(0) += 1;
                }
            }
        }
        if stats.doc_count > 0 {
            stats.avg_doc_len = total_len as f64 / stats.doc_count as f64;
        }
        stats
    }

    pub fn doc_freq_of(&self, token: &str) -> u64 {
        self.doc_freq.get(token).copied().unwrap_or(0)
    }

    /// BM25 idf with flooring: `ln((N − df + 0.5)/(df + 0.5) + 1)`.
    pub fn bm25_idf(&self, token: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.doc_freq_of(token) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Smoothed idf for TF-IDF: `ln((N + 1)/(df + 1)) + 1` (always > 0).
    pub fn smooth_idf(&self, token: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.doc_freq_of(token) as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }
}

/// Okapi BM25 parameters; defaults `k1 = 1.2`, `b = 0.75`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BM25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for BM25Params {
    fn default() -> Self {
        BM25Params { k1: 1.2, b: 0.75 }
    }
}

/// BM25 contribution of a document given precomputed term counts.
///
/// Query tokens are summed with multiplicity; terms absent from the
/// document contribute 0. Shared by [`bm25_score`] and corpus scorers so
/// there is exactly one formula implementation.
pub fn bm25_from_counts(
    query: &TokenSeq,
    doc_counts: &HashMap<&str, u32>,
    doc_len: usize,
    stats: &CorpusStats,
    params: &BM25Params,
) -> f64 {
    let norm = if stats.avg_doc_len > 0.0 {
        doc_len as f64 / stats.avg_doc_len
    } else {
        0.0
    };
    let denom_fixed = params.k1 * (1.0 - params.b + params.b * norm);
    let mut score = 0.0;
    for t in query {
        let tf = doc_counts.get(t.as_str()).copied().unwrap_or(0) as f64;
        if tf == 0.0 {
            continue;
        }
        score += stats.bm25_idf(t) * (tf * (params.k1 + 1.0)) / (tf + denom_fixed);
    }
    score
}

/// Okapi BM25 score of `doc` for `query` under `stats`.
///
/// Errors when `stats.doc_count == 0`.
pub fn bm25_score(
    query: &TokenSeq,
    doc: &TokenSeq,
    stats: &CorpusStats,
    params: &BM25Params,
) -> Result<f64> {
    if stats.doc_count == 0 {
        return Err(Error::invalid("bm25: corpus stats cover zero documents"));
    }
    Ok(bm25_from_counts(query, &doc.counts(), doc.len(), stats, params))
}

/// TF-IDF weight of `token` within `doc`: raw count times smoothed idf.
pub fn tfidf(token: &str, doc: &TokenSeq, stats: &CorpusStats) -> f64 {
    let tf = doc.iter().filter(|t| t.as_str() == token).count() as f64;
    tf * stats.smooth_idf(token)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    // Single-row DP; a is the candidate, b the reference.
    let mut row = vec![0usize; b.len() + 1];
    for ai in a {
        let mut prev_diag = 0;
        for (j, bj) in b.iter().enumerate() {
            let tmp = row[j + 1];
            row[j + 1] = if ai == bj {
                prev_diag + 1
            } else {
                row[j + 1].max(row[j])
            };
            prev_diag = tmp;
        }
    }
    row[b.len()]
}

/// ROUGE-L F1 between candidate and reference, in [0, 1].
///
/// `P = LCS/|cand|`, `R = LCS/|ref|`, `F = 2PR/(P+R)`; 0 when the LCS is
/// empty. Both inputs empty is defined as 1.0.
pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate.tokens(), reference.tokens()) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    2.0 * p * r / (p + r)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u32> {
    let mut m: HashMap<&[String], u32> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Sentence BLEU with brevity penalty, in [0, 1].
///
/// Geometric mean of modified n-gram precisions for n = 1..=`max_n`;
/// counts are add-one smoothed for n ≥ 2 so short event phrases do not
/// collapse to zero. `BP = exp(min(0, 1 − |ref|/|cand|))`. An empty
/// candidate scores 0.
pub fn bleu(candidate: &TokenSeq, reference: &TokenSeq, max_n: usize) -> f64 {
    assert!(max_n >= 1, "bleu: max_n must be >= 1");
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand_grams = ngram_counts(candidate.tokens(), n);
        let ref_grams = ngram_counts(reference.tokens(), n);
        let total: u32 = cand_grams.values().sum();
        let matched: u32 = cand_grams
            .iter()
            .map(|(g, c)| (*c).min(ref_grams.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if n == 1 {
            if total == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / max_n as f64;
    }
    let bp = (1.0 - reference.len() as f64 / candidate.len() as f64).min(0.0);
    (bp + log_sum).exp()
}
