//! Engine configuration: one document covering every tunable default.
//!
//! The CLI loads this from a JSON or TOML file; every field has a serde
//! default so partial configs are fine.

use serde::{Deserialize, Serialize};

use crate::textcore::BM25Params;

fn d_seed() -> u64 { 42 }

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub seed: Seed,
    pub bm25: BM25Params,
    pub coarse: CoarseConfig,
    pub fine: FineFilterConfig,
    pub encoder: EncoderConfig,
    pub encoder_train: TrainParams,
    pub reformulate: ReformulateConfig,
    pub pair_filter: PairFilterConfig,
    pub retriever: RetrieverConfig,
    pub gbdt: GbdtParams,
    pub clickgraph: ClickGraphConfig,
    pub cache: CacheConfig,
    pub serving: ServingConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Default for Seed {
    fn default() -> Self { Seed(d_seed()) }
}

/// Coarse filter rule thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CoarseConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub max_delimiters: usize,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        CoarseConfig { min_tokens: 3, max_tokens: 40, max_delimiters: 2 }
    }
}

/// Fine-filter featurizer and trainer settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FineFilterConfig {
    /// Hashed n-gram dimensionality (power of two).
    pub hash_dim: usize,
    pub threshold: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FineFilterConfig {
    fn default() -> Self {
        FineFilterConfig { hash_dim: 1 << 18, threshold: 0.5, lr: 0.5, epochs: 50, seed: d_seed() }
    }
}

/// Encoder shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    /// Minimum corpus frequency for a token to get its own row.
    pub min_token_freq: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { dim: 64, min_token_freq: 1 }
    }
}

/// Contrastive training hyper-parameters (shared by the reformulation
/// encoder and the dual towers).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { lr: 0.2, epochs: 20, batch_size: 32, tau: 0.05, seed: d_seed() }
    }
}

/// Reformulation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReformulateConfig {
    /// Keyword template; must contain exactly one `{kw}` placeholder.
    pub keyword_template: String,
    /// Tokens emitted after the first trigger in extractive outputs and
    /// trigger-window training targets.
    pub window: usize,
}

impl Default for ReformulateConfig {
    fn default() -> Self {
        ReformulateConfig { keyword_template: "keyword: {kw}".into(), window: 6 }
    }
}

/// Training-pair relevance gates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PairFilterConfig {
    pub max_jaccard: f64,
    pub min_embed: f64,
}

impl Default for PairFilterConfig {
    fn default() -> Self {
        PairFilterConfig { max_jaccard: 0.9, min_embed: 0.3 }
    }
}

/// Retrieval stack settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrieverConfig {
    /// Hard-negative percentile band (nearest-rank).
    pub band_lower_pct: f64,
    pub band_upper_pct: f64,
    /// Hard negatives mixed into each query's stage-2 denominator.
    pub max_hard: usize,
    /// IVF probes at search time.
    pub nprobe: usize,
    /// K-means iterations when building the IVF table.
    pub kmeans_iters: usize,
    /// Single-link cosine threshold for event clustering.
    pub cluster_theta: f64,
    pub stage1: TrainParams,
    pub stage2: TrainParams,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        RetrieverConfig {
            band_lower_pct: 60.0,
            band_upper_pct: 95.0,
            max_hard: 4,
            nprobe: 4,
            kmeans_iters: 10,
            cluster_theta: 0.85,
            stage1: TrainParams::default(),
            stage2: TrainParams { epochs: 10, ..TrainParams::default() },
        }
    }
}

/// Gradient boosting hyper-parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub lr: f64,
    pub min_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams { n_trees: 100, max_depth: 3, lr: 0.1, min_leaf: 2 }
    }
}

/// Click-propagation baseline settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickGraphConfig {
    pub alpha: f64,
    pub window_days: i64,
    pub n_iters: usize,
    pub theta: f64,
    /// When true, repeated clicks on the same edge multiply its weight.
    pub count_multiplicity: bool,
}

impl Default for ClickGraphConfig {
    fn default() -> Self {
        ClickGraphConfig {
            alpha: 0.2,
            window_days: 3,
            n_iters: 3,
            theta: 0.9,
            count_multiplicity: false,
        }
    }
}

/// Expansion cache policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    pub soft_ttl_secs: i64,
    pub hard_ttl_secs: i64,
    pub capacity: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { soft_ttl_secs: 300, hard_ttl_secs: 3600, capacity: 100_000 }
    }
}

/// Online serving settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ServingConfig {
    /// Retrieval pool handed to the ranker.
    pub candidate_pool: usize,
}

impl Default for ServingConfig {
    fn default() -> Self {
        ServingConfig { candidate_pool: 50 }
    }
}

/// Evaluation harness settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub recall_k_list: Vec<usize>,
    pub coverage_checkpoints_min: Vec<f64>,
    pub retrieval_k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            recall_k_list: vec![100, 150, 200],
            coverage_checkpoints_min: vec![1.0, 2.0, 5.0, 10.0, 15.0, 20.0],
            retrieval_k: 10,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = Config::default();
        assert_eq!(c.bm25.k1, 1.2);
        assert_eq!(c.bm25.b, 0.75);
        assert_eq!(c.coarse.min_tokens, 3);
        assert_eq!(c.coarse.max_tokens, 40);
        assert_eq!(c.coarse.max_delimiters, 2);
        assert_eq!(c.fine.threshold, 0.5);
        assert_eq!(c.encoder.dim, 64);
        assert_eq!(c.encoder_train.tau, 0.05);
        assert_eq!(c.pair_filter.max_jaccard, 0.9);
        assert_eq!(c.pair_filter.min_embed, 0.3);
        assert_eq!(c.retriever.band_lower_pct, 60.0);
        assert_eq!(c.retriever.band_upper_pct, 95.0);
        assert_eq!(c.retriever.max_hard, 4);
        assert_eq!(c.retriever.nprobe, 4);
        assert_eq!(c.retriever.cluster_theta, 0.85);
        assert_eq!(c.gbdt.n_trees, 100);
        assert_eq!(c.gbdt.max_depth, 3);
        assert_eq!(c.gbdt.lr, 0.1);
        assert_eq!(c.gbdt.min_leaf, 2);
        assert_eq!(c.clickgraph.alpha, 0.2);
        assert_eq!(c.clickgraph.window_days, 3);
        assert_eq!(c.clickgraph.theta, 0.9);
        assert_eq!(c.cache.soft_ttl_secs, 300);
        assert_eq!(c.cache.hard_ttl_secs, 3600);
        assert_eq!(c.serving.candidate_pool, 50);
        assert_eq!(c.eval.recall_k_list, vec![100, 150, 200]);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: Config = serde_json::from_str(r#"{"gbdt":{"n_trees":7}}"#).unwrap();
        assert_eq!(c.gbdt.n_trees, 7);
        assert_eq!(c.gbdt.max_depth, 3);
        assert_eq!(c.bm25.k1, 1.2);
    }
}
