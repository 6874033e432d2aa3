//! Event-centric query expansion engine.
//!
//! The crate is organised around the stages of the expansion pipeline:
//!
//! - [`textcore`] — tokenization and deterministic text metrics (Jaccard,
//!   BM25, TF-IDF, ROUGE-L, BLEU) shared by every other module.
//! - [`collect`] — headline ingestion, rule-based coarse filtering and a
//!   trainable fine event classifier.
//! - [`embedding`] — the shared trainable encoder, the contrastive
//!   (InfoNCE) objective with hand-derived gradients, and representation
//!   diagnostics (alignment/uniformity, PCA projection).
//! - [`reformulate`] — keyword prompts, positive-pair construction,
//!   training-pair mining and the extractive event reformulator.
//! - [`retrieve`] — dual-tower training in two stages with hard-negative
//!   mining, the event vector index (exact and IVF search), event
//!   clustering and retrieval metrics.
//! - [`rank`] — feature extraction over (query, event) and a from-scratch
//!   gradient-boosted-tree ranker.
//! - [`clickgraph`] — the click-propagation baseline: BM25-smoothed
//!   adjacency, iterative representation propagation and query clustering.
//! - [`pipeline`] — the cache-fronted expansion service, expanded
//!   retrieval, offline orchestration and the evaluation harness.
//! - [`synthetic`] — seeded generators for the bundled benchmark corpora.
//!
//! Everything is deterministic for a fixed seed: all randomness goes
//! through explicitly seeded ChaCha streams and no wall clock is read
//! ambiently (clocks are injected).

pub mod clickgraph;
pub mod collect;
pub mod config;
pub mod embedding;
mod error;
pub mod jsonl;
pub mod pipeline;
pub mod rank;
pub mod reformulate;
pub mod retrieve;
pub mod synthetic;
pub mod textcore;

pub use error::{Error, Result};
