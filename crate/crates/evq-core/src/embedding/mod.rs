//! The shared trainable text encoder and the contrastive (InfoNCE)
//! training objective, with analytic gradients checked against finite
//! differences, plus representation-quality diagnostics.
//!
//! The encoder maps a token sequence to a unit vector: mean of token
//! embedding rows (a dedicated UNK row catches out-of-vocabulary tokens),
//! times a square projection, then L2 normalization. Mean pooling keeps
//! the gradient chain short enough to derive and audit by hand.

mod diagnostics;
mod loss;
mod train;

pub use diagnostics::{alignment_and_uniformity, pca_project_2d};
pub use loss::{
    info_nce_backward, info_nce_forward_backward, info_nce_loss, CLBatch, Gradients,
};
pub use train::{train_contrastive, TrainReport};

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::textcore::TokenSeq;
use crate::{Error, Result};

/// Row index reserved for unknown tokens.
pub const UNK_ROW: usize = 0;

/// Mean-pool + linear projection + L2 norm encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    vocab: HashMap<String, usize>,
    /// Row → token for rows 1..; row 0 is UNK.
    tokens: Vec<String>,
    /// (|V|+1) × d token embeddings, row 0 = UNK.
    pub emb: Vec<Vec<f64>>,
    /// d × d projection.
    pub proj: Vec<Vec<f64>>,
    pub dim: usize,
}

/// Intermediate encode values kept for backprop.
pub(crate) struct EncodeTrace {
    pub rows: Vec<usize>,
    pub mean: Vec<f64>,
    pub unit: Vec<f64>,
    pub norm: f64,
}

impl EncoderModel {
    /// Builds a model over `vocab_tokens` (deduplicated and sorted so the
    /// layout is independent of input order). Embedding rows are seeded
    /// Gaussian with scale 1/√d; the projection starts as identity.
    pub fn init<I, S>(vocab_tokens: I, dim: usize, seed: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = vocab_tokens.into_iter().map(Into::into).collect();
        let mut vocab = HashMap::new();
        let mut tokens = Vec::with_capacity(sorted.len());
        for (i, t) in sorted.into_iter().enumerate() {
            vocab.insert(t.clone(), i + 1);
            tokens.push(t);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let emb = (0..tokens.len() + 1)
            .map(|_| gaussian_row(&mut rng, dim, scale))
            .collect();
        let proj = identity(dim);
        EncoderModel { vocab, tokens, emb, proj, dim }
    }

    /// Builds the vocabulary from text corpus tokens with a minimum
    /// frequency, then initializes.
    pub fn init_from_texts<'a, I>(texts: I, dim: usize, min_freq: usize, seed: u64) -> Self
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for seq in texts {
            for t in seq {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let kept = freq
            .into_iter()
            .filter(|(_, c)| *c >= min_freq)
            .map(|(t, _)| t.to_string());
        EncoderModel::init(kept, dim, seed)
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn row_of(&self, token: &str) -> usize {
        self.vocab.get(token).copied().unwrap_or(UNK_ROW)
    }

    pub(crate) fn rows_of(&self, seq: &TokenSeq) -> Vec<usize> {
        if seq.is_empty() {
            vec![UNK_ROW]
        } else {
            seq.iter().map(|t| self.row_of(t)).collect()
        }
    }

    pub(crate) fn encode_trace(&self, seq: &TokenSeq) -> EncodeTrace {
        let rows = self.rows_of(seq);
        let m = rows.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for &r in &rows {
            for (k, v) in self.emb[r].iter().enumerate() {
                mean[k] += v / m;
            }
        }
        let pre_norm: Vec<f64> = self
            .proj
            .iter()
            .map(|row| dot(row, &mean))
            .collect();
        let mut norm = dot(&pre_norm, &pre_norm).sqrt();
        let unit = if norm > 1e-300 {
            pre_norm.iter().map(|v| v / norm).collect()
        } else {
            // Degenerate zero vector; pick a fixed unit vector so the
            // output contract (unit norm) still holds.
            norm = 1.0;
            let mut u = vec![0.0; self.dim];
            u[0] = 1.0;
            u
        };
        EncodeTrace { rows, mean, unit, norm }
    }

    /// Encodes a token sequence to a unit vector of length `dim`.
    ///
    /// Mean pooling makes the output invariant to token order; the empty
    /// sequence encodes as the UNK row pushed through the projection.
    pub fn encode(&self, seq: &TokenSeq) -> Vec<f64> {
        self.encode_trace(seq).unit
    }

    /// Applies accumulated gradients scaled by `-lr`.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (&row, g) in &grads.emb {
            for (k, gv) in g.iter().enumerate() {
                self.emb[row][k] -= lr * gv;
            }
        }
        for (i, grow) in grads.proj.iter().enumerate() {
            for (k, gv) in grow.iter().enumerate() {
                self.proj[i][k] -= lr * gv;
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// The versioned JSON form (also embedded inside tower artifacts).
    pub fn to_json_string(&self) -> Result<String> {
        let file = SerializedEncoder {
            version: ENCODER_FORMAT_VERSION,
            dim: self.dim,
            tokens: self.tokens.clone(),
            emb: self.emb.clone(),
            proj: self.proj.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SerializedEncoder =
            serde_json::from_str(text).map_err(|e| Error::BadArtifact(e.to_string()))?;
        if file.version != ENCODER_FORMAT_VERSION {
            return Err(Error::BadArtifact(format!(
                "encoder format version {} (expected {})",
                file.version, ENCODER_FORMAT_VERSION
            )));
        }
        if file.emb.len() != file.tokens.len() + 1
            || file.emb.iter().any(|r| r.len() != file.dim)
            || file.proj.len() != file.dim
            || file.proj.iter().any(|r| r.len() != file.dim)
        {
            return Err(Error::BadArtifact("encoder matrix shapes inconsistent".into()));
        }
        let vocab = file
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 1))
            .collect();
        Ok(EncoderModel {
            vocab,
            tokens: file.tokens,
            emb: file.emb,
            proj: file.proj,
            dim: file.dim,
        })
    }
}

const ENCODER_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SerializedEncoder {
    version: u32,
    dim: usize,
    tokens: Vec<String>,
    emb: Vec<Vec<f64>>,
    proj: Vec<Vec<f64>>,
}

/// Cosine similarity of the two encoded sequences, clamped to [−1, 1].
pub fn embed_score(model: &EncoderModel, a: &TokenSeq, b: &TokenSeq) -> f64 {
    let ea = model.encode(a);
    let eb = model.encode(b);
    dot(&ea, &eb).clamp(-1.0, 1.0)
}

/// Plain dot product; on unit vectors this is the cosine.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gaussian_row(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    // Box-Muller; two uniforms per normal draw.
    (0..dim)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            scale * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut row = vec![0.0; dim];
            row[i] = 1.0;
            row
        })
        .collect()
}
