//! InfoNCE loss and its analytic gradients.
//!
//! For a batch of N aligned (anchor, positive) pairs the loss is
//!
//! ```text
//! L = − Σ_{i=1..N} log( exp(sim(a_i, p_i)/τ) / Σ_j exp(sim(a_i, p_j)/τ) )
//! ```
//!
//! where `sim` is cosine similarity (encoder outputs are unit vectors, so
//! the dot product is the cosine) and the denominator runs over the batch
//! positives plus any per-row extra negatives. Gradients flow through the
//! similarity, the L2 normalization, the projection and the mean pooling
//! into both the anchor-side and positive-side parameters.

use std::collections::HashMap;

use crate::textcore::TokenSeq;

use super::{dot, EncodeTrace, EncoderModel};

/// One contrastive batch: aligned anchors/positives plus optional extra
/// negatives per row (used by stage-2 retrieval training).
#[derive(Debug, Clone)]
pub struct CLBatch {
    pub anchors: Vec<TokenSeq>,
    pub positives: Vec<TokenSeq>,
    /// Extra negatives appended to row i's denominator only. Empty means
    /// in-batch negatives alone.
    pub extra_negatives: Vec<Vec<TokenSeq>>,
    pub tau: f64,
}

impl CLBatch {
    pub fn new(anchors: Vec<TokenSeq>, positives: Vec<TokenSeq>, tau: f64) -> Self {
        assert_eq!(anchors.len(), positives.len(), "pairs must be aligned");
        assert!(!anchors.is_empty(), "batch needs at least one pair");
        assert!(tau > 0.0, "temperature must be positive");
        CLBatch { anchors, positives, extra_negatives: Vec::new(), tau }
    }

    pub fn with_extra_negatives(mut self, negs: Vec<Vec<TokenSeq>>) -> Self {
        assert_eq!(negs.len(), self.anchors.len());
        self.extra_negatives = negs;
        self
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Accumulated parameter gradients for one encoder.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    /// Embedding-row gradients, keyed by row index; rows not touched by
    /// the batch never appear.
    pub emb: HashMap<usize, Vec<f64>>,
    pub proj: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeroed(dim: usize) -> Self {
        Gradients { emb: HashMap::new(), proj: vec![vec![0.0; dim]; dim] }
    }

    pub fn merge(&mut self, other: Gradients) {
        for (row, g) in other.emb {
            match self.emb.get_mut(&row) {
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                None => {
                    self.emb.insert(row, g);
                }
            }
        }
        for (arow, brow) in self.proj.iter_mut().zip(other.proj) {
            for (a, b) in arow.iter_mut().zip(brow) {
                *a += b;
            }
        }
    }
}

/// Forward pass shared by loss and backward: per-row logits over the
/// batch positives plus the row's extra negatives, and the row losses
/// via stabilized log-sum-exp.
struct Forward {
    anchor_traces: Vec<EncodeTrace>,
    positive_traces: Vec<EncodeTrace>,
    neg_traces: Vec<Vec<EncodeTrace>>,
    /// softmax probabilities per row over [positives..., extra_negs...]
    probs: Vec<Vec<f64>>,
    loss: f64,
}

fn forward(anchor_model: &EncoderModel, positive_model: &EncoderModel, batch: &CLBatch) -> Forward {
    let n = batch.len();
    let anchor_traces: Vec<EncodeTrace> =
        batch.anchors.iter().map(|s| anchor_model.encode_trace(s)).collect();
    let positive_traces: Vec<EncodeTrace> =
        batch.positives.iter().map(|s| positive_model.encode_trace(s)).collect();
    let neg_traces: Vec<Vec<EncodeTrace>> = if batch.extra_negatives.is_empty() {
        (0..n).map(|_| Vec::new()).collect()
    } else {
        batch
            .extra_negatives
            .iter()
            .map(|row| row.iter().map(|s| positive_model.encode_trace(s)).collect())
            .collect()
    };

    let mut probs = Vec::with_capacity(n);
    let mut loss = 0.0;
    for i in 0..n {
        let a = &anchor_traces[i].unit;
        let mut logits: Vec<f64> = positive_traces
            .iter()
            .map(|p| dot(a, &p.unit) / batch.tau)
            .collect();
        for neg in &neg_traces[i] {
            logits.push(dot(a, &neg.unit) / batch.tau);
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        loss += max + sum_exp.ln() - logits[i];
        probs.push(logits.iter().map(|z| (z - max).exp() / sum_exp).collect());
    }
    Forward { anchor_traces, positive_traces, neg_traces, probs, loss }
}

/// The batch loss (a sum over rows, so N = 1 gives exactly 0).
pub fn info_nce_loss(model: &EncoderModel, batch: &CLBatch) -> f64 {
    forward(model, model, batch).loss
}

/// Backprop of `d_unit` (gradient at the normalized output) through one
/// encode trace into `grads`.
fn backprop_trace(model: &EncoderModel, trace: &EncodeTrace, d_unit: &[f64], grads: &mut Gradients) {
    let dim = model.dim;
    // Through normalization: d_pre = (d_unit − (d_unit·e)e) / |v|.
    let proj_coeff = dot(d_unit, &trace.unit);
    let d_pre: Vec<f64> = (0..dim)
        .map(|k| (d_unit[k] - proj_coeff * trace.unit[k]) / trace.norm)
        .collect();
    // Through projection: dP += outer(d_pre, mean); d_mean = Pᵀ d_pre.
    for (i, dp) in d_pre.iter().enumerate() {
        if *dp != 0.0 {
            for (k, mv) in trace.mean.iter().enumerate() {
                grads.proj[i][k] += dp * mv;
            }
        }
    }
    let mut d_mean = vec![0.0; dim];
    for (i, dp) in d_pre.iter().enumerate() {
        if *dp != 0.0 {
            for (k, pv) in model.proj[i].iter().enumerate() {
                d_mean[k] += dp * pv;
            }
        }
    }
    // Through mean pooling: each occurrence gets 1/m of the gradient.
    let m = trace.rows.len() as f64;
    for &row in &trace.rows {
        let acc = grads
            .emb
            .entry(row)
            .or_insert_with(|| vec![0.0; dim]);
        for k in 0..dim {
            acc[k] += d_mean[k] / m;
        }
    }
}

/// Loss and gradients for the general two-tower case. When both models
/// are the same instance, merge the two gradient sets before applying.
pub fn info_nce_forward_backward(
    anchor_model: &EncoderModel,
    positive_model: &EncoderModel,
    batch: &CLBatch,
) -> (f64, Gradients, Gradients) {
    let n = batch.len();
    let dim = anchor_model.dim;
    let f = forward(anchor_model, positive_model, batch);

    let mut d_anchor_units: Vec<Vec<f64>> = vec![vec![0.0; dim]; n];
    let mut d_positive_units: Vec<Vec<f64>> = vec![vec![0.0; dim]; n];
    let mut d_neg_units: Vec<Vec<Vec<f64>>> = f
        .neg_traces
        .iter()
        .map(|row| vec![vec![0.0; dim]; row.len()])
        .collect();

    for i in 0..n {
        let a = &f.anchor_traces[i].unit;
        for (j, &p) in f.probs[i].iter().enumerate() {
            let coeff = (p - if j == i { 1.0 } else { 0.0 }) / batch.tau;
            if j < n {
                let pj = &f.positive_traces[j].unit;
                for k in 0..dim {
                    d_anchor_units[i][k] += coeff * pj[k];
                    d_positive_units[j][k] += coeff * a[k];
                }
            } else {
                let neg = &f.neg_traces[i][j - n].unit;
                for k in 0..dim {
                    d_anchor_units[i][k] += coeff * neg[k];
                    d_neg_units[i][j - n][k] += coeff * a[k];
                }
            }
        }
    }

    let mut anchor_grads = Gradients::zeroed(dim);
    let mut positive_grads = Gradients::zeroed(dim);
    for i in 0..n {
        backprop_trace(anchor_model, &f.anchor_traces[i], &d_anchor_units[i], &mut anchor_grads);
        backprop_trace(
            positive_model,
            &f.positive_traces[i],
            &d_positive_units[i],
            &mut positive_grads,
        );
        for (t, d) in f.neg_traces[i].iter().zip(&d_neg_units[i]) {
            backprop_trace(positive_model, t, d, &mut positive_grads);
        }
    }
    (f.loss, anchor_grads, positive_grads)
}

/// Single-model gradients: anchors and positives share parameters, so the
/// two gradient flows are summed.
pub fn info_nce_backward(model: &EncoderModel, batch: &CLBatch) -> (f64, Gradients) {
    let (loss, mut ga, gp) = info_nce_forward_backward(model, model, batch);
    ga.merge(gp);
    (loss, ga)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::tokenize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// d=2 model with axis-aligned rows so similarities are exact.
    fn axis_model() -> EncoderModel {
        let mut m = EncoderModel::init(["x", "y"], 2, 0);
        let rx = m.row_of("x");
        let ry = m.row_of("y");
        m.emb[rx] = vec![1.0, 0.0];
        m.emb[ry] = vec![0.0, 1.0];
        m
    }

    #[test]
    fn single_pair_loss_is_exactly_zero() {
        let m = axis_model();
        let b = CLBatch::new(vec![tokenize("x")], vec![tokenize("x")], 0.05);
        assert_eq!(info_nce_loss(&m, &b), 0.0);
    }

    #[test]
    fn orthogonal_two_pair_loss_hand_value() {
        let m = axis_model();
        let b = CLBatch::new(
            vec![tokenize("x"), tokenize("y")],
            vec![tokenize("x"), tokenize("y")],
            1.0,
        );
        let expect = 2.0 * (1.0 + (-1.0f64).exp()).ln();
        assert!((info_nce_loss(&m, &b) - expect).abs() < 1e-9);
    }

    #[test]
    fn small_tau_with_unique_best_positive_drives_loss_to_zero() {
        let m = axis_model();
        let b = CLBatch::new(
            vec![tokenize("x"), tokenize("y")],
            vec![tokenize("x"), tokenize("y")],
            1e-3,
        );
        assert!(info_nce_loss(&m, &b) < 1e-6);
    }

    #[test]
    fn loss_is_pure() {
        let m = EncoderModel::init(["a", "b", "c"], 4, 3);
        let b = CLBatch::new(
            vec![tokenize("a b"), tokenize("c")],
            vec![tokenize("b"), tokenize("c a")],
            0.05,
        );
        assert_eq!(info_nce_loss(&m, &b), info_nce_loss(&m, &b.clone()));
    }

    #[test]
    fn identical_rows_give_zero_gradients() {
        let mut m = EncoderModel::init(["a", "b", "c"], 4, 3);
        let row = m.emb[1].clone();
        for r in m.emb.iter_mut() {
            *r = row.clone();
        }
        let b = CLBatch::new(
            vec![tokenize("a"), tokenize("b"), tokenize("c")],
            vec![tokenize("b"), tokenize("c"), tokenize("a")],
            0.1,
        );
        let (_, grads) = info_nce_backward(&m, &b);
        for g in grads.emb.values() {
            for v in g {
                assert!(v.abs() < 1e-12, "expected zero gradient, got {v}");
            }
        }
        for row in &grads.proj {
            for v in row {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tokens_absent_from_batch_get_no_gradient() {
        let m = EncoderModel::init(["a", "b", "c", "zzz"], 4, 3);
        let b = CLBatch::new(
            vec![tokenize("a b"), tokenize("b")],
            vec![tokenize("a"), tokenize("c")],
            0.05,
        );
        let (_, grads) = info_nce_backward(&m, &b);
        let absent = m.row_of("zzz");
        assert!(!grads.emb.contains_key(&absent));
    }

    fn rand_seq(rng: &mut ChaCha8Rng, vocab: &[&str]) -> TokenSeq {
        let len = rng.gen_range(1..4);
        let toks: Vec<String> = (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect();
        TokenSeq::from_tokens(toks)
    }

    /// Central finite differences over every parameter.
    fn finite_diff_check(seed: u64, with_negs: bool) -> f64 {
        let vocab = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let mut model = EncoderModel::init(vocab, 4, seed);
        // Perturb proj off identity so its gradient path is exercised.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37);
        for row in model.proj.iter_mut() {
            for v in row.iter_mut() {
                *v += rng.gen_range(-0.2..0.2);
            }
        }
        let n = 3;
        let anchors: Vec<TokenSeq> = (0..n).map(|_| rand_seq(&mut rng, &vocab)).collect();
        let positives: Vec<TokenSeq> = (0..n).map(|_| rand_seq(&mut rng, &vocab)).collect();
        let mut batch = CLBatch::new(anchors, positives, 0.2);
        if with_negs {
            let negs: Vec<Vec<TokenSeq>> = (0..n)
                .map(|_| (0..2).map(|_| rand_seq(&mut rng, &vocab)).collect())
                .collect();
            batch = batch.with_extra_negatives(negs);
        }

        let (_, grads) = info_nce_backward(&model, &batch);
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        let mut check = |analytic: f64, plus: f64, minus: f64| {
            let fd = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-6);
            max_rel = max_rel.max((analytic - fd).abs() / denom);
        };
        for row in 0..model.emb.len() {
            for k in 0..model.dim {
                let analytic = grads.emb.get(&row).map(|g| g[k]).unwrap_or(0.0);
                let orig = model.emb[row][k];
                model.emb[row][k] = orig + h;
                let plus = info_nce_loss(&model, &batch);
                model.emb[row][k] = orig - h;
                let minus = info_nce_loss(&model, &batch);
                model.emb[row][k] = orig;
                check(analytic, plus, minus);
            }
        }
        for i in 0..model.dim {
            for k in 0..model.dim {
                let analytic = grads.proj[i][k];
                let orig = model.proj[i][k];
                model.proj[i][k] = orig + h;
                let plus = info_nce_loss(&model, &batch);
                model.proj[i][k] = orig - h;
                let minus = info_nce_loss(&model, &batch);
                model.proj[i][k] = orig;
                check(analytic, plus, minus);
            }
        }
        max_rel
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5u64 {
            let err = finite_diff_check(seed, false);
            assert!(err < 1e-4, "seed {seed}: max relative error {err}");
        }
    }

    #[test]
    fn gradients_match_finite_differences_with_hard_negatives() {
        for seed in 5..8u64 {
            let err = finite_diff_check(seed, true);
            assert!(err < 1e-4, "seed {seed}: max relative error {err}");
        }
    }

    #[test]
    fn dual_model_gradients_match_finite_differences() {
        // Separate towers: check the positive-side tower's gradients.
        let vocab = ["a", "b", "c", "d"];
        let qm = EncoderModel::init(vocab, 4, 11);
        let mut em = EncoderModel::init(vocab, 4, 12);
        let batch = CLBatch::new(
            vec![tokenize("a b"), tokenize("c")],
            vec![tokenize("b"), tokenize("d c")],
            0.1,
        );
        let (_, _, gp) = info_nce_forward_backward(&qm, &em, &batch);
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for row in 0..em.emb.len() {
            for k in 0..em.dim {
                let analytic = gp.emb.get(&row).map(|g| g[k]).unwrap_or(0.0);
                let orig = em.emb[row][k];
                em.emb[row][k] = orig + h;
                let plus = forward_loss(&qm, &em, &batch);
                em.emb[row][k] = orig - h;
                let minus = forward_loss(&qm, &em, &batch);
                em.emb[row][k] = orig;
                let fd = (plus - minus) / (2.0 * h);
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                max_rel = max_rel.max((analytic - fd).abs() / denom);
            }
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    fn forward_loss(qm: &EncoderModel, em: &EncoderModel, b: &CLBatch) -> f64 {
        super::forward(qm, em, b).loss
    }
}
