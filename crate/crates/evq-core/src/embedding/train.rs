//! Seeded SGD loop for contrastive training of a single shared encoder.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainParams;
use crate::textcore::TokenSeq;

use super::loss::{info_nce_backward, CLBatch};
use super::EncoderModel;

/// Per-epoch mean loss (per anchor), in epoch order.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Trains `model` in place on (anchor, positive) pairs with in-batch
/// negatives. Mini-batches are reshuffled every epoch from a ChaCha
/// stream seeded by `config.seed`, so a fixed seed reproduces the run
/// bit for bit.
pub fn train_contrastive(
    model: &mut EncoderModel,
    pairs: &[(TokenSeq, TokenSeq)],
    config: &TrainParams,
) -> TrainReport {
    assert!(!pairs.is_empty(), "training needs at least one pair");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let batch_size = config.batch_size.max(1);
    let mut report = TrainReport::default();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let anchors: Vec<TokenSeq> = chunk.iter().map(|&i| pairs[i].0.clone()).collect();
            let positives: Vec<TokenSeq> = chunk.iter().map(|&i| pairs[i].1.clone()).collect();
            let batch = CLBatch::new(anchors, positives, config.tau);
            let (loss, grads) = info_nce_backward(model, &batch);
            epoch_loss += loss;
            if config.lr != 0.0 {
                model.apply_gradients(&grads, config.lr);
            }
        }
        report.epoch_losses.push(epoch_loss / pairs.len() as f64);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::tokenize;

    fn synthetic_pairs() -> Vec<(TokenSeq, TokenSeq)> {
        // Five families of interchangeable tokens; pairs draw two
        // different surface forms of the same family.
        let families = [
            ["rocket", "booster", "launcher"],
            ["team", "club", "squad"],
            ["deal", "merger", "takeover"],
            ["storm", "cyclone", "typhoon"],
            ["chip", "processor", "wafer"],
        ];
        let mut pairs = Vec::new();
        for f in &families {
            for i in 0..f.len() {
                for j in 0..f.len() {
                    if i != j {
                        pairs.push((
                            tokenize(&format!("{} update report", f[i])),
                            tokenize(&format!("{} update report", f[j])),
                        ));
                    }
                }
            }
        }
        pairs
    }

    #[test]
    fn zero_lr_leaves_parameters_unchanged() {
        let pairs = synthetic_pairs();
        let vocab: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()).cloned())
            .collect();
        let mut model = EncoderModel::init(vocab.clone(), 16, 5);
        let before = model.clone();
        let cfg = TrainParams { lr: 0.0, epochs: 3, batch_size: 8, tau: 0.05, seed: 1 };
        train_contrastive(&mut model, &pairs, &cfg);
        assert_eq!(model, before);
    }

    #[test]
    fn loss_decreases_over_epochs() {
        let pairs: Vec<(TokenSeq, TokenSeq)> = (0..50)
            .flat_map(|i| {
                let a = tokenize(&format!("item{} alpha tail", i % 10));
                let b = tokenize(&format!("item{} beta tail", i % 10));
                [(a, b)]
            })
            .collect();
        let vocab: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()).cloned())
            .collect();
        let mut model = EncoderModel::init(vocab, 16, 5);
        let cfg = TrainParams { lr: 0.2, epochs: 20, batch_size: 16, tau: 0.05, seed: 3 };
        let report = train_contrastive(&mut model, &pairs, &cfg);
        assert_eq!(report.epoch_losses.len(), 20);
        assert!(
            report.epoch_losses[19] < report.epoch_losses[0],
            "loss did not improve: {:?}",
            report.epoch_losses
        );
    }

    #[test]
    fn fixed_seed_is_bit_deterministic() {
        let pairs = synthetic_pairs();
        let vocab: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()).cloned())
            .collect();
        let cfg = TrainParams { lr: 0.1, epochs: 4, batch_size: 8, tau: 0.05, seed: 9 };
        let mut m1 = EncoderModel::init(vocab.clone(), 16, 5);
        let r1 = train_contrastive(&mut m1, &pairs, &cfg);
        let mut m2 = EncoderModel::init(vocab, 16, 5);
        let r2 = train_contrastive(&mut m2, &pairs, &cfg);
        assert_eq!(m1, m2);
        assert_eq!(r1.epoch_losses, r2.epoch_losses);
    }

    #[test]
    fn training_raises_positive_pair_cosine() {
        let pairs = synthetic_pairs();
        let (train, held_out) = pairs.split_at(pairs.len() - 6);
        let vocab: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()).cloned())
            .collect();
        let mut model = EncoderModel::init(vocab, 16, 5);
        let mean_cos = |m: &EncoderModel| {
            held_out
                .iter()
                .map(|(a, b)| super::super::embed_score(m, a, b))
                .sum::<f64>()
                / held_out.len() as f64
        };
        let before = mean_cos(&model);
        let cfg = TrainParams { lr: 0.2, epochs: 25, batch_size: 8, tau: 0.05, seed: 2 };
        train_contrastive(&mut model, train, &cfg);
        let after = mean_cos(&model);
        assert!(
            after > before,
            "held-out positive cosine did not improve: {before} -> {after}"
        );
    }
}
