//! Two-stage dual-tower training. Stage 1 uses in-batch (shuffled)
//! negatives; stage 2 starts from the stage-1 parameters and mixes each
//! query's mined hard negatives into its denominator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainParams;
use crate::embedding::{info_nce_backward, info_nce_forward_backward, CLBatch, TrainReport};
use crate::textcore::TokenSeq;
use crate::{Error, Result};

use super::DualTower;

/// Stage 1: InfoNCE over shuffled mini-batches where the negatives for
/// query i are the other events in the batch. Needs at least two pairs.
pub fn train_stage1(
    tower: &mut DualTower,
    pairs: &[(TokenSeq, TokenSeq)],
    config: &TrainParams,
) -> Result<TrainReport> {
    if pairs.len() < 2 {
        return Err(Error::invalid(
            "stage-1 training needs at least two pairs for in-batch negatives",
        ));
    }
    Ok(run_epochs(tower, pairs, None, config))
}

/// Stage 2: identical loop, but row i's denominator additionally holds up
/// to `max_hard` mined hard negatives (falling back to in-batch negatives
/// alone where none were mined). The caller passes the stage-1 tower, so
/// initialization equals the stage-1 parameters bit for bit.
pub fn train_stage2(
    tower: &mut DualTower,
    pairs: &[(TokenSeq, TokenSeq)],
    hard_negatives: &[Vec<TokenSeq>],
    max_hard: usize,
    config: &TrainParams,
) -> Result<TrainReport> {
    if pairs.len() < 2 {
        return Err(Error::invalid(
            "stage-2 training needs at least two pairs for in-batch negatives",
        ));
    }
    if hard_negatives.len() != pairs.len() {
        return Err(Error::invalid(
            "hard negative lists must align with the training pairs",
        ));
    }
    let capped: Vec<Vec<TokenSeq>> = hard_negatives
        .iter()
        .map(|h| h.iter().take(max_hard).cloned().collect())
        .collect();
    Ok(run_epochs(tower, pairs, Some(&capped), config))
}

fn run_epochs(
    tower: &mut DualTower,
    pairs: &[(TokenSeq, TokenSeq)],
    hard_negatives: Option<&[Vec<TokenSeq>]>,
    config: &TrainParams,
) -> TrainReport {
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
            let mut batch = CLBatch::new(anchors, positives, config.tau);
            if let Some(negs) = hard_negatives {
                let rows: Vec<Vec<TokenSeq>> =
                    chunk.iter().map(|&i| negs[i].clone()).collect();
                if rows.iter().any(|r| !r.is_empty()) {
                    batch = batch.with_extra_negatives(rows);
                }
            }
            let loss = if tower.is_shared() {
                let (q, _) = tower.towers_mut();
                let (loss, grads) = info_nce_backward(q, &batch);
                if config.lr != 0.0 {
                    q.apply_gradients(&grads, config.lr);
                }
                loss
            } else {
                let (loss, gq, ge) = {
                    let q = tower.query_tower();
                    let e = tower.event_tower();
                    info_nce_forward_backward(q, e, &batch)
                };
                if config.lr != 0.0 {
                    let (q, e) = tower.towers_mut();
                    q.apply_gradients(&gq, config.lr);
                    e.expect("separate towers").apply_gradients(&ge, config.lr);
                }
                loss
            };
            epoch_loss += loss;
        }
        report.epoch_losses.push(epoch_loss / pairs.len() as f64);
    }
    report
}
