//! Online ranking: named features over (query, event) and a from-scratch
//! gradient-boosted regression-tree model choosing the top-1 expansion.

mod features;
mod gbdt;

pub use features::{extract_features, FeatureVector, RankContext, FEATURE_REGISTRY};
pub use gbdt::{gbdt_predict, gbdt_train, GBDTModel, GbdtTrainOutcome, TreeNode};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl;
use crate::reformulate::EventPhrase;
use crate::{Error, Result};

/// One labeled training row (`ranksamples.jsonl`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSample {
    pub query: String,
    pub event_id: String,
    pub label: u8,
    pub ts: i64,
}

pub fn load_rank_samples(path: &Path) -> Result<Vec<RankSample>> {
    jsonl::read_jsonl(path, &["query", "event_id", "label", "ts"])
}

pub fn save_rank_samples(path: &Path, samples: &[RankSample]) -> Result<()> {
    jsonl::write_jsonl(path, samples)
}

/// Resolves sample event ids and extracts features; samples referencing
/// unknown events are skipped and counted.
pub fn assemble_rank_training(
    samples: &[RankSample],
    events_by_id: &HashMap<String, EventPhrase>,
    ctx: &RankContext<'_>,
) -> (Vec<(FeatureVector, f64)>, usize) {
    let mut rows = Vec::with_capacity(samples.len());
    let mut skipped = 0usize;
    for s in samples {
        match events_by_id.get(&s.event_id) {
            Some(event) => rows.push((
                extract_features(&s.query, event, ctx),
                f64::from(s.label.min(1)),
            )),
            None => skipped += 1,
        }
    }
    (rows, skipped)
}

/// Scores and sorts candidates (descending score, ties by ascending
/// event id).
pub fn rank_candidates(
    query: &str,
    events: &[EventPhrase],
    model: &GBDTModel,
    ctx: &RankContext<'_>,
) -> Result<Vec<(EventPhrase, f64)>> {
    if events.is_empty() {
        return Err(Error::invalid("no expansion: empty candidate list"));
    }
    let mut scored = Vec::with_capacity(events.len());
    for e in events {
        let fv = extract_features(query, e, ctx);
        scored.push((e.clone(), gbdt_predict(model, &fv)?));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.event_id.cmp(&b.0.event_id))
    });
    Ok(scored)
}

/// The best candidate under the model.
pub fn top1(
    query: &str,
    events: &[EventPhrase],
    model: &GBDTModel,
    ctx: &RankContext<'_>,
) -> Result<EventPhrase> {
    Ok(rank_candidates(query, events, model, ctx)?.remove(0).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collect::test_lexicon;
    use crate::embedding::EncoderModel;
    use crate::textcore::{tokenize, CorpusStats, TokenSeq};
    use std::collections::HashMap;

    fn event(id: &str, text: &str) -> EventPhrase {
        EventPhrase {
            event_id: id.into(),
            text: text.into(),
            source_headline_id: format!("h-{id}"),
            found_ts: 0,
        }
    }

    fn constant_model(base: f64) -> GBDTModel {
        GBDTModel { registry_version: 1, base, lr: 0.1, trees: Vec::new() }
    }

    #[test]
    fn single_candidate_is_top1_and_ties_break_by_id() {
        let lex = test_lexicon();
        let encoder = EncoderModel::init(["x", "y"], 8, 1);
        let texts = [tokenize("x"), tokenize("y")];
        let stats = CorpusStats::build(texts.iter().collect::<Vec<&TokenSeq>>());
        let sizes: HashMap<String, usize> = HashMap::new();
        let freq: HashMap<String, u64> = HashMap::new();
        let ctx = RankContext {
            encoder: &encoder,
            corpus_stats: &stats,
            bm25: Default::default(),
            lexicon: &lex,
            cluster_sizes: &sizes,
            query_freq: &freq,
            now_ts: 0,
        };
        let model = constant_model(0.3);
        let one = vec![event("only", "x")];
        assert_eq!(top1("x", &one, &model, &ctx).unwrap().event_id, "only");

        // constant scores: ascending id wins
        let many = vec![event("b", "x"), event("a", "x"), event("c", "x")];
        let ranked = rank_candidates("x", &many, &model, &ctx).unwrap();
        let ids: Vec<&str> = ranked.iter().map(|(e, _)| e.event_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(rank_candidates("x", &[], &model, &ctx).is_err());
    }
}
