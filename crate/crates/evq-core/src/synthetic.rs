//! Seeded generators for the bundled synthetic corpora: paraphrase pairs
//! for representation training, a paraphrase-family retrieval benchmark,
//! and a full end-to-end corpus with planted fresh events.
//!
//! Everything is a pure function of the seed. Texts are built from
//! pseudo-words (syllable strings), so no natural-language resource is
//! required and token collisions are controlled.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collect::{ClickRecord, Headline, LabeledTitle};
use crate::rank::RankSample;
use crate::reformulate::{GoldRecord, make_positive_pair};

const CONSONANTS: [&str; 14] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Draws unique pseudo-words ("golvar", "mitesu", ...).
pub struct WordGen {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordGen {
    pub fn new(seed: u64) -> Self {
        WordGen { rng: ChaCha8Rng::seed_from_u64(seed), used: HashSet::new() }
    }

    pub fn word(&mut self) -> String {
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(CONSONANTS[self.rng.gen_range(0..CONSONANTS.len())]);
                w.push_str(VOWELS[self.rng.gen_range(0..VOWELS.len())]);
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    pub fn words(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.word()).collect()
    }
}

/// Paraphrase pairs for contrastive training: the positive side swaps two
/// token positions and substitutes the subject and action with in-family
/// synonyms, so the pair shares meaning but not the exact bag of tokens.
pub fn paraphrase_pairs(seed: u64, n: usize) -> Vec<(String, String)> {
    let mut gen = WordGen::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0001);
    let n_families = (n / 6).clamp(5, 80);
    let families: Vec<(Vec<String>, Vec<String>, String)> = (0..n_families)
        .map(|_| (gen.words(3), gen.words(2), gen.word()))
        .collect();
    let fillers = gen.words(30);

    (0..n)
        .map(|i| {
            let (subjects, actions, object) = &families[i % n_families];
            let f1 = &fillers[rng.gen_range(0..fillers.len())];
            let f2 = &fillers[rng.gen_range(0..fillers.len())];
            let si = rng.gen_range(0..subjects.len());
            let ai = rng.gen_range(0..actions.len());
            let anchor = format!("{} {} {} {} {}", subjects[si], actions[ai], object, f1, f2);
            let sj = (si + 1 + rng.gen_range(0..subjects.len() - 1)) % subjects.len();
            let aj = (ai + 1) % actions.len();
            let paraphrase =
                format!("{} {} {} {} {}", subjects[sj], actions[aj], object, f1, f2);
            let positive = make_positive_pair(&paraphrase, rng.gen()).expect(">= 2 tokens");
            (anchor, positive)
        })
        .collect()
}

/// The paraphrase-family retrieval benchmark: families of events sharing
/// surface synonyms, grouped into topics whose members are mutually
/// confusable (they share topic and action vocabulary), which is what
/// gives hard negatives their bite.
pub struct RetrievalBench {
    /// Event texts, 10 per family.
    pub events: Vec<String>,
    /// One held-out query per family.
    pub queries: Vec<String>,
    /// `relevant[q]` = indices into `events` for query q's family.
    pub relevant: Vec<Vec<usize>>,
    /// (query, event) training pairs over the training synonyms.
    pub train_pairs: Vec<(String, String)>,
}

pub fn retrieval_benchmark(seed: u64, n_families: usize, events_per_family: usize) -> RetrievalBench {
    let mut gen = WordGen::new(seed ^ 0x5EED_0002);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0003);
    let n_topics = (n_families / 10).max(1);
    // Topic-level shared vocabulary: actions and topic markers.
    let topics: Vec<(Vec<String>, Vec<String>)> = (0..n_topics)
        .map(|_| (gen.words(3), gen.words(3)))
        .collect();
    let fillers = gen.words(40);

    let mut events = Vec::new();
    let mut queries = Vec::new();
    let mut relevant = Vec::new();
    let mut train_pairs = Vec::new();

    for f in 0..n_families {
        let topic = &topics[f % n_topics];
        let subjects = gen.words(4); // s3 is reserved for the eval query
        let object = gen.word();
        let family_events: Vec<usize> = (0..events_per_family)
            .map(|j| {
                let s = &subjects[j % 3];
                let a = &topic.0[j % topic.0.len()];
                let t = &topic.1[rng.gen_range(0..topic.1.len())];
                let fill = &fillers[rng.gen_range(0..fillers.len())];
                events.push(format!("{s} {a} {object} {t} {fill}"));
                events.len() - 1
            })
            .collect();
        // Training queries cover every subject synonym including the
        // held-out one, paired with events of their own family.
        for (qi, s) in subjects.iter().enumerate() {
            let a = &topic.0[qi % topic.0.len()];
            let query = format!("{s} {a}");
            let target = &events[family_events[qi % family_events.len()]];
            train_pairs.push((query, target.clone()));
        }
        // The held-out subject appears in one training query with action
        // index 3 % |actions|; the eval query picks any other action so
        // no training string is repeated verbatim.
        let train_action = 3 % topic.0.len();
        let offset = 1 + rng.gen_range(0..topic.0.len() - 1);
        let eval_action = (train_action + offset) % topic.0.len();
        let eval_query = format!("{} {}", subjects[3], topic.0[eval_action]);
        queries.push(eval_query);
        relevant.push(family_events);
    }
    RetrievalBench { events, queries, relevant, train_pairs }
}

/// The end-to-end corpus: a document collection with historical events
/// (clicked in the training log), freshly planted events (clicked only
/// in the held-out evaluation log), background documents, fine-filter
/// labels, generation gold and ranker samples.
pub struct E2ECorpus {
    pub headlines: Vec<Headline>,
    /// Historical clicks: training data for towers, ranker frequency
    /// tables and the click-graph baseline.
    pub train_clicks: Vec<ClickRecord>,
    /// Held-out clicks: the evaluation truth (Recall@K targets).
    pub eval_clicks: Vec<ClickRecord>,
    pub labeled: Vec<LabeledTitle>,
    pub triggers: Vec<String>,
    pub interrogatives: Vec<String>,
    pub entities: Vec<String>,
    pub gold: Vec<GoldRecord>,
    pub rank_samples: Vec<RankSample>,
    /// All evaluation queries (30% target fresh planted events).
    pub eval_queries: Vec<String>,
    /// Unix second the corpus "now" sits at (fresh events are recent).
    pub now_ts: i64,
}

pub struct E2EParams {
    pub n_entities: usize,
    pub n_fresh_events: usize,
    pub n_background_docs: usize,
    pub n_normal_queries: usize,
}

impl Default for E2EParams {
    fn default() -> Self {
        E2EParams {
            n_entities: 100,
            n_fresh_events: 60,
            n_background_docs: 9_200,
            n_normal_queries: 140,
        }
    }
}

const DAY: i64 = 86_400;

pub fn e2e_corpus(seed: u64, params: &E2EParams) -> E2ECorpus {
    let mut gen = WordGen::new(seed ^ 0x5EED_0004);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0005);
    let now_ts: i64 = 1_700_000_000;

    // Vocabulary. Entities come in (canonical, alias) pairs: documents
    // use the canonical form, searchers often use the alias; the tie
    // between them is only learnable from historical clicks.
    let entities: Vec<(String, String)> =
        (0..params.n_entities).map(|_| (gen.word(), gen.word())).collect();
    let triggers = gen.words(20);
    let interrogatives = gen.words(4);
    let objects = gen.words(160);
    let details = gen.words(60);
    let common = gen.words(120); // background vocabulary
    let vague = gen.words(6); // "news"-like tokens appearing everywhere

    let mut headlines = Vec::new();
    let mut train_clicks = Vec::new();
    let mut eval_clicks = Vec::new();
    let mut gold = Vec::new();
    let mut rank_samples = Vec::new();
    let mut eval_queries = Vec::new();
    let mut doc_no = 0usize;
    let mut new_doc = |title: String, ts: i64, headlines: &mut Vec<Headline>| -> String {
        let id = format!("d{doc_no:05}");
        doc_no += 1;
        headlines.push(Headline {
            id: id.clone(),
            title,
            site: "news.example".into(),
            page_type: "news".into(),
            publish_ts: ts,
        });
        id
    };

    // Historical events: one per entity, published weeks ago, clicked in
    // the training log under both canonical and alias query forms.
    for (ei, (canonical, alias)) in entities.iter().enumerate() {
        let verb = &triggers[ei % triggers.len()];
        let object = &objects[ei % objects.len()];
        let d1 = &details[rng.gen_range(0..details.len())];
        let ts = now_ts - rng.gen_range(10..30) * DAY;
        let head_id = new_doc(format!("{canonical} {verb} {object} {d1}"), ts, &mut headlines);
        gold.push(GoldRecord {
            title: format!("{canonical} {verb} {object} {d1}"),
            event: format!("{canonical} {verb} {object}"),
            topic: format!("topic{}", ei % 10),
        });
        let mut family_docs = vec![head_id.clone()];
        for _ in 0..3 {
            let d = &details[rng.gen_range(0..details.len())];
            let c = &common[rng.gen_range(0..common.len())];
            let id = new_doc(format!("{object} {d} {canonical} report {c}"), ts + 600, &mut headlines);
            family_docs.push(id);
        }
        // Training clicks: alias and canonical queries land on the
        // family's docs. These teach the towers that alias ≈ canonical.
        for k in 0..5 {
            let q = if k % 2 == 0 {
                format!("{alias} {object}")
            } else {
                format!("{canonical} {object}")
            };
            let doc = &family_docs[rng.gen_range(0..family_docs.len())];
            train_clicks.push(ClickRecord {
                query: q.clone(),
                doc_id: doc.clone(),
                ts: ts + 1_200 + k as i64,
            });
        }
        // Ranker samples: the entity's own event is the positive.
        if ei % 2 == 0 {
            rank_samples.push(RankSample {
                query: format!("{alias} {object}"),
                event_id: format!("ev-{head_id}"),
                label: 1,
                ts: ts + 2_000,
            });
            for _ in 0..3 {
                let other = rng.gen_range(0..params.n_entities);
                if other != ei {
                    rank_samples.push(RankSample {
                        query: format!("{alias} {object}"),
                        event_id: format!("ev-d{:05}", other * 4),
                        label: 0,
                        ts: ts + 2_000,
                    });
                }
            }
        }
    }

    // Fresh planted events: recent headlines reusing known entities with
    // new objects. No training clicks exist for them; the evaluation
    // truth clicks land on their documents.
    for fi in 0..params.n_fresh_events {
        let (canonical, alias) = &entities[fi % entities.len()];
        let verb = &triggers[(fi * 7 + 3) % triggers.len()];
        let object = &objects[(params.n_entities + fi) % objects.len()];
        let d1 = &details[rng.gen_range(0..details.len())];
        let ts = now_ts - rng.gen_range(1..48) * 3_600;
        let head_id = new_doc(
            format!("{canonical} {verb} {object} {d1}"),
            ts,
            &mut headlines,
        );
        gold.push(GoldRecord {
            title: format!("{canonical} {verb} {object} {d1}"),
            event: format!("{canonical} {verb} {object}"),
            topic: format!("topic{}", fi % 10),
        });
        let mut family_docs = vec![head_id.clone()];
        for _ in 0..2 {
            let d = &details[rng.gen_range(0..details.len())];
            let c = &common[rng.gen_range(0..common.len())];
            let id = new_doc(format!("{object} {d} {canonical} update {c}"), ts + 300, &mut headlines);
            family_docs.push(id);
        }
        let query = format!("{alias} {}", vague[fi % vague.len()]);
        eval_queries.push(query.clone());
        for doc in &family_docs {
            eval_clicks.push(ClickRecord { query: query.clone(), doc_id: doc.clone(), ts: now_ts });
        }
    }

    // Background documents: mostly non-event titles; a slice carries
    // triggers so the collect stage has realistic work to do.
    let mut background_ids = Vec::new();
    for bi in 0..params.n_background_docs {
        let roll = rng.gen_range(0..100);
        let w = |rng: &mut ChaCha8Rng| common[rng.gen_range(0..common.len())].clone();
        let title = if roll < 70 {
            format!("{} {} {} {}", w(&mut rng), w(&mut rng), w(&mut rng), w(&mut rng))
        } else if roll < 80 {
            format!(
                "{} {} {}?",
                interrogatives[rng.gen_range(0..interrogatives.len())],
                w(&mut rng),
                w(&mut rng)
            )
        } else if roll < 90 {
            format!("{} | {} | {} | {}", w(&mut rng), w(&mut rng), w(&mut rng), w(&mut rng))
        } else {
            // event-shaped noise: subject + trigger + object
            format!(
                "{} {} {} {}",
                w(&mut rng),
                triggers[rng.gen_range(0..triggers.len())],
                w(&mut rng),
                w(&mut rng)
            )
        };
        let ts = now_ts - rng.gen_range(0..40) * DAY;
        let id = new_doc(title, ts, &mut headlines);
        if bi % 3 == 0 {
            background_ids.push(id);
        }
    }

    // Normal evaluation queries: click background docs they lexically
    // match, so plain retrieval already serves them well.
    for qi in 0..params.n_normal_queries {
        if background_ids.is_empty() {
            break;
        }
        let doc_id = background_ids[qi % background_ids.len()].clone();
        let title = &headlines
            .iter()
            .find(|h| h.id == doc_id)
            .unwrap()
            .title
            .clone();
        let tokens: Vec<&str> = title.split_whitespace().collect();
        let query = format!(
            "{} {}",
            tokens[0],
            tokens.get(1).copied().unwrap_or(tokens[0])
        );
        eval_queries.push(query.clone());
        eval_clicks.push(ClickRecord { query: query.clone(), doc_id, ts: now_ts });
        // historical popularity for the same query string
        for k in 0..2 {
            train_clicks.push(ClickRecord {
                query: query.clone(),
                doc_id: background_ids[(qi + k) % background_ids.len()].clone(),
                ts: now_ts - 2 * DAY,
            });
        }
    }

    // Fine-filter labels: event-shaped titles against background shapes.
    let mut labeled = Vec::new();
    for i in 0..120 {
        let (canonical, _) = &entities[i % entities.len()];
        let verb = &triggers[i % triggers.len()];
        let object = &objects[i % objects.len()];
        labeled.push(LabeledTitle {
            title: format!("{canonical} {verb} {object} extra"),
            is_event: true,
        });
        let w = |rng: &mut ChaCha8Rng| common[rng.gen_range(0..common.len())].clone();
        labeled.push(LabeledTitle {
            title: format!("{} {} {} {}", w(&mut rng), w(&mut rng), w(&mut rng), w(&mut rng)),
            is_event: false,
        });
    }

    let mut entity_lexicon: Vec<String> = entities
        .iter()
        .flat_map(|(c, a)| [c.clone(), a.clone()])
        .collect();
    entity_lexicon.sort();

    // Stable shuffle of evaluation queries so event/normal queries mix.
    eval_queries.shuffle(&mut rng);

    E2ECorpus {
        headlines,
        train_clicks,
        eval_clicks,
        labeled,
        triggers,
        interrogatives,
        entities: entity_lexicon,
        gold,
        rank_samples,
        eval_queries,
        now_ts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::tokenize;

    #[test]
    fn wordgen_is_deterministic_and_unique() {
        let mut g1 = WordGen::new(5);
        let mut g2 = WordGen::new(5);
        let w1 = g1.words(50);
        let w2 = g2.words(50);
        assert_eq!(w1, w2);
        let set: HashSet<&String> = w1.iter().collect();
        assert_eq!(set.len(), 50);
        assert!(w1.iter().all(|w| tokenize(w).len() == 1));
    }

    #[test]
    fn paraphrase_pairs_share_structure_not_bag() {
        let pairs = paraphrase_pairs(3, 100);
        assert_eq!(pairs.len(), 100);
        assert_eq!(pairs, paraphrase_pairs(3, 100), "seeded determinism");
        let mut identical = 0;
        for (a, b) in &pairs {
            let ta = tokenize(a);
            let tb = tokenize(b);
            assert_eq!(ta.len(), 5);
            assert_eq!(tb.len(), 5);
            if ta.token_set() == tb.token_set() {
                identical += 1;
            }
        }
        assert!(identical < 10, "positives should usually differ lexically");
    }

    #[test]
    fn retrieval_bench_shapes() {
        let b = retrieval_benchmark(1, 40, 10);
        assert_eq!(b.events.len(), 400);
        assert_eq!(b.queries.len(), 40);
        assert_eq!(b.relevant.len(), 40);
        assert!(b.relevant.iter().all(|r| r.len() == 10));
        assert_eq!(b.train_pairs.len(), 160);
        // eval queries never literally equal a training query
        for q in &b.queries {
            assert!(b.train_pairs.iter().all(|(tq, _)| tq != q));
        }
    }

    #[test]
    fn e2e_corpus_shape_and_planting() {
        let params = E2EParams {
            n_entities: 10,
            n_fresh_events: 6,
            n_background_docs: 200,
            n_normal_queries: 14,
        };
        let c = e2e_corpus(7, &params);
        assert_eq!(c.eval_queries.len(), 20);
        // ~30% of queries target fresh events
        assert_eq!(c.headlines.len(), 10 * 4 + 6 * 3 + 200);
        // determinism
        let c2 = e2e_corpus(7, &params);
        assert_eq!(c.headlines.len(), c2.headlines.len());
        assert_eq!(c.eval_queries, c2.eval_queries);
        assert_eq!(c.train_clicks.len(), c2.train_clicks.len());
        // no training click ever lands on a fresh event's docs
        let fresh_first = 10 * 4;
        let fresh_ids: HashSet<&str> = c.headlines[fresh_first..fresh_first + 18]
            .iter()
            .map(|h| h.id.as_str())
            .collect();
        assert!(c
            .train_clicks
            .iter()
            .all(|cl| !fresh_ids.contains(cl.doc_id.as_str())));
    }
}
