//! Headline ingestion and event filtering: JSONL loaders, the rule-based
//! coarse filter and a trainable fine event classifier (hashed n-gram
//! logistic regression).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{CoarseConfig, FineFilterConfig};
use crate::jsonl;
use crate::textcore::tokenize;
use crate::{Error, Result};

/// A raw news headline record (`headlines.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub id: String,
    pub title: String,
    pub site: String,
    pub page_type: String,
    pub publish_ts: i64,
}

/// One user click (`clicklog.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub query: String,
    pub doc_id: String,
    pub ts: i64,
}

/// A labeled title for fine-filter training (`labeled.jsonl`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledTitle {
    pub title: String,
    pub is_event: bool,
}

/// Loads headlines, deduplicating ids and keeping the earliest
/// `publish_ts` per id. Errors name the offending line and field.
pub fn load_headlines(path: &Path) -> Result<Vec<Headline>> {
    let raw: Vec<Headline> =
        jsonl::read_jsonl(path, &["id", "title", "site", "page_type", "publish_ts"])?;
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<Headline> = Vec::new();
    for (lineno, h) in raw.into_iter().enumerate() {
        if h.title.is_empty() {
            return Err(Error::Malformed {
                line: lineno + 1,
                msg: format!("headline {} has empty title", h.id),
            });
        }
        match by_id.get(&h.id) {
            Some(&i) => {
                if h.publish_ts < out[i].publish_ts {
                    out[i] = h;
                }
            }
            None => {
                by_id.insert(h.id.clone(), out.len());
                out.push(h);
            }
        }
    }
    Ok(out)
}

pub fn load_clicklog(path: &Path) -> Result<Vec<ClickRecord>> {
    let recs: Vec<ClickRecord> = jsonl::read_jsonl(path, &["query", "doc_id", "ts"])?;
    for (i, r) in recs.iter().enumerate() {
        if r.query.is_empty() || r.doc_id.is_empty() {
            return Err(Error::Malformed {
                line: i + 1,
                msg: "click record has empty query or doc_id".into(),
            });
        }
    }
    Ok(recs)
}

pub fn load_labeled(path: &Path) -> Result<Vec<LabeledTitle>> {
    jsonl::read_jsonl(path, &["title", "is_event"])
}

/// Trigger/interrogative/entity token sets backing the rule filters.
#[derive(Debug, Clone, Default)]
pub struct TriggerLexicon {
    pub triggers: HashSet<String>,
    pub interrogatives: HashSet<String>,
    pub entity_lexicon: HashSet<String>,
}

impl TriggerLexicon {
    pub fn new<T, I, E>(triggers: T, interrogatives: I, entities: E) -> Self
    where
        T: IntoIterator<Item = String>,
        I: IntoIterator<Item = String>,
        E: IntoIterator<Item = String>,
    {
        TriggerLexicon {
            triggers: triggers.into_iter().collect(),
            interrogatives: interrogatives.into_iter().collect(),
            entity_lexicon: entities.into_iter().collect(),
        }
    }

    /// Loads the three lexicon files (one token per line, UTF-8). Every
    /// entry must tokenize to exactly one token and no file may be empty.
    pub fn load(triggers: &Path, interrogatives: &Path, entities: &Path) -> Result<Self> {
        Ok(TriggerLexicon {
            triggers: load_token_file(triggers)?,
            interrogatives: load_token_file(interrogatives)?,
            entity_lexicon: load_token_file(entities)?,
        })
    }
}

fn load_token_file(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut set = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        let toks = tokenize(entry);
        if toks.len() != 1 {
            return Err(Error::Malformed {
                line: i + 1,
                msg: format!("lexicon entry {entry:?} does not tokenize to a single token"),
            });
        }
        set.insert(toks[0].clone());
    }
    if set.is_empty() {
        return Err(Error::invalid(format!(
            "lexicon file {} is empty",
            path.display()
        )));
    }
    Ok(set)
}

/// All trigger tokens of `title` with their token positions, in order.
pub fn extract_triggers(title: &str, lex: &TriggerLexicon) -> Vec<(String, usize)> {
    tokenize(title)
        .iter()
        .enumerate()
        .filter(|(_, t)| lex.triggers.contains(t.as_str()))
        .map(|(i, t)| (t.clone(), i))
        .collect()
}

/// Why a headline was excluded. The five categories mirror the filter
/// taxonomy; `NonEvent` is assigned only by the fine filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NonEvent,
    MissingComponent,
    MultiEvent,
    IrregularSyntax,
    Interrogative,
}

/// Outcome of [`coarse_filter`]: kept ∪ rejected partitions the input.
#[derive(Debug, Clone, Default)]
pub struct CoarseReport {
    pub kept: Vec<Headline>,
    pub rejected: Vec<(Headline, RejectReason)>,
}

/// Segment delimiters counted by the irregular-syntax rule.
const SEGMENT_DELIMITERS: [&str; 3] = ["|", "丨", " - "];

fn delimiter_count(title: &str) -> usize {
    SEGMENT_DELIMITERS
        .iter()
        .map(|d| title.matches(d).count())
        .sum()
}

/// Applies the rule filters to one headline. Rules are checked in a fixed
/// order and the first violated rule is the reported reason:
/// irregular syntax, interrogative, multi-event, missing component.
pub fn coarse_check(
    title: &str,
    lex: &TriggerLexicon,
    config: &CoarseConfig,
) -> Option<RejectReason> {
    let tokens = tokenize(title);
    if tokens.len() < config.min_tokens
        || tokens.len() > config.max_tokens
        || delimiter_count(title) > config.max_delimiters
    {
        return Some(RejectReason::IrregularSyntax);
    }
    let trimmed = title.trim_end();
    if trimmed.ends_with('?')
        || trimmed.ends_with('？')
        || tokens.iter().any(|t| lex.interrogatives.contains(t.as_str()))
    {
        return Some(RejectReason::Interrogative);
    }
    let trigger_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lex.triggers.contains(t.as_str()))
        .map(|(i, _)| i)
        .collect();
    if trigger_positions.len() > 2 {
        return Some(RejectReason::MultiEvent);
    }
    // An event needs a subject before its predicate.
    if trigger_positions.is_empty() || trigger_positions[0] == 0 {
        return Some(RejectReason::MissingComponent);
    }
    None
}

/// Partitions headlines into kept and rejected-with-reason.
pub fn coarse_filter(
    headlines: &[Headline],
    lex: &TriggerLexicon,
    config: &CoarseConfig,
) -> CoarseReport {
    let mut report = CoarseReport::default();
    for h in headlines {
        match coarse_check(&h.title, lex, config) {
            None => report.kept.push(h.clone()),
            Some(reason) => report.rejected.push((h.clone(), reason)),
        }
    }
    report
}

/// Sparse feature vector: sorted (index, value) pairs plus the dense tail
/// starting at `hash_dim` (token count, trigger count, interrogative flag).
pub type SparseVec = Vec<(u32, f64)>;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a; stable across runs and platforms, unlike `DefaultHasher`.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hashed bag of unigrams and bigrams plus three dense features.
///
/// `hash_dim` must be a power of two; dense features live at indices
/// `hash_dim` (token count), `hash_dim+1` (trigger count) and
/// `hash_dim+2` (interrogative flag).
pub fn featurize_title(title: &str, lex: &TriggerLexicon, hash_dim: usize) -> SparseVec {
    debug_assert!(hash_dim.is_power_of_two());
    let tokens = tokenize(title);
    let mask = (hash_dim - 1) as u64;
    let mut slots: BTreeMap<u32, f64> = BTreeMap::new();
    for t in &tokens {
        let idx = (fnv1a(format!("u:{t}").as_bytes()) & mask) as u32;
        *slots.entry(idx).or_insert(0.0) += 1.0;
    }
    for w in tokens.tokens().windows(2) {
        let idx = (fnv1a(format!("b:{}\u{1f}{}", w[0], w[1]).as_bytes()) & mask) as u32;
        *slots.entry(idx).or_insert(0.0) += 1.0;
    }
    let trigger_count = tokens
        .iter()
        .filter(|t| lex.triggers.contains(t.as_str()))
        .count();
    let interrogative = title.trim_end().ends_with('?')
        || title.trim_end().ends_with('？')
        || tokens.iter().any(|t| lex.interrogatives.contains(t.as_str()));
    let base = hash_dim as u32;
    let mut v: SparseVec = slots.into_iter().collect();
    if !tokens.is_empty() {
        v.push((base, tokens.len() as f64));
    }
    if trigger_count > 0 {
        v.push((base + 1, trigger_count as f64));
    }
    if interrogative {
        v.push((base + 2, 1.0));
    }
    v
}

/// Logistic regression over [`featurize_title`] output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FineFilterModel {
    /// Sparse weights keyed by feature id (sorted map for stable output).
    pub weights: BTreeMap<u32, f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl FineFilterModel {
    pub fn zeroed(threshold: f64) -> Self {
        FineFilterModel {
            weights: BTreeMap::new(),
            bias: 0.0,
            threshold,
        }
    }

    /// Event probability in (0, 1).
    pub fn score(&self, fv: &SparseVec) -> f64 {
        let z: f64 = self.bias
            + fv.iter()
                .map(|(i, x)| self.weights.get(i).copied().unwrap_or(0.0) * x)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::BadArtifact(e.to_string()))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn mean_log_loss(samples: &[(SparseVec, f64)], model: &FineFilterModel) -> f64 {
    let mut loss = 0.0;
    for (fv, y) in samples {
        let p = model.score(fv).clamp(1e-12, 1.0 - 1e-12);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    loss / samples.len() as f64
}

/// Training outcome: the model plus its per-epoch loss curve.
#[derive(Debug, Clone)]
pub struct FineTrainOutcome {
    pub model: FineFilterModel,
    pub loss_curve: Vec<f64>,
}

/// Trains the fine filter by full-batch gradient descent with backtracking
/// line search, which keeps the loss non-increasing every epoch.
///
/// Errors unless both classes have at least two examples. Zero epochs
/// yields the zero model (score 0.5 everywhere).
pub fn train_fine_filter(
    labeled: &[(String, bool)],
    lex: &TriggerLexicon,
    config: &FineFilterConfig,
) -> Result<FineTrainOutcome> {
    let pos = labeled.iter().filter(|(_, y)| *y).count();
    let neg = labeled.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::invalid(format!(
            "fine filter training needs >= 2 examples per class (got {pos} positive, {neg} negative)"
        )));
    }
    let samples: Vec<(SparseVec, f64)> = labeled
        .iter()
        .map(|(title, y)| {
            (
                featurize_title(title, lex, config.hash_dim),
                if *y { 1.0 } else { 0.0 },
            )
        })
        .collect();

    let mut model = FineFilterModel::zeroed(config.threshold);
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut loss = mean_log_loss(&samples, &model);
    let n = samples.len() as f64;

    for _ in 0..config.epochs {
        // Full-batch gradient of the mean log loss.
        let mut grad: HashMap<u32, f64> = HashMap::new();
        let mut grad_bias = 0.0;
        for (fv, y) in &samples {
            let g = model.score(fv) - y;
            grad_bias += g / n;
            for (i, x) in fv {
                *grad.entry(*i).or_insert(0.0) += g * x / n;
            }
        }
        // Backtracking line search: halve the step until the loss stops
        // increasing; bail out once steps become negligible.
        let mut step = config.lr;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = model.clone();
            cand.bias -= step * grad_bias;
            for (i, g) in &grad {
                *cand.weights.entry(*i).or_insert(0.0) -= step * g;
            }
            let cand_loss = mean_log_loss(&samples, &cand);
            if cand_loss <= loss + 1e-12 {
                model = cand;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        loss_curve.push(loss);
        if !accepted {
            break;
        }
    }
    Ok(FineTrainOutcome { model, loss_curve })
}

/// A headline that survived both filters, stamped with ingestion time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventCandidate {
    pub id: String,
    pub title: String,
    pub site: String,
    pub page_type: String,
    pub publish_ts: i64,
    /// When the pipeline first saw this candidate (injected clock).
    pub found_ts: i64,
    pub score: f64,
}

/// Applies the trained classifier: keep iff `score >= threshold` (ties at
/// the threshold are kept). Rejections carry [`RejectReason::NonEvent`].
pub fn fine_filter(
    candidates: &[Headline],
    model: &FineFilterModel,
    lex: &TriggerLexicon,
    hash_dim: usize,
    now_ts: i64,
) -> (Vec<EventCandidate>, Vec<(Headline, RejectReason)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for h in candidates {
        let score = model.score(&featurize_title(&h.title, lex, hash_dim));
        if score >= model.threshold {
            kept.push(EventCandidate {
                id: h.id.clone(),
                title: h.title.clone(),
                site: h.site.clone(),
                page_type: h.page_type.clone(),
                publish_ts: h.publish_ts,
                found_ts: now_ts,
                score,
            });
        } else {
            rejected.push((h.clone(), RejectReason::NonEvent));
        }
    }
    (kept, rejected)
}

#[cfg(test)]
pub(crate) fn test_lexicon() -> TriggerLexicon {
    TriggerLexicon::new(
        ["acquires", "wins", "loses", "quits", "launches", "resigns"].map(String::from),
        ["why", "how", "what"].map(String::from),
        ["acme", "beta", "gamma"].map(String::from),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CoarseConfig;

    fn headline(id: &str, title: &str) -> Headline {
        Headline {
            id: id.into(),
            title: title.into(),
            site: "news.example".into(),
            page_type: "news".into(),
            publish_ts: 1_700_000_000,
        }
    }

    #[test]
    fn load_headlines_dedup_keeps_earliest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"id\":\"a\",\"title\":\"t1\",\"site\":\"s\",\"page_type\":\"p\",\"publish_ts\":100}\n",
                "{\"id\":\"a\",\"title\":\"t2\",\"site\":\"s\",\"page_type\":\"p\",\"publish_ts\":50}\n",
            ),
        )
        .unwrap();
        let hs = load_headlines(&path).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].publish_ts, 50);
        assert_eq!(hs[0].title, "t2");
    }

    #[test]
    fn load_headlines_missing_title_names_field_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"id\":\"a\",\"title\":\"t\",\"site\":\"s\",\"page_type\":\"p\",\"publish_ts\":1}\n",
                "{\"id\":\"b\",\"site\":\"s\",\"page_type\":\"p\",\"publish_ts\":1}\n",
            ),
        )
        .unwrap();
        let err = load_headlines(&path).unwrap_err();
        assert_eq!(err.to_string(), "missing field title at line 2");
    }

    #[test]
    fn load_headlines_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_headlines(&path).unwrap().is_empty());
    }

    #[test]
    fn extract_triggers_positions() {
        let lex = test_lexicon();
        assert!(extract_triggers("nothing here", &lex).is_empty());
        assert_eq!(
            extract_triggers("acme acquires beta", &lex),
            vec![("acquires".to_string(), 1)]
        );
        let hits = extract_triggers("x wins then y loses then z quits", &lex);
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0], ("wins".to_string(), 1));
        assert_eq!(hits[2], ("quits".to_string(), 7));
    }

    #[test]
    fn coarse_filter_reasons() {
        let lex = test_lexicon();
        let cfg = CoarseConfig::default();
        let cases = [
            ("x wins then y loses then z quits", Some(RejectReason::MultiEvent)),
            ("acquires beta today", Some(RejectReason::MissingComponent)),
            ("acme acquires beta", None),
            ("acme wins again today?", Some(RejectReason::Interrogative)),
            ("why acme wins today", Some(RejectReason::Interrogative)),
            ("acme beta", Some(RejectReason::IrregularSyntax)), // too short
            ("a | b | c | acme wins big", Some(RejectReason::IrregularSyntax)),
            ("acme beta gamma deal", Some(RejectReason::MissingComponent)), // no trigger
        ];
        for (title, expect) in cases {
            assert_eq!(coarse_check(title, &lex, &cfg), expect, "title {title:?}");
        }
    }

    #[test]
    fn coarse_filter_partitions_and_is_stable_on_kept() {
        let lex = test_lexicon();
        let cfg = CoarseConfig::default();
        let hs: Vec<Headline> = [
            "acme acquires beta",
            "acquires beta today",
            "x wins then y loses then z quits",
            "beta launches gadget line",
            "why beta wins",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| headline(&format!("h{i}"), t))
        .collect();
        let report = coarse_filter(&hs, &lex, &cfg);
        assert_eq!(report.kept.len() + report.rejected.len(), hs.len());
        let again = coarse_filter(&report.kept, &lex, &cfg);
        assert!(again.rejected.is_empty());
        assert_eq!(again.kept.len(), report.kept.len());
    }

    #[test]
    fn featurize_deterministic_and_local() {
        let lex = test_lexicon();
        let dim = 1 << 18;
        assert_eq!(
            featurize_title("acme acquires beta", &lex, dim),
            featurize_title("acme acquires beta", &lex, dim)
        );
        let empty = featurize_title("", &lex, dim);
        assert!(empty.is_empty());
        // Appending one token touches at most 3 hashed slots.
        let a = featurize_title("acme acquires beta", &lex, dim);
        let b = featurize_title("acme acquires beta today", &lex, dim);
        let ha: HashMap<u32, f64> = a.iter().filter(|(i, _)| *i < dim as u32).cloned().collect();
        let hb: HashMap<u32, f64> = b.iter().filter(|(i, _)| *i < dim as u32).cloned().collect();
        let mut diff = 0;
        for (k, v) in &hb {
            if ha.get(k) != Some(v) {
                diff += 1;
            }
        }
        for k in ha.keys() {
            if !hb.contains_key(k) {
                diff += 1;
            }
        }
        assert!(diff <= 3, "{diff} slots differ");
    }

    fn toy_training_set() -> Vec<(String, bool)> {
        let mut set = Vec::new();
        for i in 0..10 {
            set.push((format!("acme acquires beta unit{i}"), true));
            set.push((format!("random musings column part{i}"), false));
        }
        set
    }

    #[test]
    fn train_fine_filter_separable_reaches_full_accuracy() {
        let lex = test_lexicon();
        let cfg = FineFilterConfig::default();
        let data = toy_training_set();
        let out = train_fine_filter(&data, &lex, &cfg).unwrap();
        let correct = data
            .iter()
            .filter(|(t, y)| {
                let p = out.model.score(&featurize_title(t, &lex, cfg.hash_dim));
                (p >= 0.5) == *y
            })
            .count();
        assert_eq!(correct, data.len());
        for w in out.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "loss increased: {w:?}");
        }
    }

    #[test]
    fn train_fine_filter_label_flip_symmetry() {
        let lex = test_lexicon();
        let cfg = FineFilterConfig::default();
        let data = toy_training_set();
        let flipped: Vec<(String, bool)> = data.iter().map(|(t, y)| (t.clone(), !y)).collect();
        let out = train_fine_filter(&flipped, &lex, &cfg).unwrap();
        let correct = flipped
            .iter()
            .filter(|(t, y)| {
                let p = out.model.score(&featurize_title(t, &lex, cfg.hash_dim));
                (p >= 0.5) == *y
            })
            .count();
        assert_eq!(correct, flipped.len());
    }

    #[test]
    fn train_fine_filter_rejects_single_class() {
        let lex = test_lexicon();
        let cfg = FineFilterConfig::default();
        let data: Vec<(String, bool)> =
            (0..5).map(|i| (format!("title {i} text"), true)).collect();
        assert!(train_fine_filter(&data, &lex, &cfg).is_err());
    }

    #[test]
    fn zero_epochs_scores_half_everywhere() {
        let lex = test_lexicon();
        let cfg = FineFilterConfig {
            epochs: 0,
            ..FineFilterConfig::default()
        };
        let out = train_fine_filter(&toy_training_set(), &lex, &cfg).unwrap();
        assert!(out.model.weights.is_empty());
        let fv = featurize_title("anything at all", &lex, cfg.hash_dim);
        assert_eq!(out.model.score(&fv), 0.5);
    }

    #[test]
    fn fine_filter_threshold_semantics() {
        let lex = test_lexicon();
        let hs = vec![
            headline("a", "acme acquires beta"),
            headline("b", "beta wins cup"),
        ];
        // threshold 0 keeps everything
        let keep_all = FineFilterModel::zeroed(0.0);
        let (kept, rej) = fine_filter(&hs, &keep_all, &lex, 1 << 18, 777);
        assert_eq!(kept.len(), 2);
        assert!(rej.is_empty());
        assert!(kept.iter().all(|c| c.found_ts == 777));
        // threshold 1 drops everything (scores are strictly < 1)
        let keep_none = FineFilterModel::zeroed(1.0);
        let (kept, rej) = fine_filter(&hs, &keep_none, &lex, 1 << 18, 777);
        assert!(kept.is_empty());
        assert_eq!(rej.len(), 2);
        assert!(rej.iter().all(|(_, r)| *r == RejectReason::NonEvent));
        // scores exactly at the threshold are kept
        let at_half = FineFilterModel::zeroed(0.5);
        let (kept, _) = fine_filter(&hs, &at_half, &lex, 1 << 18, 777);
        assert_eq!(kept.len(), 2, "zero model scores 0.5 == threshold");
    }

    #[test]
    fn lexicon_load_validates_entries() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("triggers.txt");
        let i = dir.path().join("interr.txt");
        let e = dir.path().join("entities.txt");
        std::fs::write(&t, "wins\nacquires\n").unwrap();
        std::fs::write(&i, "why\n").unwrap();
        std::fs::write(&e, "acme\n").unwrap();
        let lex = TriggerLexicon::load(&t, &i, &e).unwrap();
        assert!(lex.triggers.contains("wins"));

        std::fs::write(&t, "two words\n").unwrap();
        assert!(TriggerLexicon::load(&t, &i, &e).is_err());
        std::fs::write(&t, "\n\n").unwrap();
        assert!(TriggerLexicon::load(&t, &i, &e).is_err());
    }
}
