//! Event reformulation: keyword extraction, prompt assembly, positive-pair
//! construction for contrastive training, training-pair mining from click
//! logs, relevance filtering, and the extractive reformulator that turns
//! filtered headlines into concise event phrases.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collect::{ClickRecord, EventCandidate, Headline, TriggerLexicon};
use crate::config::{PairFilterConfig, ReformulateConfig};
use crate::embedding::{embed_score, EncoderModel};
use crate::jsonl;
use crate::textcore::{bleu, is_cjk, jaccard_distance, rouge_l, tfidf, tokenize, CorpusStats};
use crate::{Error, Result};

/// Marker tokens used in prompt layouts.
pub const CLS: &str = "⟨CLS⟩";
pub const SEP: &str = "⟨SEP⟩";

/// A template with exactly one `{kw}` placeholder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordTemplate {
    template: String,
}

impl Default for KeywordTemplate {
    fn default() -> Self {
        KeywordTemplate { template: "keyword: {kw}".into() }
    }
}

impl KeywordTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if template.matches("{kw}").count() != 1 {
            return Err(Error::invalid(format!(
                "keyword template must contain exactly one {{kw}} placeholder: {template:?}"
            )));
        }
        Ok(KeywordTemplate { template })
    }

    pub fn render(&self, keyword: &str) -> String {
        self.template.replace("{kw}", keyword)
    }

    fn parts(&self) -> (&str, &str) {
        let at = self.template.find("{kw}").expect("validated placeholder");
        (&self.template[..at], &self.template[at + 4..])
    }
}

/// One prompted training/inference example in the fixed token layout.
///
/// Encoder side carries the headline; decoder side carries the rendered
/// keyword template and (during training) the target event:
/// `⟨CLS⟩H⟨SEP⟩` / `⟨CLS⟩T E⟨SEP⟩`. At inference E is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptedExample {
    pub encoder_input: String,
    pub decoder_input: String,
    pub headline: String,
    pub template_text: String,
    pub event: String,
}

/// Assembles the prompt layout. `event` may be empty (inference form).
pub fn build_prompt(
    headline: &str,
    event: &str,
    keyword: &str,
    template: &KeywordTemplate,
) -> Result<PromptedExample> {
    if keyword.is_empty() {
        return Err(Error::invalid("keyword must be non-empty"));
    }
    let template_text = template.render(keyword);
    Ok(PromptedExample {
        encoder_input: format!("{CLS}{headline}{SEP}"),
        decoder_input: format!("{CLS}{template_text} {event}{SEP}"),
        headline: headline.to_string(),
        template_text,
        event: event.to_string(),
    })
}

/// Recovers (H, T, E) from the two prompt strings; exact inverse of
/// [`build_prompt`] for any template and single-token keyword.
pub fn parse_prompt(
    encoder_input: &str,
    decoder_input: &str,
    template: &KeywordTemplate,
) -> Result<(String, String, String)> {
    let headline = strip_markers(encoder_input)?;
    let body = strip_markers(decoder_input)?;
    let (prefix, suffix) = template.parts();
    let rest = body
        .strip_prefix(prefix)
        .ok_or_else(|| Error::invalid("decoder input does not match template prefix"))?;
    // keyword runs until the template suffix followed by the separating
    // space; with an empty suffix it is the first whitespace-free span.
    let marker = format!("{suffix} ");
    let at = rest
        .find(&marker)
        .ok_or_else(|| Error::invalid("decoder input does not match template suffix"))?;
    let keyword = &rest[..at];
    let event = &rest[at + marker.len()..];
    let template_text = format!("{prefix}{keyword}{suffix}");
    Ok((headline.to_string(), template_text, event.to_string()))
}

fn strip_markers(s: &str) -> Result<&str> {
    s.strip_prefix(CLS)
        .and_then(|x| x.strip_suffix(SEP))
        .ok_or_else(|| Error::invalid("prompt string missing ⟨CLS⟩/⟨SEP⟩ markers"))
}

/// Picks the headline keyword: the highest-TF-IDF token among entity
/// lexicon members, falling back to the global TF-IDF argmax. Ties go to
/// the earlier position.
pub fn extract_keyword(
    headline: &str,
    stats: &CorpusStats,
    lex: &TriggerLexicon,
) -> Result<String> {
    let tokens = tokenize(headline);
    if tokens.is_empty() {
        return Err(Error::invalid("cannot extract keyword from empty headline"));
    }
    let pick = |entity_only: bool| -> Option<String> {
        let mut best: Option<(f64, String)> = None;
        for t in &tokens {
            if entity_only && !lex.entity_lexicon.contains(t.as_str()) {
                continue;
            }
            let w = tfidf(t, &tokens, stats);
            match &best {
                Some((bw, _)) if *bw >= w => {}
                _ => best = Some((w, t.clone())),
            }
        }
        best.map(|(_, t)| t)
    };
    Ok(pick(true).or_else(|| pick(false)).expect("non-empty tokens"))
}

/// Swaps two distinct token positions chosen uniformly from a seeded RNG;
/// the output is the space-joined swapped sequence (same token multiset).
pub fn make_positive_pair(headline: &str, seed: u64) -> Result<String> {
    let tokens = tokenize(headline);
    let n = tokens.len();
    if n < 2 {
        return Err(Error::invalid("positive pair needs at least two tokens"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let mut out: Vec<String> = tokens.iter().cloned().collect();
    out.swap(i, j);
    Ok(out.join(" "))
}

/// Where a training pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    ClickQuery,
    TriggerExtraction,
}

/// A <headline, event> training pair for the reformulation encoder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingPair {
    pub headline: String,
    pub event: String,
    pub source: PairSource,
}

/// Outcome of pair mining: pairs plus the count of clicks whose doc id
/// resolved to no headline.
#[derive(Debug, Clone, Default)]
pub struct MinedPairs {
    pub pairs: Vec<TrainingPair>,
    pub unresolved_clicks: usize,
}

/// Builds training pairs two ways: the clicked query as the target event,
/// and a trigger-window extraction from the headline itself.
pub fn build_training_pairs(
    clicklog: &[ClickRecord],
    headlines: &[Headline],
    lex: &TriggerLexicon,
    window: usize,
) -> MinedPairs {
    let by_id: HashMap<&str, &Headline> =
        headlines.iter().map(|h| (h.id.as_str(), h)).collect();
    let mut out = MinedPairs::default();
    for click in clicklog {
        match by_id.get(click.doc_id.as_str()) {
            Some(h) if !click.query.is_empty() => out.pairs.push(TrainingPair {
                headline: h.title.clone(),
                event: click.query.clone(),
                source: PairSource::ClickQuery,
            }),
            Some(_) => {}
            None => out.unresolved_clicks += 1,
        }
    }
    for h in headlines {
        if let Some(event) = trigger_window_extraction(&h.title, lex, window) {
            out.pairs.push(TrainingPair {
                headline: h.title.clone(),
                event,
                source: PairSource::TriggerExtraction,
            });
        }
    }
    out
}

/// Extraction target: from the token just before the first trigger
/// through `window` tokens past it. None when the title has no trigger or
/// the trigger opens the title.
fn trigger_window_extraction(title: &str, lex: &TriggerLexicon, window: usize) -> Option<String> {
    let tokens = tokenize(title);
    let first = tokens
        .iter()
        .position(|t| lex.triggers.contains(t.as_str()))?;
    if first == 0 {
        return None;
    }
    let end = (first + window).min(tokens.len() - 1);
    Some(tokens.tokens()[first - 1..=end].join(" "))
}

/// Keeps pairs passing both relevance gates: token overlap
/// (`jaccard_distance ≤ max_jaccard`) and embedding similarity
/// (`embed_score ≥ min_embed`).
pub fn filter_pairs(
    pairs: &[TrainingPair],
    model: &EncoderModel,
    thresholds: &PairFilterConfig,
) -> Vec<TrainingPair> {
    pairs
        .iter()
        .filter(|p| {
            let h = tokenize(&p.headline);
            let e = tokenize(&p.event);
            jaccard_distance(&h, &e) <= thresholds.max_jaccard
                && embed_score(model, &h, &e) >= thresholds.min_embed
        })
        .cloned()
        .collect()
}

/// Strips decorations a headline carries beyond the event itself:
/// leading bracketed tags, the trailing segment after the last site
/// delimiter, and trailing punctuation.
pub fn cleanup_title(title: &str) -> String {
    let mut s = title.trim();
    loop {
        let t = s.trim_start();
        let stripped = strip_bracket_group(t, '【', '】')
            .or_else(|| strip_bracket_group(t, '[', ']'));
        match stripped {
            Some(rest) => s = rest,
            None => {
                s = t;
                break;
            }
        }
    }
    let mut owned = s.to_string();
    for delim in ["|", "丨", " - "] {
        if let Some(at) = owned.rfind(delim) {
            owned.truncate(at);
        }
    }
    owned
        .trim_end_matches(|c: char| !(c.is_alphanumeric() || is_cjk(c)))
        .trim()
        .to_string()
}

fn strip_bracket_group(s: &str, open: char, close: char) -> Option<&str> {
    let rest = s.strip_prefix(open)?;
    let end = rest.find(close)?;
    Some(&rest[end + close.len_utf8()..])
}

/// Extractive reformulation: cleaned title truncated to `window` tokens
/// past the first trigger. The output is always a contiguous token span
/// of the cleaned title; headlines with no trigger after cleanup are not
/// reformulatable.
pub fn extractive_reformulate(
    headline: &str,
    lex: &TriggerLexicon,
    config: &ReformulateConfig,
) -> Result<String> {
    let cleaned = cleanup_title(headline);
    let tokens = tokenize(&cleaned);
    let first = tokens
        .iter()
        .position(|t| lex.triggers.contains(t.as_str()))
        .ok_or_else(|| Error::invalid(format!("not reformulatable: {headline:?}")))?;
    let end = (first + config.window).min(tokens.len() - 1);
    Ok(tokens.tokens()[..=end].join(" "))
}

/// A reformulated concise event (`events.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPhrase {
    pub event_id: String,
    pub text: String,
    pub source_headline_id: String,
    pub found_ts: i64,
}

pub fn load_events(path: &Path) -> Result<Vec<EventPhrase>> {
    jsonl::read_jsonl(path, &["event_id", "text", "source_headline_id", "found_ts"])
}

pub fn save_events(path: &Path, events: &[EventPhrase]) -> Result<()> {
    jsonl::write_jsonl(path, events)
}

/// Reformulates every candidate; failures are returned with the
/// candidate id and do not abort the batch.
pub fn reformulate_candidates(
    candidates: &[EventCandidate],
    lex: &TriggerLexicon,
    config: &ReformulateConfig,
) -> (Vec<EventPhrase>, Vec<(String, String)>) {
    let mut events = Vec::new();
    let mut failures = Vec::new();
    for c in candidates {
        match extractive_reformulate(&c.title, lex, config) {
            Ok(text) => events.push(EventPhrase {
                event_id: format!("ev-{}", c.id),
                text,
                source_headline_id: c.id.clone(),
                found_ts: c.found_ts,
            }),
            Err(e) => failures.push((c.id.clone(), e.to_string())),
        }
    }
    (events, failures)
}

/// A gold <title, event, topic> record (`title2eventphrase.jsonl`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldRecord {
    pub title: String,
    pub event: String,
    pub topic: String,
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldRecord>> {
    jsonl::read_jsonl(path, &["title", "event", "topic"])
}

/// A prediction row (`predictions.jsonl`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub event: String,
}

/// Per-example generation scores plus their means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenEvalReport {
    pub rouge_l: f64,
    pub bleu: f64,
    pub embed_score: f64,
    pub rows: Vec<GenEvalRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenEvalRow {
    pub prediction: String,
    pub reference: String,
    pub rouge_l: f64,
    pub bleu: f64,
    pub embed_score: f64,
}

impl GenEvalReport {
    /// Tab-separated rendering, one row per example plus a mean row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("prediction\treference\trouge_l\tbleu\tembed_score\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                r.prediction, r.reference, r.rouge_l, r.bleu, r.embed_score
            ));
        }
        out.push_str(&format!(
            "<mean>\t\t{:.6}\t{:.6}\t{:.6}\n",
            self.rouge_l, self.bleu, self.embed_score
        ));
        out
    }
}

/// Scores aligned predictions against gold events with ROUGE-L, BLEU and
/// embedding cosine; aggregates are arithmetic means of the rows.
pub fn evaluate_generation(
    predictions: &[String],
    gold: &[GoldRecord],
    model: &EncoderModel,
) -> Result<GenEvalReport> {
    if gold.is_empty() {
        return Err(Error::invalid("generation eval needs a non-empty gold set"));
    }
    if predictions.len() != gold.len() {
        return Err(Error::invalid(format!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        )));
    }
    let mut rows = Vec::with_capacity(gold.len());
    for (pred, g) in predictions.iter().zip(gold) {
        let p = tokenize(pred);
        let r = tokenize(&g.event);
        rows.push(GenEvalRow {
            prediction: pred.clone(),
            reference: g.event.clone(),
            rouge_l: rouge_l(&p, &r),
            bleu: bleu(&p, &r, 4),
            embed_score: embed_score(model, &p, &r),
        });
    }
    let n = rows.len() as f64;
    Ok(GenEvalReport {
        rouge_l: rows.iter().map(|r| r.rouge_l).sum::<f64>() / n,
        bleu: rows.iter().map(|r| r.bleu).sum::<f64>() / n,
        embed_score: rows.iter().map(|r| r.embed_score).sum::<f64>() / n,
        rows,
    })
}
