//! The staged offline pipeline: collect → reformulate → encode/index →
//! cluster. Every stage reads and writes artifacts under one data
//! directory, so stages are independently resumable and a rerun with
//! unchanged inputs reproduces every artifact byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collect::{
    coarse_filter, fine_filter, load_headlines, load_labeled, train_fine_filter, TriggerLexicon,
};
use crate::config::Config;
use crate::embedding::EncoderModel;
use crate::jsonl;
use crate::reformulate::{load_events, reformulate_candidates, save_events, EventPhrase};
use crate::retrieve::{build_index, cluster_events, DualTower, EventIndex};
use crate::textcore::tokenize;
use crate::{Error, Result};

/// Canonical file layout inside one data directory.
#[derive(Debug, Clone)]
pub struct DataPaths {
    pub root: PathBuf,
}

impl DataPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataPaths { root: root.into() }
    }

    fn join(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    // inputs
    pub fn headlines(&self) -> PathBuf { self.join("headlines.jsonl") }
    pub fn clicklog(&self) -> PathBuf { self.join("clicklog.jsonl") }
    pub fn labeled(&self) -> PathBuf { self.join("labeled.jsonl") }
    pub fn triggers(&self) -> PathBuf { self.join("triggers.txt") }
    pub fn interrogatives(&self) -> PathBuf { self.join("interrogatives.txt") }
    pub fn entities(&self) -> PathBuf { self.join("entities.txt") }
    pub fn gold(&self) -> PathBuf { self.join("title2eventphrase.jsonl") }
    pub fn rank_samples(&self) -> PathBuf { self.join("ranksamples.jsonl") }

    // artifacts
    pub fn candidates(&self) -> PathBuf { self.join("candidates.jsonl") }
    pub fn fine_filter_model(&self) -> PathBuf { self.join("fine_filter.json") }
    pub fn events(&self) -> PathBuf { self.join("events.jsonl") }
    pub fn encoder(&self) -> PathBuf { self.join("encoder.json") }
    pub fn tower_stage1(&self) -> PathBuf { self.join("tower-stage1.json") }
    pub fn tower_stage2(&self) -> PathBuf { self.join("tower-stage2.json") }
    pub fn hard_negatives(&self) -> PathBuf { self.join("hard_negatives.jsonl") }
    pub fn index(&self) -> PathBuf { self.join("index.evqi") }
    pub fn event_clusters(&self) -> PathBuf { self.join("event_clusters.jsonl") }
    pub fn ranker(&self) -> PathBuf { self.join("ranker.json") }
    pub fn baseline_clusters(&self) -> PathBuf { self.join("clusters.jsonl") }
    pub fn predictions(&self) -> PathBuf { self.join("predictions.jsonl") }
    pub fn report(&self) -> PathBuf { self.join("run_report.json") }

    pub fn lexicon(&self) -> Result<TriggerLexicon> {
        TriggerLexicon::load(&self.triggers(), &self.interrogatives(), &self.entities())
    }
}

/// Per-stage accounting: `input = output + rejected` holds at every
/// stage; `detail` carries rejection reasons and artifact notes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub input: u64,
    pub output: u64,
    pub rejected: u64,
    pub detail: BTreeMap<String, u64>,
}

impl StageReport {
    fn empty(name: &str) -> Self {
        StageReport {
            name: name.into(),
            input: 0,
            output: 0,
            rejected: 0,
            detail: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
}

impl PipelineReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn in_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: stage.to_string(), source: Box::new(e) })
}

/// Collect stage: coarse rules, fine-classifier training and filtering.
/// Writes `candidates.jsonl` and `fine_filter.json`; empty input writes
/// nothing and reports zeros.
pub fn stage_collect(paths: &DataPaths, config: &Config, now_ts: i64) -> Result<StageReport> {
    const STAGE: &str = "collect";
    let headlines = in_stage(STAGE, load_headlines(&paths.headlines()))?;
    let mut report = StageReport::empty(STAGE);
    report.input = headlines.len() as u64;
    if headlines.is_empty() {
        return Ok(report);
    }
    let lex = in_stage(STAGE, paths.lexicon())?;
    let labeled = in_stage(STAGE, load_labeled(&paths.labeled()))?;
    let labeled_pairs: Vec<(String, bool)> =
        labeled.into_iter().map(|l| (l.title, l.is_event)).collect();

    let coarse = coarse_filter(&headlines, &lex, &config.coarse);
    for (_, reason) in &coarse.rejected {
        let key = format!("coarse_{}", serde_json::to_string(reason).unwrap().trim_matches('"'));
        *report.detail.entry(key).or_insert(0) += 1;
    }
    let trained = in_stage(STAGE, train_fine_filter(&labeled_pairs, &lex, &config.fine))?;
    in_stage(STAGE, trained.model.save(&paths.fine_filter_model()))?;
    let (kept, fine_rejected) =
        fine_filter(&coarse.kept, &trained.model, &lex, config.fine.hash_dim, now_ts);
    *report.detail.entry("fine_non_event".into()).or_insert(0) += fine_rejected.len() as u64;

    report.output = kept.len() as u64;
    report.rejected = (coarse.rejected.len() + fine_rejected.len()) as u64;
    in_stage(STAGE, jsonl::write_jsonl(&paths.candidates(), &kept))?;
    Ok(report)
}

/// Reformulation stage: candidates → concise event phrases.
pub fn stage_reformulate(paths: &DataPaths, config: &Config) -> Result<StageReport> {
    const STAGE: &str = "reformulate";
    let candidates: Vec<crate::collect::EventCandidate> = in_stage(
        STAGE,
        jsonl::read_jsonl(&paths.candidates(), &["id", "title", "found_ts"]),
    )?;
    let mut report = StageReport::empty(STAGE);
    report.input = candidates.len() as u64;
    if candidates.is_empty() {
        return Ok(report);
    }
    let lex = in_stage(STAGE, paths.lexicon())?;
    let (events, failures) = reformulate_candidates(&candidates, &lex, &config.reformulate);
    report.output = events.len() as u64;
    report.rejected = failures.len() as u64;
    *report.detail.entry("not_reformulatable".into()).or_insert(0) = failures.len() as u64;
    in_stage(STAGE, save_events(&paths.events(), &events))?;
    Ok(report)
}

/// Encode/index stage: loads or initializes the encoder, encodes every
/// event and freezes the vector index (with IVF tables).
pub fn stage_index(paths: &DataPaths, config: &Config) -> Result<StageReport> {
    const STAGE: &str = "index";
    let events = in_stage(STAGE, load_events(&paths.events()))?;
    let mut report = StageReport::empty(STAGE);
    report.input = events.len() as u64;
    if events.is_empty() {
        return Ok(report);
    }
    let encoder = load_or_init_encoder(paths, config, &events)?;
    let tower = DualTower::shared(encoder);
    let index = in_stage(
        STAGE,
        build_index(&tower, &events, true, config.retriever.kmeans_iters, config.seed.0),
    )?;
    in_stage(STAGE, index.save(&paths.index()))?;
    report.output = index.len() as u64;
    Ok(report)
}

/// Loads `encoder.json` when present; otherwise initializes one from the
/// event texts (seeded) and persists it for later stages.
pub fn load_or_init_encoder(
    paths: &DataPaths,
    config: &Config,
    events: &[EventPhrase],
) -> Result<EncoderModel> {
    const STAGE: &str = "index";
    if paths.encoder().exists() {
        return in_stage(STAGE, EncoderModel::load(&paths.encoder()));
    }
    let seqs: Vec<crate::textcore::TokenSeq> =
        events.iter().map(|e| tokenize(&e.text)).collect();
    let encoder = EncoderModel::init_from_texts(
        seqs.iter(),
        config.encoder.dim,
        config.encoder.min_token_freq,
        config.seed.0,
    );
    in_stage(STAGE, encoder.save(&paths.encoder()))?;
    Ok(encoder)
}

/// One row of `event_clusters.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventClusterRecord {
    pub event_id: String,
    pub cluster: usize,
    pub size: usize,
}

/// Clustering stage: single-link components over the frozen index.
pub fn stage_cluster(paths: &DataPaths, config: &Config) -> Result<StageReport> {
    const STAGE: &str = "cluster";
    let index = in_stage(STAGE, EventIndex::load(&paths.index()))?;
    let clusters = in_stage(STAGE, cluster_events(&index, config.retriever.cluster_theta))?;
    let mut records: Vec<EventClusterRecord> = index
        .ids
        .iter()
        .enumerate()
        .map(|(row, id)| EventClusterRecord {
            event_id: id.clone(),
            cluster: clusters.cluster_of_row(row),
            size: clusters.size_of_row(row),
        })
        .collect();
    records.sort_by(|a, b| a.event_id.cmp(&b.event_id));
    in_stage(STAGE, jsonl::write_jsonl(&paths.event_clusters(), &records))?;
    let mut report = StageReport::empty(STAGE);
    report.input = index.len() as u64;
    report.output = records.len() as u64;
    report
        .detail
        .insert("clusters".into(), clusters.sizes.len() as u64);
    Ok(report)
}

pub fn load_event_clusters(path: &Path) -> Result<Vec<EventClusterRecord>> {
    jsonl::read_jsonl(path, &["event_id", "cluster", "size"])
}

/// Runs all four stages in order, skipping downstream stages once a
/// stage produces nothing. The report is written to `run_report.json`
/// unless the input was empty (no artifacts for empty inputs).
pub fn run_offline_pipeline(
    paths: &DataPaths,
    config: &Config,
    now_ts: i64,
) -> Result<PipelineReport> {
    let mut stages = Vec::new();
    let collect = stage_collect(paths, config, now_ts)?;
    let empty_input = collect.input == 0;
    let mut produced = collect.output > 0;
    stages.push(collect);
    for (name, run) in [
        ("reformulate", stage_reformulate as fn(&DataPaths, &Config) -> Result<StageReport>),
        ("index", stage_index),
        ("cluster", stage_cluster),
    ] {
        if !produced {
            stages.push(StageReport::empty(name));
            continue;
        }
        let report = run(paths, config)?;
        produced = report.output > 0;
        stages.push(report);
    }
    let report = PipelineReport { stages };
    if !empty_input {
        report.save(&paths.report())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_inputs(dir: &Path) {
        let paths = DataPaths::new(dir);
        fs::write(
            paths.headlines(),
            concat!(
                "{\"id\":\"h1\",\"title\":\"acme acquires beta today\",\"site\":\"s\",\"page_type\":\"news\",\"publish_ts\":1000}\n",
                "{\"id\":\"h2\",\"title\":\"why is water wet?\",\"site\":\"s\",\"page_type\":\"news\",\"publish_ts\":1001}\n",
                "{\"id\":\"h3\",\"title\":\"gamma wins the cup final\",\"site\":\"s\",\"page_type\":\"news\",\"publish_ts\":1002}\n",
                "{\"id\":\"h4\",\"title\":\"plain words without predicate\",\"site\":\"s\",\"page_type\":\"news\",\"publish_ts\":1003}\n",
            ),
        )
        .unwrap();
        let mut labeled = String::new();
        for i in 0..6 {
            labeled.push_str(&format!(
                "{{\"title\":\"acme acquires unit{i}\",\"is_event\":true}}\n"
            ));
            labeled.push_str(&format!(
                "{{\"title\":\"random opinion piece {i}\",\"is_event\":false}}\n"
            ));
        }
        fs::write(paths.labeled(), labeled).unwrap();
        fs::write(paths.triggers(), "acquires\nwins\nlaunches\n").unwrap();
        fs::write(paths.interrogatives(), "why\nhow\n").unwrap();
        fs::write(paths.entities(), "acme\nbeta\ngamma\n").unwrap();
    }

    #[test]
    fn pipeline_runs_and_counts_conserve() {
        let dir = tempfile::tempdir().unwrap();
        write_inputs(dir.path());
        let paths = DataPaths::new(dir.path());
        let config = Config::default();
        let report = run_offline_pipeline(&paths, &config, 5000).unwrap();
        let collect = &report.stages[0];
        assert_eq!(collect.input, 4);
        assert_eq!(collect.output + collect.rejected, collect.input);
        assert!(paths.candidates().exists());
        assert!(paths.events().exists());
        assert!(paths.index().exists());
        assert!(paths.event_clusters().exists());
        assert!(paths.report().exists());
        let reform = &report.stages[1];
        assert_eq!(reform.output + reform.rejected, reform.input);
        // candidates carry the injected clock value
        let cands: Vec<crate::collect::EventCandidate> =
            jsonl::read_jsonl(&paths.candidates(), &["id"]).unwrap();
        assert!(cands.iter().all(|c| c.found_ts == 5000));
    }

    #[test]
    fn empty_headlines_produce_zero_report_and_no_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        write_inputs(dir.path());
        let paths = DataPaths::new(dir.path());
        fs::write(paths.headlines(), "").unwrap();
        let report = run_offline_pipeline(&paths, &Config::default(), 0).unwrap();
        assert!(report.stages.iter().all(|s| s.input == 0 && s.output == 0));
        assert!(!paths.candidates().exists());
        assert!(!paths.events().exists());
        assert!(!paths.index().exists());
        assert!(!paths.report().exists());
    }

    #[test]
    fn rerun_is_bit_identical() {
        let run = |dir: &Path| -> Vec<(String, Vec<u8>)> {
            write_inputs(dir);
            let paths = DataPaths::new(dir);
            run_offline_pipeline(&paths, &Config::default(), 4242).unwrap();
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
                .unwrap()
                .map(|e| {
                    let p = e.unwrap().path();
                    (
                        p.file_name().unwrap().to_string_lossy().to_string(),
                        fs::read(&p).unwrap(),
                    )
                })
                .collect();
            files.sort();
            files
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = run(d1.path());
        let f2 = run(d2.path());
        assert_eq!(f1.len(), f2.len());
        for ((n1, b1), (n2, b2)) in f1.iter().zip(&f2) {
            assert_eq!(n1, n2);
            assert_eq!(b1, b2, "artifact {n1} differs between identical runs");
        }
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DataPaths::new(dir.path());
        // headlines exist but lexicon files are missing
        fs::write(
            paths.headlines(),
            "{\"id\":\"h1\",\"title\":\"acme acquires beta\",\"site\":\"s\",\"page_type\":\"n\",\"publish_ts\":1}\n",
        )
        .unwrap();
        let err = run_offline_pipeline(&paths, &Config::default(), 0).unwrap_err();
        assert!(err.to_string().starts_with("stage collect:"), "{err}");
    }

    #[test]
    fn stages_resume_from_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        write_inputs(dir.path());
        let paths = DataPaths::new(dir.path());
        let config = Config::default();
        stage_collect(&paths, &config, 77).unwrap();
        stage_reformulate(&paths, &config).unwrap();
        // delete downstream artifacts, rerun only later stages
        let _ = fs::remove_file(paths.index());
        stage_index(&paths, &config).unwrap();
        let cluster = stage_cluster(&paths, &config).unwrap();
        assert!(cluster.output > 0);
    }
}
