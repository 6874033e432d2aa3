//! Serving and orchestration: the cache-fronted expansion service,
//! expanded document retrieval, the offline stage runner and the
//! end-to-end evaluation harness.

mod cache;
mod clock;
mod corpus;
mod eval;
mod offline;
mod service;

pub use cache::{CacheEntry, ExpansionCache, Freshness};
pub use clock::{Clock, InlineExecutor, ManualClock, RefreshExecutor, SystemClock, ThreadExecutor};
pub use corpus::{expanded_retrieval, DocCorpus};
pub use eval::{eval_coverage_timeline, eval_recall_at_k, CoverageTimeline, RecallReport};
pub use offline::{
    load_event_clusters, load_or_init_encoder, run_offline_pipeline, stage_cluster,
    stage_collect, stage_index, stage_reformulate, DataPaths, EventClusterRecord,
    PipelineReport, StageReport,
};
pub use service::{
    ExpandResponse, ExpansionService, Expander, ResponseSource, ServiceCounters, StatsSnapshot,
};
