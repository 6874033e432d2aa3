//! Semantic retrieval: the dual-tower encoder pair, two-stage contrastive
//! training with hard negatives, the event vector index (exact and IVF
//! cosine search), event clustering and retrieval metrics.

mod clustering;
mod index;
mod metrics;
mod mining;
mod training;

pub use clustering::{cluster_events, EventClusters};
pub use index::{build_index, search_topk, EventIndex, IvfTables, SearchMode};
pub use metrics::{retrieval_metrics, LabeledRanking, RetrievalMetricsReport};
pub use mining::{mine_hard_negatives, nearest_rank_bounds, HardNegBand, QueryPositive};
pub use training::{train_stage1, train_stage2};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EncoderModel;
use crate::textcore::TokenSeq;
use crate::{Error, Result};

/// Query and event encoders. Shared by default: both sides reference one
/// parameter set, which is how the towers are trained unless a caller
/// explicitly splits them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTower {
    query: EncoderModel,
    /// `None` means the event side shares the query parameters.
    event: Option<EncoderModel>,
}

impl DualTower {
    pub fn shared(model: EncoderModel) -> Self {
        DualTower { query: model, event: None }
    }

    pub fn separate(query: EncoderModel, event: EncoderModel) -> Self {
        DualTower { query, event: Some(event) }
    }

    pub fn is_shared(&self) -> bool {
        self.event.is_none()
    }

    pub fn query_tower(&self) -> &EncoderModel {
        &self.query
    }

    pub fn event_tower(&self) -> &EncoderModel {
        self.event.as_ref().unwrap_or(&self.query)
    }

    pub fn encode_query(&self, seq: &TokenSeq) -> Vec<f64> {
        self.query.encode(seq)
    }

    pub fn encode_event(&self, seq: &TokenSeq) -> Vec<f64> {
        self.event_tower().encode(seq)
    }

    pub(crate) fn towers_mut(&mut self) -> (&mut EncoderModel, Option<&mut EncoderModel>) {
        (&mut self.query, self.event.as_mut())
    }

    /// Persists the tower pair (one encoder when shared).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = SerializedTower {
            shared: self.is_shared(),
            query: self.query.to_json_string()?,
            event: match &self.event {
                Some(e) => Some(e.to_json_string()?),
                None => None,
            },
        };
        let json = serde_json::to_string(&file).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SerializedTower =
            serde_json::from_str(&text).map_err(|e| Error::BadArtifact(e.to_string()))?;
        let query = EncoderModel::from_json_str(&file.query)?;
        let event = match (file.shared, file.event) {
            (true, _) => None,
            (false, Some(e)) => Some(EncoderModel::from_json_str(&e)?),
            (false, None) => {
                return Err(Error::BadArtifact(
                    "tower file marked separate but carries one encoder".into(),
                ))
            }
        };
        Ok(DualTower { query, event })
    }
}

#[derive(Serialize, Deserialize)]
struct SerializedTower {
    shared: bool,
    query: String,
    event: Option<String>,
}
