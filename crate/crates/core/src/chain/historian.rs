use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ErrorCode;
use crate::state::RecordKind;

use super::{Block, Entry, TxStatus};

/// One audit line per ledger entry, derived on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistorianRecord {
    pub tx_id: String,
    pub tx_type: String,
    pub submitter: String,
    pub timestamp: u64,
    pub status: TxStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    pub affected_asset_ids: Vec<String>,
    pub height: u64,
    pub index: u32,
}

impl HistorianRecord {
    fn from_entry(height: u64, index: usize, entry: &Entry) -> Self {
        let mut assets: BTreeSet<String> = entry
            .result
            .events
            .iter()
            .filter(|e| e.record_kind == RecordKind::Asset)
            .map(|e| e.record_id.clone())
            .collect();
        // denied attempts carry no events, so the targeted asset comes from the payload
        if let Some(id) = entry.envelope.asset_id() {
            assets.insert(id.to_owned());
        }
        HistorianRecord {
            tx_id: entry.envelope.tx_id.clone(),
            tx_type: entry.envelope.tx_type.clone(),
            submitter: entry.envelope.submitter.clone(),
            timestamp: entry.envelope.timestamp,
            status: entry.result.status,
            error_code: entry.result.error_code,
            affected_asset_ids: assets.into_iter().collect(),
            height,
            index: index as u32,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistorianFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_type: Option<String>,
    /// Inclusive `(from, to)` block heights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_range: Option<(u64, u64)>,
}

impl HistorianFilter {
    pub fn asset(id: impl Into<String>) -> Self {
        Self { asset_id: Some(id.into()), ..Self::default() }
    }

    pub fn submitter(id: impl Into<String>) -> Self {
        Self { submitter: Some(id.into()), ..Self::default() }
    }

    fn matches(&self, r: &HistorianRecord) -> bool {
        self.submitter.as_ref().is_none_or(|s| *s == r.submitter)
            && self.tx_type.as_ref().is_none_or(|t| *t == r.tx_type)
            && self.asset_id.as_ref().is_none_or(|a| r.affected_asset_ids.contains(a))
            && self.height_range.is_none_or(|(lo, hi)| (lo..=hi).contains(&r.height))
    }
}

/// Every entry matching all supplied filter fields, in commit order.
/// Rejected entries are included.
pub fn historian_query(blocks: &[Block], filter: &HistorianFilter) -> Vec<HistorianRecord> {
    let (lo, hi) = filter.height_range.unwrap_or((0, u64::MAX));
    blocks
        .iter()
        .filter(|b| b.height >= lo && b.height <= hi)
        .flat_map(|b| b.entries.iter().enumerate().map(move |(i, e)| HistorianRecord::from_entry(b.height, i, e)))
        .filter(|r| filter.matches(r))
        .collect()
}
