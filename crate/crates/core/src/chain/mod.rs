//! Append-only hash-chained ledger: envelopes, results, blocks, sealing,
//! verification, replay, persistence and the historian view.

mod historian;
mod store;
mod verify;

pub use historian::{historian_query, HistorianFilter, HistorianRecord};
pub use store::{decode_blocks, encode_block, BlockStore, StoreError};
pub use verify::{replay, verify_chain, verify_file, FailureReason, ReplayError, VerifyError};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::{self, CanonicalError};
use crate::error::ErrorCode;
use crate::identity::KeyPair;
use crate::state::RecordKind;

/// Previous-hash value carried by the genesis block.
pub const GENESIS_PREV_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

/// Upper bound on entries sealed into one block.
pub const MAX_BLOCK_ENTRIES: usize = 100;

/// A certificate-signed transaction submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TxEnvelope {
    pub tx_id: String,
    pub tx_type: String,
    pub payload: Value,
    pub submitter: String,
    pub timestamp: u64,
    /// Base64 Ed25519 signature over [`TxEnvelope::signing_bytes`].
    #[serde(default)]
    pub signature: String,
}

impl TxEnvelope {
    /// Unsigned envelope with a fresh UUID transaction id.
    pub fn new(tx_type: impl Into<String>, payload: Value, submitter: impl Into<String>, timestamp: u64) -> Self {
        Self {
            tx_id: uuid::Uuid::new_v4().to_string(),
            tx_type: tx_type.into(),
            payload,
            submitter: submitter.into(),
            timestamp,
            signature: String::new(),
        }
    }

    pub fn with_tx_id(mut self, tx_id: impl Into<String>) -> Self {
        self.tx_id = tx_id.into();
        self
    }

    /// Canonical bytes of the envelope with the signature field absent.
    pub fn signing_bytes(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical::to_canonical_bytes(&json!({
            "payload": self.payload,
            "submitter": self.submitter,
            "timestamp": self.timestamp,
            "txId": self.tx_id,
            "txType": self.tx_type,
        }))
    }

    pub fn signed(mut self, key: &KeyPair) -> Result<Self, CanonicalError> {
        self.signature = crate::identity::sign_envelope(key, &self)?;
        Ok(self)
    }

    /// String value of `payload.assetId`, if present.
    pub fn asset_id(&self) -> Option<&str> {
        self.payload.get("assetId").and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Create,
    Update,
    /// Access decision that came out positive.
    Allowed,
    /// Access decision that came out negative.
    Denied,
    /// Asset contents were disclosed to the submitter.
    Read,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TxEvent {
    pub kind: EventKind,
    pub record_kind: RecordKind,
    pub record_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TxResult {
    pub status: TxStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    pub events: Vec<TxEvent>,
}

impl TxResult {
    pub fn accepted(events: Vec<TxEvent>) -> Self {
        Self { status: TxStatus::Accepted, error_code: None, events }
    }

    pub fn rejected(code: ErrorCode) -> Self {
        Self { status: TxStatus::Rejected, error_code: Some(code), events: Vec::new() }
    }

    pub fn is_accepted(&self) -> bool {
        self.status == TxStatus::Accepted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub envelope: TxEnvelope,
    pub result: TxResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub prev_hash: String,
    pub seal_timestamp: u64,
    pub entries: Vec<Entry>,
    pub state_hash: String,
    pub block_hash: String,
}

impl Block {
    /// Height-0 block. `entries` may be empty.
    pub fn genesis(entries: Vec<Entry>, state_hash: String, seal_timestamp: u64) -> Result<Self, ChainError> {
        let mut block = Block {
            height: 0,
            prev_hash: GENESIS_PREV_HASH.to_owned(),
            seal_timestamp,
            entries,
            state_hash,
            block_hash: String::new(),
        };
        block.block_hash = block.compute_hash()?;
        Ok(block)
    }

    /// Canonical bytes of the block with `blockHash` absent.
    pub fn hashing_bytes(&self) -> Result<Vec<u8>, CanonicalError> {
        let mut value = serde_json::to_value(self).map_err(|e| CanonicalError::Serialize(e.to_string()))?;
        if let Value::Object(map) = &mut value {
            map.remove("blockHash");
        }
        canonical::to_canonical_bytes(&value)
    }

    pub fn compute_hash(&self) -> Result<String, CanonicalError> {
        self.hashing_bytes().map(|b| canonical::sha256_hex(&b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("EMPTY_BATCH: nothing to seal")]
    EmptyBatch,
    #[error("STALE_PARENT: parent {parent} is not the chain tip {tip}")]
    StaleParent { parent: String, tip: String },
    #[error("block is not canonically encodable: {0}")]
    Canonical(#[from] CanonicalError),
}

/// Seal `pending` on top of `parent`. Entry order is preserved exactly.
pub fn seal_block(
    pending: Vec<Entry>,
    parent: &Block,
    post_state_hash: String,
    seal_timestamp: u64,
) -> Result<Block, ChainError> {
    if pending.is_empty() {
        return Err(ChainError::EmptyBatch);
    }
    let mut block = Block {
        height: parent.height + 1,
        prev_hash: parent.block_hash.clone(),
        seal_timestamp,
        entries: pending,
        state_hash: post_state_hash,
        block_hash: String::new(),
    };
    block.block_hash = block.compute_hash()?;
    Ok(block)
}
