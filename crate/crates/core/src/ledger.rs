//! A node's ledger: committed blocks, the world state they produce, and the
//! single-writer commit path that seals new blocks.

use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::access::{can_access, AssetRecord};
use crate::bibac::{AccessRequest, RequestStatus};
use crate::brbac::is_org_admin;
use crate::chain::{
    historian_query, seal_block, verify_chain, verify_file, Block, BlockStore, ChainError, Entry, HistorianFilter,
    HistorianRecord, TxEnvelope, TxResult, TxStatus, MAX_BLOCK_ENTRIES,
};
use crate::engine::Engine;
use crate::error::{Error, ErrorCode, Result};
use crate::network::{to_value, valid_id, BootstrapAdmin, BOOTSTRAP_TX};
use crate::state::{RecordKind, StateRead, WorldState};

/// Millisecond wall clock used for block seal timestamps.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}

/// Settable clock for tests and reproducible fixtures. Each read
/// advances it by one millisecond.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst)
    }
}

/// Result of one submission.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Outcome {
    pub tx_id: String,
    pub status: TxStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(rename = "result", skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    /// Whether the envelope was written to the chain.
    #[serde(skip)]
    pub recorded: bool,
    /// Height of the block holding the entry, when recorded.
    #[serde(skip)]
    pub height: Option<u64>,
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        self.status == TxStatus::Accepted
    }
}

/// A block built against a specific tip, not yet appended.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub block: Option<Block>,
    pub state: WorldState,
    pub outcomes: Vec<Outcome>,
    /// How many input envelopes this batch covers.
    pub consumed: usize,
}

/// Filter for the access-request inbox.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequestFilter {
    /// Requests against assets this participant controls.
    pub owner: Option<String>,
    pub requester: Option<String>,
    pub asset_id: Option<String>,
    pub status: Option<RequestStatus>,
}

pub struct Ledger {
    engine: Arc<Engine>,
    blocks: Vec<Block>,
    state: WorldState,
    tx_ids: HashSet<String>,
    store: Option<BlockStore>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("state_hash", &self.state.state_hash())
            .finish_non_exhaustive()
    }
}

/// Build the genesis block for the given administrators.
pub fn genesis_block(engine: &Engine, admins: &[BootstrapAdmin], seal_timestamp: u64) -> Result<(Block, WorldState)> {
    let mut state = WorldState::new();
    let mut entries = Vec::with_capacity(admins.len());
    for admin in admins {
        let env = TxEnvelope::new(BOOTSTRAP_TX, to_value(admin), admin.participant_id.clone(), seal_timestamp);
        let applied = engine.apply_genesis(&mut state, &env);
        if let Some(code) = applied.result.error_code {
            return Err(Error::Config(format!("bootstrap of `{}` failed: {code}", admin.participant_id)));
        }
        entries.push(Entry { envelope: env, result: applied.result });
    }
    let block = Block::genesis(entries, state.state_hash(), seal_timestamp)?;
    Ok((block, state))
}

impl Ledger {
    /// A ledger that lives only in memory.
    pub fn in_memory(engine: Arc<Engine>, admins: &[BootstrapAdmin], clock: Arc<dyn Clock>) -> Result<Self> {
        let (genesis, state) = genesis_block(&engine, admins, clock.now_ms())?;
        let tx_ids = genesis.entries.iter().map(|e| e.envelope.tx_id.clone()).collect();
        Ok(Ledger { engine, blocks: vec![genesis], state, tx_ids, store: None, clock })
    }

    /// Create a new block file holding only the genesis block.
    pub fn create(
        path: impl AsRef<Path>,
        engine: Arc<Engine>,
        admins: &[BootstrapAdmin],
        clock: Arc<dyn Clock>,
    ) -> Result<Self> {
        let mut ledger = Self::in_memory(engine, admins, clock)?;
        let mut store = BlockStore::create(path)?;
        store.append(&ledger.blocks[0])?;
        ledger.store = Some(store);
        Ok(ledger)
    }

    /// Open an existing block file. The whole chain is verified first.
    pub fn open(path: impl AsRef<Path>, engine: Arc<Engine>, clock: Arc<dyn Clock>) -> Result<Self> {
        let (blocks, state) = verify_file(path.as_ref(), &engine)?;
        let mut ledger = Self::assemble(engine, blocks, state, clock);
        ledger.store = Some(BlockStore::open(path)?);
        Ok(ledger)
    }

    pub fn open_or_create(
        path: impl AsRef<Path>,
        engine: Arc<Engine>,
        admins: &[BootstrapAdmin],
        clock: Arc<dyn Clock>,
    ) -> Result<Self> {
        if path.as_ref().exists() {
            Self::open(path, engine, clock)
        } else {
            Self::create(path, engine, admins, clock)
        }
    }

    /// An in-memory ledger over already-sealed blocks, verified first.
    pub fn from_blocks(blocks: Vec<Block>, engine: Arc<Engine>, clock: Arc<dyn Clock>) -> Result<Self> {
        let state = verify_chain(&blocks, &engine)?;
        Ok(Self::assemble(engine, blocks, state, clock))
    }

    fn assemble(engine: Arc<Engine>, blocks: Vec<Block>, state: WorldState, clock: Arc<dyn Clock>) -> Self {
        let tx_ids = blocks.iter().flat_map(|b| &b.entries).map(|e| e.envelope.tx_id.clone()).collect();
        Ledger { engine, blocks, state, tx_ids, store: None, clock }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("ledger always holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.tip().height
    }

    pub fn state_hash(&self) -> String {
        self.state.state_hash()
    }

    /// Backing block file, if any.
    pub fn path(&self) -> Option<&Path> {
        self.store.as_ref().map(BlockStore::path)
    }

    pub fn contains_tx(&self, tx_id: &str) -> bool {
        self.tx_ids.contains(tx_id)
    }

    /// Execute envelopes against a copy of the current state, up to one
    /// block's worth of recorded entries. Nothing is committed.
    pub fn prepare(&self, envelopes: &[TxEnvelope]) -> Result<Prepared> {
        let tip = self.tip();
        let height = tip.height + 1;
        let mut state = self.state.clone();
        let mut seen: HashSet<&str> = HashSet::new();
        let mut entries = Vec::new();
        let mut outcomes = Vec::new();
        let mut consumed = 0;
        for env in envelopes {
            if entries.len() == MAX_BLOCK_ENTRIES {
                break;
            }
            consumed += 1;
            let refused = if !valid_id(&env.tx_id) {
                Some(ErrorCode::MalformedEnvelope)
            } else if self.tx_ids.contains(&env.tx_id) || !seen.insert(&env.tx_id) {
                Some(ErrorCode::DuplicateTx)
            } else {
                None
            };
            if let Some(code) = refused {
                outcomes.push(Outcome {
                    tx_id: env.tx_id.clone(),
                    status: TxStatus::Rejected,
                    error_code: Some(code),
                    output: None,
                    recorded: false,
                    height: None,
                });
                continue;
            }
            let applied = self.engine.apply(&mut state, env, height);
            outcomes.push(Outcome {
                tx_id: env.tx_id.clone(),
                status: applied.result.status,
                error_code: applied.result.error_code,
                output: applied.output,
                recorded: applied.recorded,
                height: applied.recorded.then_some(height),
            });
            if applied.recorded {
                entries.push(Entry { envelope: env.clone(), result: applied.result });
            } else {
                seen.remove(env.tx_id.as_str());
            }
        }
        let block = if entries.is_empty() {
            None
        } else {
            Some(seal_block(entries, tip, state.state_hash(), self.clock.now_ms())?)
        };
        Ok(Prepared { block, state, outcomes, consumed })
    }

    /// Append a prepared block. Fails with STALE_PARENT if the tip moved.
    pub fn commit(&mut self, prepared: Prepared) -> Result<Vec<Outcome>> {
        let Some(block) = prepared.block else {
            return Ok(prepared.outcomes);
        };
        let tip = self.tip();
        if block.prev_hash != tip.block_hash || block.height != tip.height + 1 {
            return Err(ChainError::StaleParent { parent: block.prev_hash, tip: tip.block_hash.clone() }.into());
        }
        if let Some(store) = self.store.as_mut() {
            store.append(&block)?;
        }
        self.tx_ids.extend(block.entries.iter().map(|e| e.envelope.tx_id.clone()));
        self.blocks.push(block);
        self.state = prepared.state;
        Ok(prepared.outcomes)
    }

    /// Commit a batch, sealing one block per 100 recorded entries.
    pub fn submit_batch(&mut self, envelopes: &[TxEnvelope]) -> Result<Vec<Outcome>> {
        let mut outcomes = Vec::with_capacity(envelopes.len());
        let mut rest = envelopes;
        while !rest.is_empty() {
            let prepared = self.prepare(rest)?;
            rest = &rest[prepared.consumed..];
            outcomes.extend(self.commit(prepared)?);
        }
        Ok(outcomes)
    }

    pub fn submit(&mut self, envelope: TxEnvelope) -> Result<Outcome> {
        Ok(self.submit_batch(std::slice::from_ref(&envelope))?.remove(0))
    }

    pub fn historian(&self, filter: &HistorianFilter) -> Vec<HistorianRecord> {
        historian_query(&self.blocks, filter)
    }

    pub fn asset(&self, asset_id: &str) -> Option<AssetRecord> {
        AssetRecord::load(&self.state, asset_id)
    }

    /// Non-recorded access check against committed state.
    pub fn can_view(&self, asset_id: &str, user_id: &str) -> bool {
        can_access(&self.state, asset_id, user_id)
    }

    pub fn requests(&self, filter: &RequestFilter) -> Vec<AccessRequest> {
        self.state
            .records_of(RecordKind::AccessRequest)
            .filter_map(|r| serde_json::from_value::<AccessRequest>(r.body.clone()).ok())
            .filter(|r| filter.requester.as_ref().is_none_or(|x| *x == r.requester_id))
            .filter(|r| filter.asset_id.as_ref().is_none_or(|x| *x == r.asset_id))
            .filter(|r| filter.status.is_none_or(|s| s == r.status))
            .filter(|r| filter.owner.as_ref().is_none_or(|o| self.controls(&r.asset_id, o)))
            .collect()
    }

    fn controls(&self, asset_id: &str, who: &str) -> bool {
        match self.asset(asset_id) {
            Some(AssetRecord::Person(a)) => a.owner_id == who,
            Some(AssetRecord::Org(a)) => is_org_admin(&self.state, &a.owner_org_id, who),
            None => false,
        }
    }

    /// Recorded result of a committed transaction.
    pub fn tx_result(&self, tx_id: &str) -> Option<&TxResult> {
        if !self.tx_ids.contains(tx_id) {
            return None;
        }
        self.blocks
            .iter()
            .rev()
            .flat_map(|b| &b.entries)
            .find(|e| e.envelope.tx_id == tx_id)
            .map(|e| &e.result)
    }

    pub fn participant_exists(&self, participant_id: &str) -> bool {
        self.state.exists(RecordKind::Participant, participant_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BlockStore;
    use crate::identity::KeyPair;
    use serde_json::json;

    fn admin() -> (KeyPair, BootstrapAdmin) {
        let k = KeyPair::from_seed([9; 32]);
        let b = BootstrapAdmin {
            participant_id: "admin".into(),
            display_name: "Admin".into(),
            card_id: "card-admin".into(),
            public_key: k.public_key_b64(),
        };
        (k, b)
    }

    fn create(k: &KeyPair, id: &str, ts: u64) -> TxEnvelope {
        TxEnvelope::new("CreateAsset", json!({"assetId": id, "datasetRef": "s3://d"}), "admin", ts)
            .signed(k)
            .unwrap()
    }

    #[test]
    fn batches_chunk_at_block_limit() {
        let (k, b) = admin();
        let mut l = Ledger::in_memory(Arc::new(Engine::combined()), &[b], Arc::new(ManualClock::new(1))).unwrap();
        let envs: Vec<_> = (0..250).map(|i| create(&k, &format!("a{i}"), i)).collect();
        let outcomes = l.submit_batch(&envs).unwrap();
        assert_eq!(outcomes.len(), 250);
        assert!(outcomes.iter().all(Outcome::is_accepted));
        assert_eq!(l.height(), 3);
        assert_eq!(l.blocks()[1].entries.len(), 100);
        assert_eq!(l.blocks()[3].entries.len(), 50);
    }

    #[test]
    fn duplicate_tx_and_refusals_stay_off_chain() {
        let (k, b) = admin();
        let mut l = Ledger::in_memory(Arc::new(Engine::combined()), &[b], Arc::new(ManualClock::new(1))).unwrap();
        let env = create(&k, "a1", 1);
        assert!(l.submit(env.clone()).unwrap().is_accepted());
        let hash = l.state_hash();
        let dup = l.submit(env).unwrap();
        assert_eq!(dup.error_code, Some(ErrorCode::DuplicateTx));
        assert!(!dup.recorded);
        let mut bad = create(&k, "a2", 2);
        bad.signature = "AAAA".into();
        assert_eq!(l.submit(bad).unwrap().error_code, Some(ErrorCode::BadSignature));
        assert_eq!(l.height(), 1);
        assert_eq!(l.state_hash(), hash);
    }

    #[test]
    fn same_tx_id_twice_in_one_batch() {
        let (k, b) = admin();
        let mut l = Ledger::in_memory(Arc::new(Engine::combined()), &[b], Arc::new(ManualClock::new(1))).unwrap();
        let env = create(&k, "a1", 1);
        let out = l.submit_batch(&[env.clone(), env]).unwrap();
        assert!(out[0].is_accepted());
        assert_eq!(out[1].error_code, Some(ErrorCode::DuplicateTx));
        assert_eq!(l.blocks()[1].entries.len(), 1);
    }

    #[test]
    fn stale_parent() {
        let (k, b) = admin();
        let mut l = Ledger::in_memory(Arc::new(Engine::combined()), &[b], Arc::new(ManualClock::new(1))).unwrap();
        let p1 = l.prepare(&[create(&k, "a1", 1)]).unwrap();
        let p2 = l.prepare(&[create(&k, "a2", 2)]).unwrap();
        l.commit(p1).unwrap();
        assert!(matches!(l.commit(p2), Err(Error::Chain(ChainError::StaleParent { .. }))));
    }

    #[test]
    fn reopen_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.blocks");
        let (k, b) = admin();
        let engine = Arc::new(Engine::combined());
        let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(1));
        let hash = {
            let mut l = Ledger::create(&path, engine.clone(), std::slice::from_ref(&b), clock.clone()).unwrap();
            l.submit(create(&k, "a1", 1)).unwrap();
            l.submit(create(&k, "a1", 2)).unwrap();
            l.state_hash()
        };
        let l = Ledger::open_or_create(&path, engine, &[b], clock).unwrap();
        assert_eq!(l.height(), 2);
        assert_eq!(l.state_hash(), hash);
        assert_eq!(BlockStore::read_all(&path).unwrap().len(), 3);
        assert_eq!(l.blocks()[2].entries[0].result.error_code, Some(ErrorCode::DuplicateAsset));
    }
}
