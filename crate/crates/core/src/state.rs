//! World state: the registry of participants, organizations, assets,
//! access requests, role bindings and identity cards that transaction
//! processors read and write.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;
use crate::chain::{EventKind, TxEvent};
use crate::error::ErrorCode;

/// Record kinds. Declaration order is alphabetical so the derived `Ord`
/// agrees with byte-wise ordering of the serialized names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecordKind {
    AccessRequest,
    Asset,
    IdentityCard,
    Organization,
    Participant,
    RoleBinding,
}

impl RecordKind {
    pub const ALL: [RecordKind; 6] = [
        RecordKind::AccessRequest,
        RecordKind::Asset,
        RecordKind::IdentityCard,
        RecordKind::Organization,
        RecordKind::Participant,
        RecordKind::RoleBinding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::AccessRequest => "AccessRequest",
            RecordKind::Asset => "Asset",
            RecordKind::IdentityCard => "IdentityCard",
            RecordKind::Organization => "Organization",
            RecordKind::Participant => "Participant",
            RecordKind::RoleBinding => "RoleBinding",
        }
    }
}

pub type RecordKey = (RecordKind, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub kind: RecordKind,
    pub id: String,
    pub version: u64,
    pub body: Value,
}

/// Committed world state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldState {
    records: BTreeMap<RecordKey, StateRecord>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Latest committed version of a record. `None` is an ordinary result.
    pub fn get_record(&self, kind: RecordKind, id: &str) -> Option<&StateRecord> {
        self.records.get(&(kind, id.to_owned()))
    }

    /// Records in `(kind, id)` order.
    pub fn records(&self) -> impl Iterator<Item = &StateRecord> {
        self.records.values()
    }

    pub fn records_of(&self, kind: RecordKind) -> impl Iterator<Item = &StateRecord> {
        self.records
            .range((kind, String::new())..)
            .take_while(move |((k, _), _)| *k == kind)
            .map(|(_, r)| r)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Apply the staged writes of one accepted transaction. Each touched
    /// record's version is bumped exactly once.
    pub fn apply(&mut self, writes: BTreeMap<RecordKey, Value>) -> Vec<TxEvent> {
        let mut events = Vec::with_capacity(writes.len());
        for ((kind, id), body) in writes {
            let key = (kind, id.clone());
            let event_kind = match self.records.get_mut(&key) {
                Some(existing) => {
                    existing.version += 1;
                    existing.body = body;
                    EventKind::Update
                }
                None => {
                    self.records.insert(key, StateRecord { kind, id: id.clone(), version: 1, body });
                    EventKind::Create
                }
            };
            events.push(TxEvent { kind: event_kind, record_kind: kind, record_id: id });
        }
        events
    }

    /// Canonical bytes of the sorted record array.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let records: Vec<&StateRecord> = self.records.values().collect();
        canonical::encode(&records).expect("state bodies are checked canonical on write")
    }

    /// SHA-256 commitment over every record, sorted by `(kind, id)`.
    pub fn state_hash(&self) -> String {
        canonical::sha256_hex(&self.canonical_bytes())
    }
}

/// Read access shared by committed state and staged contexts.
pub trait StateRead {
    fn body(&self, kind: RecordKind, id: &str) -> Option<&Value>;

    fn read<T: DeserializeOwned>(&self, kind: RecordKind, id: &str) -> Option<T> {
        self.body(kind, id).and_then(|v| T::deserialize(v).ok())
    }

    fn exists(&self, kind: RecordKind, id: &str) -> bool {
        self.body(kind, id).is_some()
    }
}

impl StateRead for WorldState {
    fn body(&self, kind: RecordKind, id: &str) -> Option<&Value> {
        self.get_record(kind, id).map(|r| &r.body)
    }
}

impl StateRead for TxContext<'_> {
    fn body(&self, kind: RecordKind, id: &str) -> Option<&Value> {
        self.get(kind, id)
    }
}

/// Digest of the state with no records.
pub const EMPTY_STATE_HASH: &str = "4f53cda18c2baa0c0354bb5f9a3ecbe5ed12ab4d8e11ba873c2f11161202b945";

/// Staged execution context for one transaction. Reads see the
/// transaction's own writes first; nothing reaches the committed state
/// until the caller applies [`TxContext::into_writes`].
pub struct TxContext<'a> {
    base: &'a WorldState,
    staged: BTreeMap<RecordKey, Value>,
    height: u64,
}

impl<'a> TxContext<'a> {
    pub fn new(base: &'a WorldState, height: u64) -> Self {
        Self { base, staged: BTreeMap::new(), height }
    }

    /// Height of the block this transaction will be sealed into.
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn get(&self, kind: RecordKind, id: &str) -> Option<&Value> {
        let key = (kind, id.to_owned());
        self.staged
            .get(&key)
            .or_else(|| self.base.records.get(&key).map(|r| &r.body))
    }

    /// Stage a write. Returns the record as it will look once committed.
    pub fn put<T: Serialize>(
        &mut self,
        kind: RecordKind,
        id: &str,
        body: &T,
    ) -> Result<StateRecord, ErrorCode> {
        let body = serde_json::to_value(body).map_err(|_| ErrorCode::NonCanonicalBody)?;
        canonical::check(&body).map_err(|_| ErrorCode::NonCanonicalBody)?;
        let version = self.base.get_record(kind, id).map_or(1, |r| r.version + 1);
        self.staged.insert((kind, id.to_owned()), body.clone());
        Ok(StateRecord { kind, id: id.to_owned(), version, body })
    }

    /// All records of one kind in id order, with staged writes overlaid.
    pub fn scan(&self, kind: RecordKind) -> Vec<(String, Value)> {
        let mut merged: BTreeMap<String, Value> = self
            .base
            .records_of(kind)
            .map(|r| (r.id.clone(), r.body.clone()))
            .collect();
        for ((k, id), body) in &self.staged {
            if *k == kind {
                merged.insert(id.clone(), body.clone());
            }
        }
        merged.into_iter().collect()
    }

    pub fn scan_as<T: DeserializeOwned>(&self, kind: RecordKind) -> Vec<T> {
        self.scan(kind)
            .into_iter()
            .filter_map(|(_, v)| serde_json::from_value(v).ok())
            .collect()
    }

    pub fn into_writes(self) -> BTreeMap<RecordKey, Value> {
        self.staged
    }
}
