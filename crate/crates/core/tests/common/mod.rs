//! Shared fixtures: a ledger plus the keys of every participant on it.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use accessledger::chain::HistorianRecord;
use accessledger::config::PhoneBinding;
use accessledger::gateway::{Gateway, Keystore};
use accessledger::network::BootstrapAdmin;
use accessledger::{Engine, KeyPair, Ledger, ManualClock, Outcome, TxEnvelope};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const ADMIN: &str = "admin";
pub const GENESIS_MS: u64 = 1_700_000_000_000;

pub fn seed_key(name: &str, generation: u8) -> KeyPair {
    let mut seed = [generation; 32];
    for (i, b) in name.bytes().enumerate().take(31) {
        seed[i + 1] ^= b;
    }
    KeyPair::from_seed(seed)
}

pub fn bootstrap() -> BootstrapAdmin {
    BootstrapAdmin {
        participant_id: ADMIN.into(),
        display_name: "Network Admin".into(),
        card_id: "card-admin".into(),
        public_key: seed_key(ADMIN, 0).public_key_b64(),
    }
}

pub struct Net {
    pub ledger: Ledger,
    pub keys: BTreeMap<String, KeyPair>,
    /// Current card id per participant.
    pub cards: BTreeMap<String, String>,
    pub ts: u64,
    generation: u8,
}

impl Net {
    pub fn new() -> Self {
        Self::with_engine(Engine::combined())
    }

    pub fn with_engine(engine: Engine) -> Self {
        let clock = Arc::new(ManualClock::new(GENESIS_MS));
        let ledger = Ledger::in_memory(Arc::new(engine), &[bootstrap()], clock).unwrap();
        Self::around(ledger)
    }

    pub fn with_file(path: &Path) -> Self {
        let clock = Arc::new(ManualClock::new(GENESIS_MS));
        let ledger = Ledger::create(path, Arc::new(Engine::combined()), &[bootstrap()], clock).unwrap();
        Self::around(ledger)
    }

    pub fn around(ledger: Ledger) -> Self {
        let keys = BTreeMap::from([(ADMIN.to_owned(), seed_key(ADMIN, 0))]);
        let cards = BTreeMap::from([(ADMIN.to_owned(), "card-admin".to_owned())]);
        Net { ledger, keys, cards, ts: GENESIS_MS, generation: 0 }
    }

    /// A signed envelope from `who` using its current key.
    pub fn env(&mut self, who: &str, tx_type: &str, payload: Value) -> TxEnvelope {
        self.ts += 1;
        let key = self.keys.get(who).unwrap_or_else(|| panic!("no key for {who}"));
        TxEnvelope::new(tx_type, payload, who, self.ts).signed(key).unwrap()
    }

    pub fn submit(&mut self, who: &str, tx_type: &str, payload: Value) -> Outcome {
        let env = self.env(who, tx_type, payload);
        self.ledger.submit(env).unwrap()
    }

    /// Submit and require acceptance.
    pub fn ok(&mut self, who: &str, tx_type: &str, payload: Value) -> Value {
        let out = self.submit(who, tx_type, payload.clone());
        assert!(out.is_accepted(), "{tx_type} {payload} by {who}: {:?}", out.error_code);
        out.output.unwrap_or(Value::Null)
    }

    /// Register a person and issue its first card.
    pub fn person(&mut self, pid: &str) {
        self.ok(ADMIN, "RegisterPerson", json!({"participantId": pid, "displayName": pid}));
        self.issue(pid);
    }

    /// Issue a fresh card (revoking any previous one) and switch to its key.
    pub fn issue(&mut self, pid: &str) -> String {
        self.generation = self.generation.wrapping_add(1);
        let key = seed_key(pid, self.generation);
        let card = format!("card-{pid}-{}", self.generation);
        self.ok(ADMIN, "IssueIdentity", json!({"participantId": pid, "cardId": card, "publicKey": key.public_key_b64()}));
        self.keys.insert(pid.to_owned(), key);
        self.cards.insert(pid.to_owned(), card.clone());
        card
    }

    pub fn org(&mut self, org: &str, admins: &[&str]) {
        self.ok(ADMIN, "RegisterOrganization", json!({"orgId": org, "name": org, "adminIds": admins}));
    }

    /// An independent copy of the chain with the same keys and counters.
    pub fn fork(&self) -> Net {
        let clock = Arc::new(ManualClock::new(self.ts));
        let ledger = Ledger::from_blocks(self.ledger.blocks().to_vec(), self.ledger.engine().clone(), clock).unwrap();
        Net { ledger, keys: self.keys.clone(), cards: self.cards.clone(), ts: self.ts, generation: self.generation }
    }

    pub fn hash(&self) -> String {
        self.ledger.state_hash()
    }

    /// Hand the ledger to a gateway holding every current key. `phones`
    /// pairs a phone number with a participant.
    pub fn into_gateway(self, phones: &[(&str, &str)]) -> Gateway {
        let mut keystore = Keystore::new();
        for (pid, key) in &self.keys {
            keystore.insert(self.cards[pid].clone(), key.clone());
        }
        let phones = phones
            .iter()
            .map(|(phone, pid)| PhoneBinding {
                phone: (*phone).into(),
                participant_id: (*pid).into(),
                card_id: self.cards[*pid].clone(),
            })
            .collect();
        Gateway::new(self.ledger, keystore, phones, Arc::new(ManualClock::new(self.ts + 1_000_000)))
    }
}

pub async fn call(router: &Router, request: Request<Body>) -> (StatusCode, String) {
    let response = router.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub async fn get(router: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = call(router, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_str(&body).unwrap())
}

pub async fn post_tx(router: &Router, body: impl Into<Body>) -> (StatusCode, Value) {
    let request = Request::post("/api/tx").header("content-type", "application/json").body(body.into()).unwrap();
    let (status, body) = call(router, request).await;
    (status, serde_json::from_str(&body).unwrap())
}

pub async fn post_sms(router: &Router, from: &str, text: &str) -> (StatusCode, String) {
    let form = format!("From={}&Body={}", urlencode(from), urlencode(text));
    let request = Request::post("/sms")
        .header("content-type", "application/x-www-form-urlencoded")
        .body(Body::from(form))
        .unwrap();
    call(router, request).await
}

fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

/// Historian records with the per-submission fields blanked.
pub fn modulo_ids(records: &[HistorianRecord]) -> Vec<HistorianRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            r.tx_id = String::new();
            r.timestamp = 0;
            r
        })
        .collect()
}
