//! HTTP edge of a node: signed envelope submission, read-only queries and
//! the SMS webhook.

mod committer;
pub mod sms;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Form, Json, Router};
use parking_lot::RwLock;
use serde::Deserialize;
use serde_json::{json, Value};

pub use committer::{CommitError, Committer};
pub use sms::{xml_reply, SmsCommand};

use crate::access::AssetRecord;
use crate::chain::{verify_chain, verify_file, HistorianFilter, TxEnvelope, TxStatus};
use crate::config::{Config, PhoneBinding};
use crate::error::{Error, ErrorCode, Result};
use crate::identity::{KeyFile, KeyPair};
use crate::ledger::{Clock, Ledger, Outcome, RequestFilter, SystemClock};

/// Signing keys the gateway holds on behalf of phone-bound cards.
#[derive(Debug, Default)]
pub struct Keystore {
    keys: HashMap<String, KeyPair>,
}

impl Keystore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, card_id: impl Into<String>, key: KeyPair) {
        self.keys.insert(card_id.into(), key);
    }

    pub fn from_key_files(files: impl IntoIterator<Item = KeyFile>) -> Result<Self> {
        let mut store = Self::new();
        for f in files {
            store.insert(f.card_id.clone(), f.key_pair()?);
        }
        Ok(store)
    }

    /// Every `*.json` key file in `dir`. A missing directory is empty.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.exists() {
            return Ok(Self::new());
        }
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                files.push(KeyFile::load(&path)?);
            }
        }
        Self::from_key_files(files)
    }

    pub fn key(&self, card_id: &str) -> Option<&KeyPair> {
        self.keys.get(card_id)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// HTTP status for a submission outcome.
pub fn http_status(code: Option<ErrorCode>) -> StatusCode {
    match code {
        None => StatusCode::OK,
        Some(ErrorCode::MalformedEnvelope | ErrorCode::NonCanonicalPayload) => StatusCode::BAD_REQUEST,
        Some(ErrorCode::BadSignature) => StatusCode::UNAUTHORIZED,
        Some(ErrorCode::UnknownTxType | ErrorCode::SchemaViolation) => StatusCode::UNPROCESSABLE_ENTITY,
        Some(_) => StatusCode::CONFLICT,
    }
}

#[derive(Clone)]
pub struct Gateway {
    ledger: Arc<RwLock<Ledger>>,
    committer: Committer,
    keystore: Arc<Keystore>,
    phones: Arc<HashMap<String, PhoneBinding>>,
    clock: Arc<dyn Clock>,
}

impl Gateway {
    pub fn new(ledger: Ledger, keystore: Keystore, phones: Vec<PhoneBinding>, clock: Arc<dyn Clock>) -> Self {
        let ledger = Arc::new(RwLock::new(ledger));
        Gateway {
            committer: Committer::spawn(ledger.clone()),
            ledger,
            keystore: Arc::new(keystore),
            phones: Arc::new(phones.into_iter().map(|p| (p.phone.clone(), p)).collect()),
            clock,
        }
    }

    pub fn ledger(&self) -> &Arc<RwLock<Ledger>> {
        &self.ledger
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/api/tx", post(submit_tx))
            .route("/api/assets/{id}", get(get_asset))
            .route("/api/historian", get(get_historian))
            .route("/api/can-view", get(get_can_view))
            .route("/api/requests", get(get_requests))
            .route("/api/chain/verify", get(get_verify))
            .route("/api/chain/head", get(get_head))
            .route("/sms", post(post_sms))
            .with_state(self.clone())
    }

    pub async fn submit(&self, envelope: TxEnvelope) -> Result<Outcome, CommitError> {
        self.committer.submit(envelope).await
    }

    /// Resolve, parse, sign and submit one text message. Returns the reply
    /// text (not yet wrapped in XML).
    pub async fn handle_sms(&self, from: &str, body: &str) -> String {
        let Some(binding) = self.phones.get(from) else {
            return "UNKNOWN_PHONE".into();
        };
        let Ok(command) = SmsCommand::parse(body) else {
            return "PARSE_ERROR".into();
        };
        let Some(key) = self.keystore.key(&binding.card_id) else {
            return "KEY_UNAVAILABLE".into();
        };
        let check_tx = self.check_tx(command.asset_id());
        let (tx_type, payload) = command.to_tx(check_tx);
        let envelope = TxEnvelope::new(tx_type.clone(), payload, binding.participant_id.clone(), self.clock.now_ms());
        let envelope = match envelope.signed(key) {
            Ok(e) => e,
            Err(_) => return ErrorCode::NonCanonicalPayload.as_str().into(),
        };
        match self.submit(envelope).await {
            Ok(outcome) => sms_text(&tx_type, command.asset_id(), &outcome),
            Err(e) => {
                tracing::error!(error = %e, "sms submission failed");
                "INTERNAL_ERROR".into()
            }
        }
    }

    fn check_tx(&self, asset_id: &str) -> &'static str {
        let ledger = self.ledger.read();
        let model = ledger.engine().model();
        let org = matches!(ledger.asset(asset_id), Some(AssetRecord::Org(_)));
        if (org && model.declares_tx("VerifyAccess")) || !model.declares_tx("CanView") {
            "VerifyAccess"
        } else {
            "CanView"
        }
    }
}

fn sms_text(tx_type: &str, asset_id: &str, outcome: &Outcome) -> String {
    if let Some(code) = outcome.error_code {
        return code.as_str().into();
    }
    let mut text = format!("OK {tx_type} {asset_id}");
    match (tx_type, &outcome.output) {
        ("CanView" | "VerifyAccess", Some(Value::Bool(allowed))) => {
            text.push_str(if *allowed { " ALLOWED" } else { " DENIED" })
        }
        ("ViewAsset", Some(view)) => {
            if let Some(r) = view.get("datasetRef").and_then(Value::as_str) {
                text.push(' ');
                text.push_str(r);
            }
        }
        _ => {}
    }
    text
}

fn error_body(status: StatusCode, code: &str) -> Response {
    (status, Json(json!({ "error": code }))).into_response()
}

async fn submit_tx(State(gw): State<Gateway>, body: Bytes) -> Response {
    let envelope: TxEnvelope = match serde_json::from_slice(&body) {
        Ok(e) => e,
        Err(_) => {
            let code = ErrorCode::MalformedEnvelope;
            return (http_status(Some(code)), Json(json!({"status": TxStatus::Rejected, "errorCode": code})))
                .into_response();
        }
    };
    match gw.submit(envelope).await {
        Ok(outcome) => (http_status(outcome.error_code), Json(outcome)).into_response(),
        Err(e) => {
            tracing::error!(error = %e, "submission failed");
            error_body(StatusCode::SERVICE_UNAVAILABLE, "INTERNAL_ERROR")
        }
    }
}

async fn get_asset(State(gw): State<Gateway>, UrlPath(id): UrlPath<String>) -> Response {
    match gw.ledger.read().asset(&id) {
        Some(asset) => Json(asset).into_response(),
        None => error_body(StatusCode::NOT_FOUND, ErrorCode::UnknownAsset.as_str()),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct HistorianParams {
    submitter: Option<String>,
    asset_id: Option<String>,
    tx_type: Option<String>,
    from_height: Option<u64>,
    to_height: Option<u64>,
}

async fn get_historian(State(gw): State<Gateway>, Query(p): Query<HistorianParams>) -> Response {
    let height_range = match (p.from_height, p.to_height) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(u64::MAX))),
    };
    let filter = HistorianFilter { submitter: p.submitter, asset_id: p.asset_id, tx_type: p.tx_type, height_range };
    Json(gw.ledger.read().historian(&filter)).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CanViewParams {
    asset_id: String,
    user_id: String,
}

async fn get_can_view(State(gw): State<Gateway>, Query(p): Query<CanViewParams>) -> Response {
    let can_view = gw.ledger.read().can_view(&p.asset_id, &p.user_id);
    Json(json!({ "canView": can_view })).into_response()
}

async fn get_requests(State(gw): State<Gateway>, Query(filter): Query<RequestFilter>) -> Response {
    Json(gw.ledger.read().requests(&filter)).into_response()
}

async fn get_head(State(gw): State<Gateway>) -> Response {
    let ledger = gw.ledger.read();
    Json(json!({
        "height": ledger.height(),
        "blockHash": ledger.tip().block_hash,
        "stateHash": ledger.state_hash(),
        "network": ledger.engine().model().network_name,
    }))
    .into_response()
}

/// Re-verifies the persisted block file (or the in-memory chain when the
/// ledger has no file). Commits wait while this runs; reads do not.
async fn get_verify(State(gw): State<Gateway>) -> Response {
    let ledger = gw.ledger.clone();
    let result = tokio::task::spawn_blocking(move || {
        let ledger = ledger.read();
        let engine = ledger.engine().clone();
        match ledger.path() {
            Some(path) => verify_file(path, &engine).map(|(_, state)| state),
            None => verify_chain(ledger.blocks(), &engine),
        }
    })
    .await;
    match result {
        Ok(Ok(state)) => Json(json!({"ok": true, "height": gw.ledger.read().height(), "stateHash": state.state_hash()}))
            .into_response(),
        Ok(Err(e)) => match e.failure() {
            Some((height, reason)) => Json(json!({"ok": false, "height": height, "reason": reason})).into_response(),
            None => Json(json!({"ok": false, "error": e.to_string()})).into_response(),
        },
        Err(_) => error_body(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL_ERROR"),
    }
}

#[derive(Debug, Deserialize)]
struct SmsForm {
    #[serde(rename = "From", default)]
    from: String,
    #[serde(rename = "Body", default)]
    body: String,
}

async fn post_sms(State(gw): State<Gateway>, Form(form): Form<SmsForm>) -> Response {
    let text = gw.handle_sms(form.from.trim(), &form.body).await;
    ([(header::CONTENT_TYPE, "text/xml")], xml_reply(&text)).into_response()
}

/// Open (or create) the ledger named by `config` and serve until Ctrl-C.
pub async fn serve(config: Config) -> Result<()> {
    let engine = Arc::new(config.engine()?);
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let ledger = if config.blocks.exists() {
        Ledger::open(&config.blocks, engine, clock.clone())?
    } else {
        let admins = config.bootstrap_admins();
        if admins.is_empty() {
            return Err(Error::Config("no block file yet and no [bootstrap] section to create one".into()));
        }
        if let Some(dir) = config.blocks.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ledger::create(&config.blocks, engine, &admins, clock.clone())?
    };
    tracing::info!(height = ledger.height(), state_hash = %ledger.state_hash(), "ledger ready");
    let keystore = Keystore::load_dir(&config.keystore)?;
    tracing::info!(keys = keystore.len(), phones = config.phones.len(), "keystore loaded");
    let gateway = Gateway::new(ledger, keystore, config.phones.clone(), clock);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %config.listen, "listening");
    axum::serve(listener, gateway.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
