//! Participant identities: Ed25519 key pairs, identity cards, envelope
//! signing and verification, and the card issue/revoke processors.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::CanonicalError;
use crate::chain::TxEnvelope;
use crate::error::{Error, ErrorCode};
use crate::network::{is_network_admin, payload, valid_id};
use crate::state::{RecordKind, StateRead, TxContext};

/// Signing key plus its public half. The secret never enters ledger or
/// state records.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair").field("public_key", &self.public_key_b64()).finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn generate() -> Self {
        Self { signing: SigningKey::generate(&mut rand::rngs::OsRng) }
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self { signing: SigningKey::from_bytes(&seed) }
    }

    pub fn from_secret_b64(secret: &str) -> Result<Self, Error> {
        let bytes = B64.decode(secret).map_err(|e| Error::Key(e.to_string()))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Key("secret key must be 32 bytes".into()))?;
        Ok(Self::from_seed(seed))
    }

    pub fn public_key_b64(&self) -> String {
        B64.encode(self.signing.verifying_key().as_bytes())
    }

    pub fn secret_key_b64(&self) -> String {
        B64.encode(self.signing.to_bytes())
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        self.signing.sign(message).to_bytes().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CardStatus {
    Active,
    Revoked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IdentityCard {
    pub card_id: String,
    pub participant_id: String,
    pub public_key: String,
    pub issued_at_height: u64,
    pub status: CardStatus,
}

impl IdentityCard {
    pub fn is_active(&self) -> bool {
        self.status == CardStatus::Active
    }
}

/// On-disk key file written by `id issue` and read by the gateway keystore.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeyFile {
    pub card_id: String,
    pub participant_id: String,
    pub public_key: String,
    pub secret_key: String,
}

impl KeyFile {
    pub fn new(card_id: impl Into<String>, participant_id: impl Into<String>, keys: &KeyPair) -> Self {
        Self {
            card_id: card_id.into(),
            participant_id: participant_id.into(),
            public_key: keys.public_key_b64(),
            secret_key: keys.secret_key_b64(),
        }
    }

    pub fn key_pair(&self) -> Result<KeyPair, Error> {
        let keys = KeyPair::from_secret_b64(&self.secret_key)?;
        if keys.public_key_b64() != self.public_key {
            return Err(Error::Key(format!("key file for card {} has mismatched halves", self.card_id)));
        }
        Ok(keys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), Error> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Base64 signature over the envelope's canonical bytes (signature absent).
/// Ed25519 is deterministic, so equal inputs give equal signatures.
pub fn sign_envelope(key: &KeyPair, envelope: &TxEnvelope) -> Result<String, CanonicalError> {
    let bytes = envelope.signing_bytes()?;
    Ok(B64.encode(key.sign(&bytes)))
}

/// True iff the signature is valid under the card's key, the card is
/// active, and the card belongs to the envelope's submitter.
pub fn verify_envelope(envelope: &TxEnvelope, card: &IdentityCard) -> bool {
    if !card.is_active() || card.participant_id != envelope.submitter {
        return false;
    }
    let Some(key) = decode_public_key(&card.public_key) else {
        return false;
    };
    let Ok(sig_bytes) = B64.decode(&envelope.signature) else {
        return false;
    };
    let Ok(sig) = Signature::from_slice(&sig_bytes) else {
        return false;
    };
    let Ok(message) = envelope.signing_bytes() else {
        return false;
    };
    key.verify(&message, &sig).is_ok()
}

fn decode_public_key(b64: &str) -> Option<VerifyingKey> {
    let bytes: [u8; 32] = B64.decode(b64).ok()?.try_into().ok()?;
    VerifyingKey::from_bytes(&bytes).ok()
}

/// The participant's ACTIVE card, if any.
pub fn active_card(ctx: &impl CardScan, participant_id: &str) -> Option<IdentityCard> {
    ctx.cards().into_iter().find(|c| c.participant_id == participant_id && c.is_active())
}

/// Enumerates identity cards from committed or staged state.
pub trait CardScan {
    fn cards(&self) -> Vec<IdentityCard>;
}

impl CardScan for crate::state::WorldState {
    fn cards(&self) -> Vec<IdentityCard> {
        self.records_of(RecordKind::IdentityCard)
            .filter_map(|r| IdentityCard::deserialize(&r.body).ok())
            .collect()
    }
}

impl CardScan for TxContext<'_> {
    fn cards(&self) -> Vec<IdentityCard> {
        self.scan_as(RecordKind::IdentityCard)
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct IssueIdentity {
    participant_id: String,
    card_id: String,
    public_key: String,
}

/// IssueIdentity: network admin issues a new ACTIVE card; any previously
/// active card of the participant is revoked in the same commit.
pub fn process_issue_identity(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: IssueIdentity = payload(env)?;
    if !is_network_admin(ctx, &env.submitter) {
        return Err(ErrorCode::NotAuthorized);
    }
    if !ctx.exists(RecordKind::Participant, &p.participant_id) {
        return Err(ErrorCode::UnknownParticipant);
    }
    if !valid_id(&p.card_id) || decode_public_key(&p.public_key).is_none() {
        return Err(ErrorCode::InvalidField);
    }
    if ctx.exists(RecordKind::IdentityCard, &p.card_id) {
        return Err(ErrorCode::DuplicateCard);
    }
    if let Some(mut previous) = active_card(ctx, &p.participant_id) {
        previous.status = CardStatus::Revoked;
        ctx.put(RecordKind::IdentityCard, &previous.card_id.clone(), &previous)?;
    }
    let card = IdentityCard {
        card_id: p.card_id,
        participant_id: p.participant_id,
        public_key: p.public_key,
        issued_at_height: ctx.height(),
        status: CardStatus::Active,
    };
    ctx.put(RecordKind::IdentityCard, &card.card_id, &card)?;
    Ok(serde_json::to_value(card).expect("card serializes"))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RevokeIdentity {
    card_id: String,
}

/// RevokeIdentity: the card holder or a network admin revokes a card.
pub fn process_revoke_identity(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RevokeIdentity = payload(env)?;
    let mut card: IdentityCard = ctx.read(RecordKind::IdentityCard, &p.card_id).ok_or(ErrorCode::UnknownCard)?;
    if card.participant_id != env.submitter && !is_network_admin(ctx, &env.submitter) {
        return Err(ErrorCode::NotAuthorized);
    }
    if !card.is_active() {
        return Err(ErrorCode::AlreadyRevoked);
    }
    card.status = CardStatus::Revoked;
    ctx.put(RecordKind::IdentityCard, &p.card_id, &card)?;
    Ok(serde_json::to_value(card).expect("card serializes"))
}
