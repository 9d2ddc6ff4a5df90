//! Participant registry: persons, the genesis network administrator, and
//! helpers shared by every transaction processor.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chain::TxEnvelope;
use crate::error::ErrorCode;
use crate::identity::{CardStatus, IdentityCard};
use crate::state::{RecordKind, StateRead, TxContext};

/// Transaction type used only inside the genesis block.
pub const BOOTSTRAP_TX: &str = "Bootstrap";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PersonParticipant {
    pub participant_id: String,
    pub display_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_id: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub network_admin: bool,
}

/// Identifiers are non-empty, at most 128 chars, and free of whitespace,
/// `:` and `,` (composite keys and the SMS grammar rely on this).
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.chars().count() <= 128
        && !id.chars().any(|c| c.is_whitespace() || c == ':' || c == ',')
}

/// Decode a typed payload. Shape errors surface as SCHEMA_VIOLATION.
pub fn payload<T: DeserializeOwned>(env: &TxEnvelope) -> Result<T, ErrorCode> {
    T::deserialize(&env.payload).map_err(|_| ErrorCode::SchemaViolation)
}

pub fn is_network_admin(state: &impl StateRead, participant_id: &str) -> bool {
    state
        .read::<PersonParticipant>(RecordKind::Participant, participant_id)
        .is_some_and(|p| p.network_admin)
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("record types serialize")
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RegisterPerson {
    participant_id: String,
    display_name: String,
    #[serde(default)]
    org_id: Option<String>,
}

/// RegisterPerson: network admin adds a person participant.
pub fn process_register_person(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RegisterPerson = payload(env)?;
    if !is_network_admin(ctx, &env.submitter) {
        return Err(ErrorCode::NotAuthorized);
    }
    if !valid_id(&p.participant_id) {
        return Err(ErrorCode::InvalidField);
    }
    if ctx.exists(RecordKind::Participant, &p.participant_id) {
        return Err(ErrorCode::DuplicateParticipant);
    }
    if let Some(org) = &p.org_id {
        if !ctx.exists(RecordKind::Organization, org) {
            return Err(ErrorCode::UnknownOrg);
        }
    }
    let person = PersonParticipant {
        participant_id: p.participant_id,
        display_name: p.display_name,
        org_id: p.org_id,
        network_admin: false,
    };
    ctx.put(RecordKind::Participant, &person.participant_id, &person)?;
    Ok(to_value(&person))
}

/// Payload of the genesis bootstrap entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BootstrapAdmin {
    pub participant_id: String,
    pub display_name: String,
    pub card_id: String,
    pub public_key: String,
}

/// Genesis-only: create the network administrator and its first card.
pub fn process_bootstrap(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: BootstrapAdmin = payload(env)?;
    if ctx.height() != 0 || env.submitter != p.participant_id {
        return Err(ErrorCode::NotAuthorized);
    }
    if !valid_id(&p.participant_id) || !valid_id(&p.card_id) {
        return Err(ErrorCode::InvalidField);
    }
    if ctx.exists(RecordKind::Participant, &p.participant_id) {
        return Err(ErrorCode::DuplicateParticipant);
    }
    if ctx.exists(RecordKind::IdentityCard, &p.card_id) {
        return Err(ErrorCode::DuplicateCard);
    }
    let admin = PersonParticipant {
        participant_id: p.participant_id.clone(),
        display_name: p.display_name,
        org_id: None,
        network_admin: true,
    };
    let card = IdentityCard {
        card_id: p.card_id,
        participant_id: p.participant_id,
        public_key: p.public_key,
        issued_at_height: 0,
        status: CardStatus::Active,
    };
    ctx.put(RecordKind::Participant, &admin.participant_id, &admin)?;
    ctx.put(RecordKind::IdentityCard, &card.card_id, &card)?;
    Ok(to_value(&admin))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_rules() {
        assert!(valid_id("p1"));
        assert!(valid_id("dataset-42_b"));
        assert!(!valid_id(""));
        assert!(!valid_id("a b"));
        assert!(!valid_id("a:b"));
        assert!(!valid_id("a,b"));
        assert!(!valid_id(&"x".repeat(129)));
    }
}
