use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalError;
use crate::chain::{ChainError, StoreError, VerifyError};
use crate::netdef::ModelError;

/// Error codes carried in transaction results and gateway responses.
///
/// The serialized form (`SCREAMING_SNAKE_CASE`) is part of the on-chain
/// encoding, so variants must never be renamed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    // admission
    MalformedEnvelope,
    NonCanonicalPayload,
    DuplicateTx,
    UnknownTxType,
    SchemaViolation,
    BadSignature,
    // registry and identity
    UnknownParticipant,
    DuplicateParticipant,
    UnknownCard,
    DuplicateCard,
    AlreadyRevoked,
    NotAuthorized,
    InvalidField,
    NonCanonicalBody,
    // identity-based access
    DuplicateAsset,
    UnknownAsset,
    AssetKindMismatch,
    OwnerSelfRequest,
    DuplicatePending,
    NotOwner,
    UnknownRequest,
    AccessDenied,
    // role-based access
    UnknownOrg,
    DuplicateOrg,
    NotOrgAdmin,
    UnknownBinding,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::MalformedEnvelope => "MALFORMED_ENVELOPE",
            ErrorCode::NonCanonicalPayload => "NON_CANONICAL_PAYLOAD",
            ErrorCode::DuplicateTx => "DUPLICATE_TX",
            ErrorCode::UnknownTxType => "UNKNOWN_TX_TYPE",
            ErrorCode::SchemaViolation => "SCHEMA_VIOLATION",
            ErrorCode::BadSignature => "BAD_SIGNATURE",
            ErrorCode::UnknownParticipant => "UNKNOWN_PARTICIPANT",
            ErrorCode::DuplicateParticipant => "DUPLICATE_PARTICIPANT",
            ErrorCode::UnknownCard => "UNKNOWN_CARD",
            ErrorCode::DuplicateCard => "DUPLICATE_CARD",
            ErrorCode::AlreadyRevoked => "ALREADY_REVOKED",
            ErrorCode::NotAuthorized => "NOT_AUTHORIZED",
            ErrorCode::InvalidField => "INVALID_FIELD",
            ErrorCode::NonCanonicalBody => "NON_CANONICAL_BODY",
            ErrorCode::DuplicateAsset => "DUPLICATE_ASSET",
            ErrorCode::UnknownAsset => "UNKNOWN_ASSET",
            ErrorCode::AssetKindMismatch => "ASSET_KIND_MISMATCH",
            ErrorCode::OwnerSelfRequest => "OWNER_SELF_REQUEST",
            ErrorCode::DuplicatePending => "DUPLICATE_PENDING",
            ErrorCode::NotOwner => "NOT_OWNER",
            ErrorCode::UnknownRequest => "UNKNOWN_REQUEST",
            ErrorCode::AccessDenied => "ACCESS_DENIED",
            ErrorCode::UnknownOrg => "UNKNOWN_ORG",
            ErrorCode::DuplicateOrg => "DUPLICATE_ORG",
            ErrorCode::NotOrgAdmin => "NOT_ORG_ADMIN",
            ErrorCode::UnknownBinding => "UNKNOWN_BINDING",
        }
    }

    /// True for codes raised before a transaction reaches its processor.
    /// Such submissions are never written to the ledger.
    pub fn is_admission(self) -> bool {
        matches!(
            self,
            ErrorCode::MalformedEnvelope
                | ErrorCode::NonCanonicalPayload
                | ErrorCode::DuplicateTx
                | ErrorCode::UnknownTxType
                | ErrorCode::SchemaViolation
                | ErrorCode::BadSignature
        )
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Crate-level error for operations outside transaction execution.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("invalid key material: {0}")]
    Key(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("model declares transaction type `{0}` but no processor is registered for it")]
    MissingProcessor(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
