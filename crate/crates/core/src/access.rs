//! Access decisions shared by both business networks, and the view
//! processor that discloses an asset's dataset reference.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bibac::DataAsset;
use crate::brbac::{OrgAsset, RoleBinding};
use crate::chain::{EventKind, TxEnvelope, TxEvent};
use crate::error::ErrorCode;
use crate::network::{payload, to_value};
use crate::state::{RecordKind, StateRead, TxContext};

/// Either flavor of asset. Both live under [`RecordKind::Asset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssetRecord {
    Person(DataAsset),
    Org(OrgAsset),
}

impl AssetRecord {
    pub fn load(state: &impl StateRead, asset_id: &str) -> Option<Self> {
        state.read(RecordKind::Asset, asset_id)
    }

    pub fn view(&self) -> AssetView {
        let (asset_id, dataset_ref, metadata) = match self {
            AssetRecord::Person(a) => (&a.asset_id, &a.dataset_ref, &a.metadata),
            AssetRecord::Org(a) => (&a.asset_id, &a.dataset_ref, &a.metadata),
        };
        AssetView { asset_id: asset_id.clone(), dataset_ref: dataset_ref.clone(), metadata: metadata.clone() }
    }
}

/// What a permitted viewer receives. The dataset itself stays off-chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssetView {
    pub asset_id: String,
    pub dataset_ref: String,
    pub metadata: Value,
}

/// Person-owned assets: owner, viewers and editors may view.
/// Org-owned assets: the user needs an active binding in the owning org to
/// one of the asset's viewer or editor roles. Missing assets deny.
pub fn can_access(state: &impl StateRead, asset_id: &str, user_id: &str) -> bool {
    match AssetRecord::load(state, asset_id) {
        Some(AssetRecord::Person(a)) => a.grants_view(user_id),
        Some(AssetRecord::Org(a)) => a
            .viewer_roles
            .iter()
            .chain(a.editor_roles.iter())
            .any(|role| {
                state
                    .read::<RoleBinding>(RecordKind::RoleBinding, &RoleBinding::id_for(&a.owner_org_id, user_id, role))
                    .is_some_and(|b| b.active)
            }),
        None => false,
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CheckPayload {
    asset_id: String,
    user_id: String,
}

/// CanView / VerifyAccess: evaluates and records a decision. Always
/// accepted; the outcome is carried as an ALLOWED or DENIED event.
pub fn process_check(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<(Value, Vec<TxEvent>), ErrorCode> {
    let p: CheckPayload = payload(env)?;
    let allowed = can_access(ctx, &p.asset_id, &p.user_id);
    let event = TxEvent {
        kind: if allowed { EventKind::Allowed } else { EventKind::Denied },
        record_kind: RecordKind::Asset,
        record_id: p.asset_id,
    };
    Ok((Value::Bool(allowed), vec![event]))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ViewPayload {
    asset_id: String,
}

/// ViewAsset: discloses the asset view to a permitted submitter. Denials
/// are rejected with ACCESS_DENIED and stay visible in the historian.
pub fn process_view(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<(Value, Vec<TxEvent>), ErrorCode> {
    let p: ViewPayload = payload(env)?;
    let asset = AssetRecord::load(ctx, &p.asset_id).ok_or(ErrorCode::UnknownAsset)?;
    if !can_access(ctx, &p.asset_id, &env.submitter) {
        return Err(ErrorCode::AccessDenied);
    }
    let event = TxEvent { kind: EventKind::Read, record_kind: RecordKind::Asset, record_id: p.asset_id };
    Ok((to_value(&asset.view()), vec![event]))
}
