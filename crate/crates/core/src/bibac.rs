//! Identity-based access control: person-owned data assets with per-user
//! viewer and editor lists.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::access::AssetRecord;
use crate::brbac::is_org_admin;
use crate::chain::TxEnvelope;
use crate::error::ErrorCode;
use crate::network::{payload, to_value, valid_id};
use crate::state::{RecordKind, StateRead, TxContext};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DataAsset {
    pub asset_id: String,
    /// Opaque reference to the off-chain dataset.
    pub dataset_ref: String,
    pub owner_id: String,
    /// Sorted, deduplicated, never contains the owner.
    pub viewers: Vec<String>,
    /// Sorted, deduplicated, never contains the owner.
    pub editors: Vec<String>,
    pub metadata: Value,
}

impl DataAsset {
    /// Owner access is implicit; editors can also view.
    pub fn grants_view(&self, user_id: &str) -> bool {
        self.owner_id == user_id
            || self.viewers.iter().any(|v| v == user_id)
            || self.editors.iter().any(|e| e == user_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AccessLevel {
    View,
    Edit,
}

impl AccessLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessLevel::View => "VIEW",
            AccessLevel::Edit => "EDIT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestStatus {
    Pending,
    Granted,
    Denied,
    Revoked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AccessRequest {
    pub request_id: String,
    pub asset_id: String,
    pub requester_id: String,
    pub level: AccessLevel,
    pub status: RequestStatus,
    pub created_at_height: u64,
}

fn sorted_set<'a>(ids: impl IntoIterator<Item = &'a String>, exclude: &str) -> Vec<String> {
    ids.into_iter()
        .filter(|id| id.as_str() != exclude)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn load_person_asset(ctx: &TxContext<'_>, asset_id: &str) -> Result<DataAsset, ErrorCode> {
    match AssetRecord::load(ctx, asset_id) {
        Some(AssetRecord::Person(a)) => Ok(a),
        Some(AssetRecord::Org(_)) => Err(ErrorCode::AssetKindMismatch),
        None => Err(ErrorCode::UnknownAsset),
    }
}

/// Owner of a person asset, or an admin of the org owning an org asset.
fn controls_asset(ctx: &TxContext<'_>, asset: &AssetRecord, who: &str) -> bool {
    match asset {
        AssetRecord::Person(a) => a.owner_id == who,
        AssetRecord::Org(a) => is_org_admin(ctx, &a.owner_org_id, who),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateAsset {
    asset_id: String,
    dataset_ref: String,
    #[serde(default)]
    metadata: Option<Map<String, Value>>,
}

pub fn process_create_asset(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: CreateAsset = payload(env)?;
    if !valid_id(&p.asset_id) {
        return Err(ErrorCode::InvalidField);
    }
    if !ctx.exists(RecordKind::Participant, &env.submitter) {
        return Err(ErrorCode::UnknownParticipant);
    }
    if ctx.exists(RecordKind::Asset, &p.asset_id) {
        return Err(ErrorCode::DuplicateAsset);
    }
    let asset = DataAsset {
        asset_id: p.asset_id,
        dataset_ref: p.dataset_ref,
        owner_id: env.submitter.clone(),
        viewers: Vec::new(),
        editors: Vec::new(),
        metadata: Value::Object(p.metadata.unwrap_or_default()),
    };
    ctx.put(RecordKind::Asset, &asset.asset_id, &asset)?;
    Ok(to_value(&asset))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RequestAccessPayload {
    asset_id: String,
    level: String,
}

/// RequestAccess: records a PENDING request for the owner to decide on.
/// Request ids are `{asset}:{requester}:{level}:{n}` with `n` counting
/// earlier requests for the same triple, so they depend only on state.
pub fn process_request_access(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RequestAccessPayload = payload(env)?;
    let level = match p.level.to_ascii_uppercase().as_str() {
        "VIEW" => AccessLevel::View,
        "EDIT" => AccessLevel::Edit,
        _ => return Err(ErrorCode::InvalidField),
    };
    let asset = AssetRecord::load(ctx, &p.asset_id).ok_or(ErrorCode::UnknownAsset)?;
    if controls_asset(ctx, &asset, &env.submitter) {
        return Err(ErrorCode::OwnerSelfRequest);
    }
    let earlier: Vec<AccessRequest> = ctx
        .scan_as::<AccessRequest>(RecordKind::AccessRequest)
        .into_iter()
        .filter(|r| r.asset_id == p.asset_id && r.requester_id == env.submitter && r.level == level)
        .collect();
    if earlier.iter().any(|r| r.status == RequestStatus::Pending) {
        return Err(ErrorCode::DuplicatePending);
    }
    let request = AccessRequest {
        request_id: format!("{}:{}:{}:{}", p.asset_id, env.submitter, level.as_str(), earlier.len() + 1),
        asset_id: p.asset_id,
        requester_id: env.submitter.clone(),
        level,
        status: RequestStatus::Pending,
        created_at_height: ctx.height(),
    };
    ctx.put(RecordKind::AccessRequest, &request.request_id, &request)?;
    Ok(to_value(&request))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct GiveAccess {
    asset_id: String,
    viewers: Vec<String>,
    editors: Vec<String>,
    #[serde(default)]
    request_id: Option<String>,
}

/// GiveAccess: the owner adds viewers and editors. Lists are merged with
/// the existing grants, never replaced.
pub fn process_give_access(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: GiveAccess = payload(env)?;
    let mut asset = load_person_asset(ctx, &p.asset_id)?;
    if asset.owner_id != env.submitter {
        return Err(ErrorCode::NotOwner);
    }
    if p.viewers.iter().chain(&p.editors).any(|id| !ctx.exists(RecordKind::Participant, id)) {
        return Err(ErrorCode::UnknownParticipant);
    }
    if let Some(request_id) = &p.request_id {
        let mut request: AccessRequest =
            ctx.read(RecordKind::AccessRequest, request_id).ok_or(ErrorCode::UnknownRequest)?;
        if request.asset_id != asset.asset_id {
            return Err(ErrorCode::UnknownRequest);
        }
        if request.status == RequestStatus::Pending {
            request.status = RequestStatus::Granted;
            ctx.put(RecordKind::AccessRequest, request_id, &request)?;
        }
    }
    let before = asset.clone();
    asset.viewers = sorted_set(asset.viewers.iter().chain(&p.viewers), &asset.owner_id);
    asset.editors = sorted_set(asset.editors.iter().chain(&p.editors), &asset.owner_id);
    if asset != before {
        ctx.put(RecordKind::Asset, &asset.asset_id, &asset)?;
    }
    Ok(to_value(&asset))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DenyAccess {
    request_id: String,
}

/// DenyAccess: the asset's controller turns a PENDING request down.
pub fn process_deny_access(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: DenyAccess = payload(env)?;
    let mut request: AccessRequest =
        ctx.read(RecordKind::AccessRequest, &p.request_id).ok_or(ErrorCode::UnknownRequest)?;
    let asset = AssetRecord::load(ctx, &request.asset_id).ok_or(ErrorCode::UnknownAsset)?;
    if !controls_asset(ctx, &asset, &env.submitter) {
        return Err(ErrorCode::NotOwner);
    }
    if request.status != RequestStatus::Pending {
        return Err(ErrorCode::UnknownRequest);
    }
    request.status = RequestStatus::Denied;
    ctx.put(RecordKind::AccessRequest, &p.request_id, &request)?;
    Ok(to_value(&request))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RevokeAccess {
    asset_id: String,
    users: Vec<String>,
}

/// RevokeAccess: the owner removes users from both lists. Their GRANTED
/// requests on the asset become REVOKED.
pub fn process_revoke_access(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RevokeAccess = payload(env)?;
    let mut asset = load_person_asset(ctx, &p.asset_id)?;
    if asset.owner_id != env.submitter {
        return Err(ErrorCode::NotOwner);
    }
    let before = asset.clone();
    asset.viewers.retain(|v| !p.users.contains(v));
    asset.editors.retain(|e| !p.users.contains(e));
    let granted: Vec<AccessRequest> = ctx
        .scan_as::<AccessRequest>(RecordKind::AccessRequest)
        .into_iter()
        .filter(|r| r.asset_id == asset.asset_id && r.status == RequestStatus::Granted && p.users.contains(&r.requester_id))
        .collect();
    for mut r in granted {
        r.status = RequestStatus::Revoked;
        ctx.put(RecordKind::AccessRequest, &r.request_id.clone(), &r)?;
    }
    if asset != before {
        ctx.put(RecordKind::Asset, &asset.asset_id, &asset)?;
    }
    Ok(to_value(&asset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::WorldState;
    use serde_json::json;

    fn seeded() -> WorldState {
        let mut s = WorldState::new();
        let mut ctx = TxContext::new(&s, 1);
        for id in ["p1", "p2", "p3", "p4"] {
            ctx.put(RecordKind::Participant, id, &json!({"participantId": id, "displayName": id})).unwrap();
        }
        let asset = DataAsset {
            asset_id: "a1".into(),
            dataset_ref: "cassandra://genotype/q1".into(),
            owner_id: "p1".into(),
            viewers: vec![],
            editors: vec![],
            metadata: json!({}),
        };
        ctx.put(RecordKind::Asset, "a1", &asset).unwrap();
        let w = ctx.into_writes();
        s.apply(w);
        s
    }

    fn run(
        state: &mut WorldState,
        f: fn(&mut TxContext<'_>, &TxEnvelope) -> Result<Value, ErrorCode>,
        submitter: &str,
        body: Value,
    ) -> Result<Value, ErrorCode> {
        let env = TxEnvelope::new("T", body, submitter, 0);
        let mut ctx = TxContext::new(state, 2);
        let out = f(&mut ctx, &env)?;
        let w = ctx.into_writes();
        state.apply(w);
        Ok(out)
    }

    fn asset(state: &WorldState) -> DataAsset {
        match AssetRecord::load(state, "a1").unwrap() {
            AssetRecord::Person(a) => a,
            AssetRecord::Org(_) => unreachable!(),
        }
    }

    #[test]
    fn create_twice_is_duplicate() {
        let mut s = seeded();
        let before = s.state_hash();
        let r = run(&mut s, process_create_asset, "p2", json!({"assetId": "a1", "datasetRef": "x"}));
        assert_eq!(r, Err(ErrorCode::DuplicateAsset));
        assert_eq!(s.state_hash(), before);
    }

    #[test]
    fn grant_into_empty_and_idempotent() {
        let mut s = seeded();
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p2"], "editors": []})).unwrap();
        assert_eq!(asset(&s).viewers, vec!["p2"]);
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p2"], "editors": []})).unwrap();
        assert_eq!(asset(&s).viewers, vec!["p2"]);
    }

    #[test]
    fn grant_keeps_previous_and_excludes_owner() {
        let mut s = seeded();
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p3"], "editors": []})).unwrap();
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p2", "p1", "p2"], "editors": ["p1"]}))
            .unwrap();
        let a = asset(&s);
        assert_eq!(a.viewers, vec!["p2", "p3"]);
        assert!(a.editors.is_empty());
    }

    #[test]
    fn non_owner_grant_is_refused() {
        let mut s = seeded();
        let before = s.state_hash();
        let r = run(&mut s, process_give_access, "p3", json!({"assetId": "a1", "viewers": ["p3"], "editors": []}));
        assert_eq!(r, Err(ErrorCode::NotOwner));
        assert_eq!(s.state_hash(), before);
    }

    #[test]
    fn grant_to_unknown_participant_is_refused() {
        let mut s = seeded();
        let r = run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p9"], "editors": []}));
        assert_eq!(r, Err(ErrorCode::UnknownParticipant));
    }

    #[test]
    fn revoke_removes_from_both_lists() {
        let mut s = seeded();
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p2", "p3"], "editors": ["p2"]}))
            .unwrap();
        run(&mut s, process_revoke_access, "p1", json!({"assetId": "a1", "users": ["p2"]})).unwrap();
        let a = asset(&s);
        assert_eq!(a.viewers, vec!["p3"]);
        assert!(a.editors.is_empty());
    }

    #[test]
    fn revoke_of_absent_user_is_a_no_op() {
        let mut s = seeded();
        run(&mut s, process_give_access, "p1", json!({"assetId": "a1", "viewers": ["p3"], "editors": []})).unwrap();
        let before = s.state_hash();
        run(&mut s, process_revoke_access, "p1", json!({"assetId": "a1", "users": ["p4"]})).unwrap();
        assert_eq!(s.state_hash(), before);
    }

    #[test]
    fn request_lifecycle() {
        let mut s = seeded();
        let req = run(&mut s, process_request_access, "p2", json!({"assetId": "a1", "level": "VIEW"})).unwrap();
        assert_eq!(req["status"], "PENDING");
        assert_eq!(req["requestId"], "a1:p2:VIEW:1");
        assert_eq!(
            run(&mut s, process_request_access, "p2", json!({"assetId": "a1", "level": "VIEW"})),
            Err(ErrorCode::DuplicatePending)
        );
        assert_eq!(
            run(&mut s, process_request_access, "p1", json!({"assetId": "a1", "level": "VIEW"})),
            Err(ErrorCode::OwnerSelfRequest)
        );
        run(
            &mut s,
            process_give_access,
            "p1",
            json!({"assetId": "a1", "viewers": ["p2"], "editors": [], "requestId": "a1:p2:VIEW:1"}),
        )
        .unwrap();
        let r: AccessRequest = s.read(RecordKind::AccessRequest, "a1:p2:VIEW:1").unwrap();
        assert_eq!(r.status, RequestStatus::Granted);
        run(&mut s, process_revoke_access, "p1", json!({"assetId": "a1", "users": ["p2"]})).unwrap();
        let r: AccessRequest = s.read(RecordKind::AccessRequest, "a1:p2:VIEW:1").unwrap();
        assert_eq!(r.status, RequestStatus::Revoked);
        // a fresh request after the revoke gets the next sequence number
        let req = run(&mut s, process_request_access, "p2", json!({"assetId": "a1", "level": "VIEW"})).unwrap();
        assert_eq!(req["requestId"], "a1:p2:VIEW:2");
    }

    #[test]
    fn deny_only_pending() {
        let mut s = seeded();
        run(&mut s, process_request_access, "p2", json!({"assetId": "a1", "level": "EDIT"})).unwrap();
        assert_eq!(
            run(&mut s, process_deny_access, "p3", json!({"requestId": "a1:p2:EDIT:1"})),
            Err(ErrorCode::NotOwner)
        );
        run(&mut s, process_deny_access, "p1", json!({"requestId": "a1:p2:EDIT:1"})).unwrap();
        assert_eq!(
            run(&mut s, process_deny_access, "p1", json!({"requestId": "a1:p2:EDIT:1"})),
            Err(ErrorCode::UnknownRequest)
        );
    }

    #[test]
    fn unknown_request_id_is_refused() {
        let mut s = seeded();
        let r = run(
            &mut s,
            process_give_access,
            "p1",
            json!({"assetId": "a1", "viewers": ["p2"], "editors": [], "requestId": "nope"}),
        );
        assert_eq!(r, Err(ErrorCode::UnknownRequest));
    }
}
