//! Role-based access control: organizations own assets, their admins bind
//! roles to persons and attach role lists to assets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::access::AssetRecord;
use crate::chain::TxEnvelope;
use crate::error::ErrorCode;
use crate::network::{is_network_admin, payload, to_value, valid_id};
use crate::state::{RecordKind, StateRead, TxContext};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Organization {
    pub org_id: String,
    pub name: String,
    /// Non-empty, sorted, deduplicated.
    pub admin_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleBinding {
    pub binding_id: String,
    pub org_id: String,
    pub user_id: String,
    pub role: String,
    pub active: bool,
}

impl RoleBinding {
    /// Org and user ids never contain `:`, so this is injective.
    pub fn id_for(org_id: &str, user_id: &str, role: &str) -> String {
        format!("{org_id}:{user_id}:{role}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OrgAsset {
    pub asset_id: String,
    pub dataset_ref: String,
    pub owner_org_id: String,
    pub viewer_roles: Vec<String>,
    pub editor_roles: Vec<String>,
    pub metadata: Value,
}

pub fn is_org_admin(state: &impl StateRead, org_id: &str, who: &str) -> bool {
    state
        .read::<Organization>(RecordKind::Organization, org_id)
        .is_some_and(|o| o.admin_ids.iter().any(|a| a == who))
}

fn valid_role(role: &str) -> bool {
    !role.is_empty() && role.chars().count() <= 64 && !role.chars().any(|c| c.is_whitespace() || c == ',')
}

fn canonical_roles(roles: &[String]) -> Result<Vec<String>, ErrorCode> {
    if roles.iter().any(|r| !valid_role(r)) {
        return Err(ErrorCode::InvalidField);
    }
    Ok(roles.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect())
}

fn load_org(ctx: &TxContext<'_>, org_id: &str, submitter: &str) -> Result<Organization, ErrorCode> {
    let org: Organization = ctx.read(RecordKind::Organization, org_id).ok_or(ErrorCode::UnknownOrg)?;
    if !org.admin_ids.iter().any(|a| a == submitter) {
        return Err(ErrorCode::NotOrgAdmin);
    }
    Ok(org)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RegisterOrganization {
    org_id: String,
    name: String,
    admin_ids: Vec<String>,
}

/// RegisterOrganization: network admin creates an org with its admins.
pub fn process_register_organization(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RegisterOrganization = payload(env)?;
    if !is_network_admin(ctx, &env.submitter) {
        return Err(ErrorCode::NotAuthorized);
    }
    if !valid_id(&p.org_id) || p.admin_ids.is_empty() {
        return Err(ErrorCode::InvalidField);
    }
    if ctx.exists(RecordKind::Organization, &p.org_id) {
        return Err(ErrorCode::DuplicateOrg);
    }
    if p.admin_ids.iter().any(|a| !ctx.exists(RecordKind::Participant, a)) {
        return Err(ErrorCode::UnknownParticipant);
    }
    let org = Organization {
        org_id: p.org_id,
        name: p.name,
        admin_ids: p.admin_ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    ctx.put(RecordKind::Organization, &org.org_id, &org)?;
    Ok(to_value(&org))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateOrgAsset {
    asset_id: String,
    dataset_ref: String,
    org_id: String,
    #[serde(default)]
    metadata: Option<Map<String, Value>>,
}

pub fn process_create_org_asset(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: CreateOrgAsset = payload(env)?;
    load_org(ctx, &p.org_id, &env.submitter)?;
    if !valid_id(&p.asset_id) {
        return Err(ErrorCode::InvalidField);
    }
    if ctx.exists(RecordKind::Asset, &p.asset_id) {
        return Err(ErrorCode::DuplicateAsset);
    }
    let asset = OrgAsset {
        asset_id: p.asset_id,
        dataset_ref: p.dataset_ref,
        owner_org_id: p.org_id,
        viewer_roles: Vec::new(),
        editor_roles: Vec::new(),
        metadata: Value::Object(p.metadata.unwrap_or_default()),
    };
    ctx.put(RecordKind::Asset, &asset.asset_id, &asset)?;
    Ok(to_value(&asset))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RolePayload {
    org_id: String,
    user_id: String,
    role: String,
}

/// AssignRole: idempotent; an already active binding is left untouched.
pub fn process_assign_role(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RolePayload = payload(env)?;
    load_org(ctx, &p.org_id, &env.submitter)?;
    if !ctx.exists(RecordKind::Participant, &p.user_id) {
        return Err(ErrorCode::UnknownParticipant);
    }
    if !valid_role(&p.role) {
        return Err(ErrorCode::InvalidField);
    }
    let binding_id = RoleBinding::id_for(&p.org_id, &p.user_id, &p.role);
    if let Some(existing) = ctx.read::<RoleBinding>(RecordKind::RoleBinding, &binding_id) {
        if existing.active {
            return Ok(to_value(&existing));
        }
    }
    let binding = RoleBinding { binding_id, org_id: p.org_id, user_id: p.user_id, role: p.role, active: true };
    ctx.put(RecordKind::RoleBinding, &binding.binding_id, &binding)?;
    Ok(to_value(&binding))
}

pub fn process_revoke_role(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: RolePayload = payload(env)?;
    load_org(ctx, &p.org_id, &env.submitter)?;
    let binding_id = RoleBinding::id_for(&p.org_id, &p.user_id, &p.role);
    let mut binding: RoleBinding = ctx
        .read(RecordKind::RoleBinding, &binding_id)
        .filter(|b: &RoleBinding| b.active)
        .ok_or(ErrorCode::UnknownBinding)?;
    binding.active = false;
    ctx.put(RecordKind::RoleBinding, &binding_id, &binding)?;
    Ok(to_value(&binding))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SetAssetRoles {
    asset_id: String,
    viewer_roles: Vec<String>,
    editor_roles: Vec<String>,
}

/// SetAssetRoles: replaces both role lists wholesale.
pub fn process_set_asset_roles(ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<Value, ErrorCode> {
    let p: SetAssetRoles = payload(env)?;
    let mut asset = match AssetRecord::load(ctx, &p.asset_id) {
        Some(AssetRecord::Org(a)) => a,
        Some(AssetRecord::Person(_)) => return Err(ErrorCode::AssetKindMismatch),
        None => return Err(ErrorCode::UnknownAsset),
    };
    if !is_org_admin(ctx, &asset.owner_org_id, &env.submitter) {
        return Err(ErrorCode::NotOrgAdmin);
    }
    asset.viewer_roles = canonical_roles(&p.viewer_roles)?;
    asset.editor_roles = canonical_roles(&p.editor_roles)?;
    ctx.put(RecordKind::Asset, &asset.asset_id, &asset)?;
    Ok(to_value(&asset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::can_access;
    use crate::network::PersonParticipant;
    use crate::state::WorldState;
    use serde_json::json;

    type Proc = fn(&mut TxContext<'_>, &TxEnvelope) -> Result<Value, ErrorCode>;

    fn run(state: &mut WorldState, f: Proc, submitter: &str, body: Value) -> Result<Value, ErrorCode> {
        let env = TxEnvelope::new("T", body, submitter, 0);
        let mut ctx = TxContext::new(state, 2);
        let out = f(&mut ctx, &env)?;
        let w = ctx.into_writes();
        state.apply(w);
        Ok(out)
    }

    fn seeded() -> WorldState {
        let mut s = WorldState::new();
        let mut ctx = TxContext::new(&s, 1);
        let admin = PersonParticipant {
            participant_id: "root".into(),
            display_name: "root".into(),
            org_id: None,
            network_admin: true,
        };
        ctx.put(RecordKind::Participant, "root", &admin).unwrap();
        for id in ["boss", "p2", "p3", "other"] {
            ctx.put(RecordKind::Participant, id, &json!({"participantId": id, "displayName": id})).unwrap();
        }
        let w = ctx.into_writes();
        s.apply(w);
        run(&mut s, process_register_organization, "root", json!({"orgId": "o1", "name": "Lab", "adminIds": ["boss"]}))
            .unwrap();
        run(&mut s, process_register_organization, "root", json!({"orgId": "o2", "name": "Other", "adminIds": ["other"]}))
            .unwrap();
        run(&mut s, process_create_org_asset, "boss", json!({"assetId": "d1", "datasetRef": "q", "orgId": "o1"})).unwrap();
        s
    }

    #[test]
    fn assign_by_admin_and_by_outsider() {
        let mut s = seeded();
        let b = run(&mut s, process_assign_role, "boss", json!({"orgId": "o1", "userId": "p2", "role": "analyst"})).unwrap();
        assert_eq!(b["active"], true);
        assert_eq!(
            run(&mut s, process_assign_role, "p3", json!({"orgId": "o1", "userId": "p3", "role": "analyst"})),
            Err(ErrorCode::NotOrgAdmin)
        );
        assert_eq!(
            run(&mut s, process_assign_role, "boss", json!({"orgId": "zz", "userId": "p3", "role": "analyst"})),
            Err(ErrorCode::UnknownOrg)
        );
    }

    #[test]
    fn assign_twice_leaves_one_binding() {
        let mut s = seeded();
        for _ in 0..2 {
            run(&mut s, process_assign_role, "boss", json!({"orgId": "o1", "userId": "p2", "role": "analyst"})).unwrap();
        }
        let bindings: Vec<_> = s.records_of(RecordKind::RoleBinding).collect();
        assert_eq!(bindings.len(), 1);
        assert_eq!(bindings[0].version, 1);
    }

    #[test]
    fn revoke_twice_is_unknown_binding() {
        let mut s = seeded();
        let role = json!({"orgId": "o1", "userId": "p2", "role": "analyst"});
        run(&mut s, process_assign_role, "boss", role.clone()).unwrap();
        let b = run(&mut s, process_revoke_role, "boss", role.clone()).unwrap();
        assert_eq!(b["active"], false);
        assert_eq!(run(&mut s, process_revoke_role, "boss", role), Err(ErrorCode::UnknownBinding));
    }

    #[test]
    fn set_roles_is_canonical_and_replacing() {
        let mut s = seeded();
        let a = run(
            &mut s,
            process_set_asset_roles,
            "boss",
            json!({"assetId": "d1", "viewerRoles": ["b", "a", "a"], "editorRoles": ["x"]}),
        )
        .unwrap();
        assert_eq!(a["viewerRoles"], json!(["a", "b"]));
        let a = run(&mut s, process_set_asset_roles, "boss", json!({"assetId": "d1", "viewerRoles": [], "editorRoles": []}))
            .unwrap();
        assert_eq!(a["viewerRoles"], json!([]));
        assert_eq!(a["editorRoles"], json!([]));
    }

    #[test]
    fn verify_follows_role_lifecycle() {
        let mut s = seeded();
        run(&mut s, process_set_asset_roles, "boss", json!({"assetId": "d1", "viewerRoles": ["analyst", "admin"], "editorRoles": []}))
            .unwrap();
        assert!(!can_access(&s, "d1", "p2"));
        let role = json!({"orgId": "o1", "userId": "p2", "role": "analyst"});
        run(&mut s, process_assign_role, "boss", role.clone()).unwrap();
        assert!(can_access(&s, "d1", "p2"));
        run(&mut s, process_revoke_role, "boss", role).unwrap();
        assert!(!can_access(&s, "d1", "p2"));
    }

    #[test]
    fn roles_in_another_org_do_not_count() {
        let mut s = seeded();
        run(&mut s, process_set_asset_roles, "boss", json!({"assetId": "d1", "viewerRoles": ["analyst"], "editorRoles": []}))
            .unwrap();
        run(&mut s, process_assign_role, "other", json!({"orgId": "o2", "userId": "p3", "role": "analyst"})).unwrap();
        assert!(!can_access(&s, "d1", "p3"));
    }

    #[test]
    fn outsider_cannot_set_roles() {
        let mut s = seeded();
        let before = s.state_hash();
        let r = run(&mut s, process_set_asset_roles, "other", json!({"assetId": "d1", "viewerRoles": ["x"], "editorRoles": []}));
        assert_eq!(r, Err(ErrorCode::NotOrgAdmin));
        assert_eq!(s.state_hash(), before);
    }
}
