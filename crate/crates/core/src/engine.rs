//! Transaction execution: admission (model schema and signature) followed
//! by the registered processor, run inside a staged context.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::access;
use crate::bibac;
use crate::brbac;
use crate::canonical;
use crate::chain::{TxEnvelope, TxEvent, TxResult};
use crate::error::{Error, ErrorCode};
use crate::identity::{self, active_card, verify_envelope};
use crate::netdef::{NetworkModel, PayloadError, BIBAC_MODEL, BRBAC_MODEL, COMBINED_MODEL};
use crate::network::{self, BOOTSTRAP_TX};
use crate::state::{TxContext, WorldState};

type WriteFn = fn(&mut TxContext<'_>, &TxEnvelope) -> Result<Value, ErrorCode>;
type DecideFn = fn(&mut TxContext<'_>, &TxEnvelope) -> Result<(Value, Vec<TxEvent>), ErrorCode>;

/// A transaction processor. `Write` processors report only the records
/// they stage; `Decide` processors also emit decision events.
#[derive(Clone, Copy)]
pub enum Processor {
    Write(WriteFn),
    Decide(DecideFn),
}

impl Processor {
    fn run(self, ctx: &mut TxContext<'_>, env: &TxEnvelope) -> Result<(Value, Vec<TxEvent>), ErrorCode> {
        match self {
            Processor::Write(f) => f(ctx, env).map(|v| (v, Vec::new())),
            Processor::Decide(f) => f(ctx, env),
        }
    }
}

/// Every processor this crate ships, keyed by transaction type.
pub fn builtin_processors() -> BTreeMap<&'static str, Processor> {
    use Processor::{Decide, Write};
    BTreeMap::from([
        ("RegisterPerson", Write(network::process_register_person)),
        ("RegisterOrganization", Write(brbac::process_register_organization)),
        ("IssueIdentity", Write(identity::process_issue_identity)),
        ("RevokeIdentity", Write(identity::process_revoke_identity)),
        ("CreateAsset", Write(bibac::process_create_asset)),
        ("RequestAccess", Write(bibac::process_request_access)),
        ("GiveAccess", Write(bibac::process_give_access)),
        ("DenyAccess", Write(bibac::process_deny_access)),
        ("RevokeAccess", Write(bibac::process_revoke_access)),
        ("CanView", Decide(access::process_check)),
        ("ViewAsset", Decide(access::process_view)),
        ("CreateOrgAsset", Write(brbac::process_create_org_asset)),
        ("AssignRole", Write(brbac::process_assign_role)),
        ("RevokeRole", Write(brbac::process_revoke_role)),
        ("SetAssetRoles", Write(brbac::process_set_asset_roles)),
        ("VerifyAccess", Decide(access::process_check)),
    ])
}

/// Outcome of running one envelope against a world state.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub result: TxResult,
    /// Processor return value for accepted transactions.
    pub output: Option<Value>,
    /// False when admission refused the envelope; such envelopes never
    /// reach the chain.
    pub recorded: bool,
}

impl Applied {
    fn refused(code: ErrorCode) -> Self {
        Applied { result: TxResult::rejected(code), output: None, recorded: false }
    }
}

pub struct Engine {
    model: NetworkModel,
    processors: BTreeMap<String, Processor>,
}

impl Engine {
    /// Bind every transaction declared in `model` to a built-in processor.
    pub fn new(model: NetworkModel) -> Result<Self, Error> {
        let builtins = builtin_processors();
        let mut processors = BTreeMap::new();
        for decl in &model.tx_decls {
            let p = builtins
                .get(decl.tx_type.as_str())
                .ok_or_else(|| Error::MissingProcessor(decl.tx_type.clone()))?;
            processors.insert(decl.tx_type.clone(), *p);
        }
        Ok(Engine { model, processors })
    }

    pub fn from_text(text: &str) -> Result<Self, Error> {
        Self::new(NetworkModel::parse(text)?)
    }

    pub fn bibac() -> Self {
        Self::from_text(BIBAC_MODEL).expect("shipped model is valid")
    }

    pub fn brbac() -> Self {
        Self::from_text(BRBAC_MODEL).expect("shipped model is valid")
    }

    /// Both networks on one ledger. The default for nodes and tools.
    pub fn combined() -> Self {
        Self::from_text(COMBINED_MODEL).expect("shipped model is valid")
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }

    /// Admission checks, in order: canonical payload, declared type,
    /// payload schema, then signature under the submitter's active card.
    pub fn admit(&self, state: &WorldState, env: &TxEnvelope) -> Result<(), ErrorCode> {
        if !env.payload.is_object() || canonical::check(&env.payload).is_err() {
            return Err(ErrorCode::NonCanonicalPayload);
        }
        match self.model.validate_payload(&env.tx_type, &env.payload) {
            Ok(()) => {}
            Err(PayloadError::UnknownTxType) => return Err(ErrorCode::UnknownTxType),
            Err(PayloadError::Violations(_)) => return Err(ErrorCode::SchemaViolation),
        }
        if !self.processors.contains_key(&env.tx_type) {
            return Err(ErrorCode::UnknownTxType);
        }
        let card = active_card(state, &env.submitter).ok_or(ErrorCode::BadSignature)?;
        if !verify_envelope(env, &card) {
            return Err(ErrorCode::BadSignature);
        }
        Ok(())
    }

    /// Admit and execute `env` at `height`. Accepted writes are applied to
    /// `state`; rejections leave it untouched.
    pub fn apply(&self, state: &mut WorldState, env: &TxEnvelope, height: u64) -> Applied {
        if let Err(code) = self.admit(state, env) {
            return Applied::refused(code);
        }
        let processor = self.processors[&env.tx_type];
        run(processor, state, env, height)
    }

    /// Execute a genesis entry. Only the bootstrap transaction is allowed
    /// and it carries no signature.
    pub fn apply_genesis(&self, state: &mut WorldState, env: &TxEnvelope) -> Applied {
        if env.tx_type != BOOTSTRAP_TX {
            return Applied::refused(ErrorCode::UnknownTxType);
        }
        if canonical::check(&env.payload).is_err() {
            return Applied::refused(ErrorCode::NonCanonicalPayload);
        }
        run(Processor::Write(network::process_bootstrap), state, env, 0)
    }
}

fn run(processor: Processor, state: &mut WorldState, env: &TxEnvelope, height: u64) -> Applied {
    let mut ctx = TxContext::new(state, height);
    match processor.run(&mut ctx, env) {
        Ok((output, decisions)) => {
            let writes = ctx.into_writes();
            let mut events = state.apply(writes);
            events.extend(decisions);
            Applied { result: TxResult::accepted(events), output: Some(output), recorded: true }
        }
        Err(code) => Applied { result: TxResult::rejected(code), output: None, recorded: true },
    }
}
