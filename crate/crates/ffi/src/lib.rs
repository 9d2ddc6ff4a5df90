//! C ABI over the accessledger core.
//!
//! Ledgers are opaque `AlLedger` handles. Every fallible call returns an
//! `AlStatus`; on failure `al_last_error` describes what went wrong on the
//! calling thread. Strings handed out by the library are NUL-terminated,
//! owned by the caller, and released with `al_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use accessledger::chain::{verify_file, HistorianFilter};
use accessledger::network::BootstrapAdmin;
use accessledger::{Engine, Error, KeyPair, Ledger, NetworkModel, SystemClock, TxEnvelope};
use serde_json::json;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    Io = 4,
    InvalidModel = 5,
    /// The chain failed verification.
    VerifyFailed = 6,
    /// The transaction was rejected; the outcome JSON carries the code.
    Rejected = 7,
    NotFound = 8,
    InvalidKey = 9,
    Internal = 10,
}

/// Opaque ledger handle.
pub struct AlLedger {
    inner: Ledger,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg.into()));
}

struct Fail(AlStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) | Error::Store(_) => AlStatus::Io,
            Error::Model(_) | Error::MissingProcessor(_) | Error::Config(_) => AlStatus::InvalidModel,
            Error::Verify(_) => AlStatus::VerifyFailed,
            Error::Json(_) => AlStatus::InvalidJson,
            Error::Key(_) => AlStatus::InvalidKey,
            _ => AlStatus::Internal,
        };
        set_error(e.to_string());
        Fail(status)
    }
}

fn fail(status: AlStatus, msg: impl Into<String>) -> Fail {
    set_error(msg);
    Fail(status)
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<AlStatus, Fail>) -> AlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status))) => status,
        Err(_) => {
            set_error("internal panic");
            AlStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(AlStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(AlStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn ledger_arg<'a>(p: *mut AlLedger) -> Result<&'a mut Ledger, Fail> {
    p.as_mut().map(|l| &mut l.inner).ok_or_else(|| fail(AlStatus::NullArgument, "`ledger` is null"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(AlStatus::NullArgument, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| fail(AlStatus::Internal, "string contains NUL"))?;
    write_out(out, c.into_raw())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Fail> {
    serde_json::from_str(text).map_err(|e| fail(AlStatus::InvalidJson, format!("{what}: {e}")))
}

fn engine(model_text: Option<&str>) -> Result<Arc<Engine>, Fail> {
    let engine = match model_text {
        Some(text) => Engine::new(NetworkModel::parse(text).map_err(Error::from)?)?,
        None => Engine::combined(),
    };
    Ok(Arc::new(engine))
}

fn into_handle(ledger: Ledger) -> *mut AlLedger {
    Box::into_raw(Box::new(AlLedger { inner: ledger }))
}

/// Create a new ledger. `blocks_path` may be NULL for an in-memory
/// ledger; otherwise the file must not exist. `bootstrap_json` is a JSON
/// array of `{participantId, displayName, cardId, publicKey}` objects.
/// `model_text` may be NULL to use the combined standard model.
///
/// # Safety
/// String arguments must be NULL or valid NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_create(
    blocks_path: *const c_char,
    bootstrap_json: *const c_char,
    model_text: *const c_char,
    out: *mut *mut AlLedger,
) -> AlStatus {
    guard(|| {
        let path = opt_str_arg(blocks_path, "blocks_path")?;
        let admins: Vec<BootstrapAdmin> = parse_json(str_arg(bootstrap_json, "bootstrap_json")?, "bootstrap_json")?;
        let engine = engine(opt_str_arg(model_text, "model_text")?)?;
        let clock = Arc::new(SystemClock);
        let ledger = match path {
            Some(p) => Ledger::create(p, engine, &admins, clock)?,
            None => Ledger::in_memory(engine, &admins, clock)?,
        };
        write_out(out, into_handle(ledger))?;
        Ok(AlStatus::Ok)
    })
}

/// Open and fully verify an existing block file.
///
/// # Safety
/// See `al_ledger_create`.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_open(
    blocks_path: *const c_char,
    model_text: *const c_char,
    out: *mut *mut AlLedger,
) -> AlStatus {
    guard(|| {
        let path = str_arg(blocks_path, "blocks_path")?;
        let engine = engine(opt_str_arg(model_text, "model_text")?)?;
        let ledger = Ledger::open(path, engine, Arc::new(SystemClock))?;
        write_out(out, into_handle(ledger))?;
        Ok(AlStatus::Ok)
    })
}

/// Release a ledger handle. NULL is ignored.
///
/// # Safety
/// `ledger` must come from `al_ledger_create`/`al_ledger_open` and not
/// have been freed already.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_free(ledger: *mut AlLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Submit one signed envelope (JSON) and commit it. `out_json` receives
/// `{txId, status, errorCode?, result?}`. Returns `AL_STATUS_REJECTED` when
/// the transaction was rejected.
///
/// # Safety
/// `ledger` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_submit(
    ledger: *mut AlLedger,
    envelope_json: *const c_char,
    out_json: *mut *mut c_char,
) -> AlStatus {
    guard(|| {
        let ledger = ledger_arg(ledger)?;
        let envelope: TxEnvelope = parse_json(str_arg(envelope_json, "envelope_json")?, "envelope")?;
        let outcome = ledger.submit(envelope)?;
        write_string(out_json, serde_json::to_string(&outcome).expect("outcome serializes"))?;
        Ok(if outcome.is_accepted() { AlStatus::Ok } else { AlStatus::Rejected })
    })
}

/// Historian records as a JSON array. `filter_json` may be NULL or an
/// object with optional `submitter`, `assetId`, `txType` and
/// `heightRange: [from, to]`.
///
/// # Safety
/// `ledger` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_historian(
    ledger: *mut AlLedger,
    filter_json: *const c_char,
    out_json: *mut *mut c_char,
) -> AlStatus {
    guard(|| {
        let ledger = ledger_arg(ledger)?;
        let filter: HistorianFilter = match opt_str_arg(filter_json, "filter_json")? {
            Some(text) => parse_json(text, "filter")?,
            None => HistorianFilter::default(),
        };
        let records = ledger.historian(&filter);
        write_string(out_json, serde_json::to_string(&records).expect("records serialize"))?;
        Ok(AlStatus::Ok)
    })
}

/// Current asset record as JSON, or `AL_STATUS_NOT_FOUND`.
///
/// # Safety
/// `ledger` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_get_asset(
    ledger: *mut AlLedger,
    asset_id: *const c_char,
    out_json: *mut *mut c_char,
) -> AlStatus {
    guard(|| {
        let ledger = ledger_arg(ledger)?;
        let id = str_arg(asset_id, "asset_id")?;
        let asset = ledger.asset(id).ok_or_else(|| fail(AlStatus::NotFound, format!("no asset `{id}`")))?;
        write_string(out_json, serde_json::to_string(&asset).expect("asset serializes"))?;
        Ok(AlStatus::Ok)
    })
}

/// Non-recorded access check.
///
/// # Safety
/// `ledger` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_can_view(
    ledger: *mut AlLedger,
    asset_id: *const c_char,
    user_id: *const c_char,
    out: *mut bool,
) -> AlStatus {
    guard(|| {
        let ledger = ledger_arg(ledger)?;
        let allowed = ledger.can_view(str_arg(asset_id, "asset_id")?, str_arg(user_id, "user_id")?);
        write_out(out, allowed)?;
        Ok(AlStatus::Ok)
    })
}

/// Height of the chain tip.
///
/// # Safety
/// `ledger` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_height(ledger: *mut AlLedger, out: *mut u64) -> AlStatus {
    guard(|| {
        let h = ledger_arg(ledger)?.height();
        write_out(out, h)?;
        Ok(AlStatus::Ok)
    })
}

/// Hex state hash of the committed world state.
///
/// # Safety
/// `ledger` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn al_ledger_state_hash(ledger: *mut AlLedger, out: *mut *mut c_char) -> AlStatus {
    guard(|| {
        let hash = ledger_arg(ledger)?.state_hash();
        write_string(out, hash)?;
        Ok(AlStatus::Ok)
    })
}

/// Verify a block file. `out_json` receives `{"ok": true, "height",
/// "stateHash"}` or `{"ok": false, "height", "reason"}`; the latter also
/// returns `AL_STATUS_VERIFY_FAILED`.
///
/// # Safety
/// String arguments must be NULL or valid; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_verify_file(
    blocks_path: *const c_char,
    model_text: *const c_char,
    out_json: *mut *mut c_char,
) -> AlStatus {
    guard(|| {
        let path = str_arg(blocks_path, "blocks_path")?;
        let engine = engine(opt_str_arg(model_text, "model_text")?)?;
        match verify_file(Path::new(path), &engine) {
            Ok((blocks, state)) => {
                let body = json!({"ok": true, "height": blocks.len() - 1, "stateHash": state.state_hash()});
                write_string(out_json, body.to_string())?;
                Ok(AlStatus::Ok)
            }
            Err(e) => match e.failure() {
                Some((height, reason)) => {
                    set_error(e.to_string());
                    write_string(out_json, json!({"ok": false, "height": height, "reason": reason}).to_string())?;
                    Ok(AlStatus::VerifyFailed)
                }
                None => Err(fail(AlStatus::Io, e.to_string())),
            },
        }
    })
}

/// Generate an Ed25519 key pair. `out_json` receives
/// `{"publicKey", "secretKey"}`, both base64.
///
/// # Safety
/// `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_keygen(out_json: *mut *mut c_char) -> AlStatus {
    guard(|| {
        let key = KeyPair::generate();
        let body = json!({"publicKey": key.public_key_b64(), "secretKey": key.secret_key_b64()});
        write_string(out_json, body.to_string())?;
        Ok(AlStatus::Ok)
    })
}

/// Sign an envelope. Any `signature` already present is replaced.
///
/// # Safety
/// String arguments must be valid; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn al_sign_envelope(
    secret_key_b64: *const c_char,
    envelope_json: *const c_char,
    out_json: *mut *mut c_char,
) -> AlStatus {
    guard(|| {
        let key = KeyPair::from_secret_b64(str_arg(secret_key_b64, "secret_key_b64")?)?;
        let envelope: TxEnvelope = parse_json(str_arg(envelope_json, "envelope_json")?, "envelope")?;
        let signed = envelope.signed(&key).map_err(Error::from)?;
        write_string(out_json, serde_json::to_string(&signed).expect("envelope serializes"))?;
        Ok(AlStatus::Ok)
    })
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn al_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or NULL. Free it with
/// `al_string_free`.
#[no_mangle]
pub extern "C" fn al_last_error() -> *mut c_char {
    LAST_ERROR
        .with(|e| e.borrow().clone())
        .and_then(|m| CString::new(m).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}
