#ifndef ACCESSLEDGER_H
#define ACCESSLEDGER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum AlStatus {
  AL_STATUS_OK = 0,
  AL_STATUS_NULL_ARGUMENT = 1,
  AL_STATUS_INVALID_UTF8 = 2,
  AL_STATUS_INVALID_JSON = 3,
  AL_STATUS_IO = 4,
  AL_STATUS_INVALID_MODEL = 5,
  /**
   * The chain failed verification.
   */
  AL_STATUS_VERIFY_FAILED = 6,
  /**
   * The transaction was rejected; the outcome JSON carries the code.
   */
  AL_STATUS_REJECTED = 7,
  AL_STATUS_NOT_FOUND = 8,
  AL_STATUS_INVALID_KEY = 9,
  AL_STATUS_INTERNAL = 10,
} AlStatus;

/**
 * Opaque ledger handle.
 */
typedef struct AlLedger AlLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a new ledger. `blocks_path` may be NULL for an in-memory
 * ledger; otherwise the file must not exist. `bootstrap_json` is a JSON
 * array of `{participantId, displayName, cardId, publicKey}` objects.
 * `model_text` may be NULL to use the combined standard model.
 *
 * # Safety
 * String arguments must be NULL or valid NUL-terminated strings; `out`
 * must be a valid pointer.
 */
enum AlStatus al_ledger_create(const char *blocks_path,
                               const char *bootstrap_json,
                               const char *model_text,
                               struct AlLedger **out);

/**
 * Open and fully verify an existing block file.
 *
 * # Safety
 * See `al_ledger_create`.
 */
enum AlStatus al_ledger_open(const char *blocks_path,
                             const char *model_text,
                             struct AlLedger **out);

/**
 * Release a ledger handle. NULL is ignored.
 *
 * # Safety
 * `ledger` must come from `al_ledger_create`/`al_ledger_open` and not
 * have been freed already.
 */
void al_ledger_free(struct AlLedger *ledger);

/**
 * Submit one signed envelope (JSON) and commit it. `out_json` receives
 * `{txId, status, errorCode?, result?}`. Returns `AL_STATUS_REJECTED` when
 * the transaction was rejected.
 *
 * # Safety
 * `ledger` must be a live handle; other pointers must be valid.
 */
enum AlStatus al_ledger_submit(struct AlLedger *ledger, const char *envelope_json, char **out_json);

/**
 * Historian records as a JSON array. `filter_json` may be NULL or an
 * object with optional `submitter`, `assetId`, `txType` and
 * `heightRange: [from, to]`.
 *
 * # Safety
 * `ledger` must be a live handle; other pointers must be valid.
 */
enum AlStatus al_ledger_historian(struct AlLedger *ledger,
                                  const char *filter_json,
                                  char **out_json);

/**
 * Current asset record as JSON, or `AL_STATUS_NOT_FOUND`.
 *
 * # Safety
 * `ledger` must be a live handle; other pointers must be valid.
 */
enum AlStatus al_ledger_get_asset(struct AlLedger *ledger, const char *asset_id, char **out_json);

/**
 * Non-recorded access check.
 *
 * # Safety
 * `ledger` must be a live handle; other pointers must be valid.
 */
enum AlStatus al_ledger_can_view(struct AlLedger *ledger,
                                 const char *asset_id,
                                 const char *user_id,
                                 bool *out);

/**
 * Height of the chain tip.
 *
 * # Safety
 * `ledger` must be a live handle and `out` valid.
 */
enum AlStatus al_ledger_height(struct AlLedger *ledger, uint64_t *out);

/**
 * Hex state hash of the committed world state.
 *
 * # Safety
 * `ledger` must be a live handle and `out` valid.
 */
enum AlStatus al_ledger_state_hash(struct AlLedger *ledger, char **out);

/**
 * Verify a block file. `out_json` receives `{"ok": true, "height",
 * "stateHash"}` or `{"ok": false, "height", "reason"}`; the latter also
 * returns `AL_STATUS_VERIFY_FAILED`.
 *
 * # Safety
 * String arguments must be NULL or valid; `out_json` must be valid.
 */
enum AlStatus al_verify_file(const char *blocks_path, const char *model_text, char **out_json);

/**
 * Generate an Ed25519 key pair. `out_json` receives
 * `{"publicKey", "secretKey"}`, both base64.
 *
 * # Safety
 * `out_json` must be valid.
 */
enum AlStatus al_keygen(char **out_json);

/**
 * Sign an envelope. Any `signature` already present is replaced.
 *
 * # Safety
 * String arguments must be valid; `out_json` must be valid.
 */
enum AlStatus al_sign_envelope(const char *secret_key_b64,
                               const char *envelope_json,
                               char **out_json);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void al_string_free(char *s);

/**
 * Message for the last failure on this thread, or NULL. Free it with
 * `al_string_free`.
 */
char *al_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCESSLEDGER_H */
