/* Build: cargo build -p accessledger-ffi
 *        cc examples/smoke.c -Iinclude ../../target/debug/libaccessledger_ffi.a -lpthread -ldl -lm -o smoke */
#include <stdio.h>
#include <string.h>

#include "accessledger.h"

static int check(AlStatus s, const char *what) {
  if (s != AL_STATUS_OK) {
    char *msg = al_last_error();
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "?");
    al_string_free(msg);
    return 1;
  }
  return 0;
}

int main(void) {
  char *keys = NULL;
  if (check(al_keygen(&keys), "keygen")) return 1;

  /* Pull the two base64 strings out of {"publicKey":"...","secretKey":"..."}. */
  char pub[64] = {0}, sec[64] = {0};
  sscanf(strstr(keys, "publicKey") + 12, "%63[^\"]", pub);
  sscanf(strstr(keys, "secretKey") + 12, "%63[^\"]", sec);
  al_string_free(keys);

  char boot[256];
  snprintf(boot, sizeof boot,
           "[{\"participantId\":\"admin\",\"displayName\":\"Admin\",\"cardId\":\"c0\",\"publicKey\":\"%s\"}]", pub);
  AlLedger *ledger = NULL;
  if (check(al_ledger_create(NULL, boot, NULL, &ledger), "create")) return 1;

  const char *env =
      "{\"txId\":\"tx-1\",\"txType\":\"CreateAsset\",\"payload\":{\"assetId\":\"a1\",\"datasetRef\":\"s3://d\"},"
      "\"submitter\":\"admin\",\"timestamp\":1}";
  char *signed_env = NULL, *outcome = NULL, *hash = NULL;
  if (check(al_sign_envelope(sec, env, &signed_env), "sign")) return 1;
  if (check(al_ledger_submit(ledger, signed_env, &outcome), "submit")) return 1;
  bool allowed = false;
  uint64_t height = 0;
  check(al_ledger_can_view(ledger, "a1", "admin", &allowed), "can_view");
  check(al_ledger_height(ledger, &height), "height");
  check(al_ledger_state_hash(ledger, &hash), "state_hash");
  printf("%s\nheight=%llu canView=%d stateHash=%s\n", outcome, (unsigned long long)height, allowed, hash);

  al_string_free(signed_env);
  al_string_free(outcome);
  al_string_free(hash);
  al_ledger_free(ledger);
  return 0;
}
