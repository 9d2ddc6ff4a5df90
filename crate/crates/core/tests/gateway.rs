mod common;

use accessledger::chain::HistorianFilter;
use accessledger::gateway::Gateway;
use axum::http::StatusCode;
use axum::Router;
use common::*;
use serde_json::{json, Value};

const OWNER_PHONE: &str = "+15550001";

/// p1 owns a1 and d1's org admin is p1; p2 and p4 are plain users.
fn setup() -> (Gateway, Router, Net) {
    let mut net = Net::new();
    for p in ["p1", "p2", "p4"] {
        net.person(p);
    }
    net.ok("p1", "CreateAsset", json!({"assetId": "a1", "datasetRef": "s3://a1"}));
    net.org("org1", &["p1"]);
    net.ok("p1", "CreateOrgAsset", json!({"assetId": "d1", "datasetRef": "s3://d1", "orgId": "org1"}));
    let signer = net.fork();
    let gw = net.into_gateway(&[(OWNER_PHONE, "p1"), ("+15550002", "p2")]);
    let router = gw.router();
    (gw, router, signer)
}

fn head(gw: &Gateway) -> (u64, String) {
    let l = gw.ledger().read();
    (l.height(), l.state_hash())
}

fn body(signer: &mut Net, who: &str, tx: &str, payload: Value) -> String {
    serde_json::to_string(&signer.env(who, tx, payload)).unwrap()
}

#[tokio::test]
async fn owner_give_is_accepted() {
    let (_gw, router, mut signer) = setup();
    let (status, out) = post_tx(&router, body(&mut signer, "p1", "GiveAccess", json!({"assetId": "a1", "viewers": ["p2"], "editors": []}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["status"], "ACCEPTED");
    assert_eq!(out["result"]["viewers"], json!(["p2"]));
}

#[tokio::test]
async fn mangled_signature_is_401_without_mutation() {
    let (gw, router, mut signer) = setup();
    let before = head(&gw);
    let mut env = signer.env("p1", "GiveAccess", json!({"assetId": "a1", "viewers": ["p2"], "editors": []}));
    env.signature = format!("A{}", &env.signature[1..]);
    let (status, out) = post_tx(&router, serde_json::to_string(&env).unwrap()).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(out["errorCode"], "BAD_SIGNATURE");
    assert_eq!(head(&gw), before);
}

#[tokio::test]
async fn not_owner_is_409_and_recorded() {
    let (gw, router, mut signer) = setup();
    let before = head(&gw);
    let (status, out) = post_tx(&router, body(&mut signer, "p2", "GiveAccess", json!({"assetId": "a1", "viewers": ["p2"], "editors": []}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(out["errorCode"], "NOT_OWNER");
    let after = head(&gw);
    assert_eq!(after.0, before.0 + 1);
    assert_eq!(after.1, before.1);
    let (_, records) = get(&router, "/api/historian?submitter=p2&txType=GiveAccess").await;
    assert_eq!(records[0]["status"], "REJECTED");
    assert_eq!(records[0]["errorCode"], "NOT_OWNER");
}

#[tokio::test]
async fn admission_failures_map_to_client_errors() {
    let (gw, router, mut signer) = setup();
    let before = head(&gw);
    let (status, out) = post_tx(&router, "{not json").await;
    assert_eq!((status, out["errorCode"].clone()), (StatusCode::BAD_REQUEST, json!("MALFORMED_ENVELOPE")));
    let (status, out) = post_tx(&router, body(&mut signer, "p1", "Frobnicate", json!({}))).await;
    assert_eq!((status, out["errorCode"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!("UNKNOWN_TX_TYPE")));
    let (status, out) = post_tx(&router, body(&mut signer, "p1", "GiveAccess", json!({"assetId": "a1"}))).await;
    assert_eq!((status, out["errorCode"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!("SCHEMA_VIOLATION")));
    let dup = body(&mut signer, "p1", "ViewAsset", json!({"assetId": "a1"}));
    assert_eq!(post_tx(&router, dup.clone()).await.0, StatusCode::OK);
    let (status, out) = post_tx(&router, dup).await;
    assert_eq!((status, out["errorCode"].clone()), (StatusCode::CONFLICT, json!("DUPLICATE_TX")));
    assert_eq!(head(&gw).0, before.0 + 1);
}

#[tokio::test]
async fn queries_have_no_side_effects() {
    let (gw, router, mut signer) = setup();
    post_tx(&router, body(&mut signer, "p1", "GiveAccess", json!({"assetId": "a1", "viewers": ["p2"], "editors": []}))).await;
    let before = head(&gw);

    let (status, v) = get(&router, "/api/can-view?assetId=a1&userId=p2").await;
    assert_eq!((status, v), (StatusCode::OK, json!({"canView": true})));
    let (_, v) = get(&router, "/api/can-view?assetId=a1&userId=p4").await;
    assert_eq!(v, json!({"canView": false}));

    let (status, asset) = get(&router, "/api/assets/a1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(asset["viewers"], json!(["p2"]));
    let (status, missing) = get(&router, "/api/assets/missing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(missing["error"], "UNKNOWN_ASSET");

    let (_, records) = get(&router, "/api/historian?assetId=a1").await;
    let direct = gw.ledger().read().historian(&HistorianFilter::asset("a1"));
    assert_eq!(records, serde_json::to_value(direct).unwrap());

    let (_, verify) = get(&router, "/api/chain/verify").await;
    assert_eq!(verify, json!({"ok": true, "height": before.0, "stateHash": before.1}));
    let (_, h) = get(&router, "/api/chain/head").await;
    assert_eq!(h["height"], before.0);
    assert_eq!(h["network"], "accessledger");

    assert_eq!(head(&gw), before);
}

#[tokio::test]
async fn request_inbox_query() {
    let (_gw, router, mut signer) = setup();
    post_tx(&router, body(&mut signer, "p2", "RequestAccess", json!({"assetId": "a1", "level": "VIEW"}))).await;
    let (_, inbox) = get(&router, "/api/requests?owner=p1&status=PENDING").await;
    assert_eq!(inbox.as_array().unwrap().len(), 1);
    assert_eq!(inbox[0]["requestId"], "a1:p2:VIEW:1");
    let (_, none) = get(&router, "/api/requests?owner=p2").await;
    assert_eq!(none, json!([]));
}

#[tokio::test]
async fn sms_commands_reply_in_xml() {
    let (gw, router, _) = setup();
    let (status, xml) = post_sms(&router, OWNER_PHONE, "GIVE a1 VIEW p2").await;
    assert_eq!(status, StatusCode::OK);
    assert!(xml.starts_with("<?xml"), "{xml}");
    assert!(xml.contains("<Response><Message>OK GiveAccess a1</Message></Response>"), "{xml}");
    assert!(gw.ledger().read().can_view("a1", "p2"));

    assert!(post_sms(&router, "+15550002", "view a1").await.1.contains("OK ViewAsset a1 s3://a1"));
    assert!(post_sms(&router, OWNER_PHONE, "CHECK a1 p4").await.1.contains("DENIED"));
    assert!(post_sms(&router, OWNER_PHONE, "CHECK d1 p2").await.1.contains("OK VerifyAccess d1 DENIED"));
    assert!(post_sms(&router, "+15550002", "GIVE a1 VIEW p2").await.1.contains("NOT_OWNER"));
}

#[tokio::test]
async fn sms_refusals_do_not_touch_the_ledger() {
    let (gw, router, _) = setup();
    let before = head(&gw);
    assert!(post_sms(&router, OWNER_PHONE, "FROBNICATE a1").await.1.contains(">PARSE_ERROR<"));
    assert!(post_sms(&router, "+19999999", "VIEW a1").await.1.contains(">UNKNOWN_PHONE<"));
    assert!(post_sms(&router, OWNER_PHONE, &"x".repeat(2000)).await.1.contains(">PARSE_ERROR<"));
    assert_eq!(head(&gw), before);
}

#[tokio::test]
async fn sms_and_rest_agree() {
    let (gw_sms, sms, _) = setup();
    let (gw_rest, rest, mut signer) = setup();
    assert_eq!(head(&gw_sms), head(&gw_rest));
    let from = head(&gw_sms).0 + 1;

    post_sms(&sms, OWNER_PHONE, "GIVE a1 VIEW p2").await;
    post_tx(&rest, body(&mut signer, "p1", "GiveAccess", json!({"assetId": "a1", "viewers": ["p2"], "editors": []}))).await;

    assert_eq!(head(&gw_sms), head(&gw_rest));
    let filter = HistorianFilter { height_range: Some((from, u64::MAX)), ..Default::default() };
    let a = gw_sms.ledger().read().historian(&filter);
    let b = gw_rest.ledger().read().historian(&filter);
    assert_eq!(a.len(), 1);
    assert_eq!(modulo_ids(&a), modulo_ids(&b));
}
