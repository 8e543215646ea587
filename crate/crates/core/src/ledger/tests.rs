use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::exec::Exec;
use crate::group::{Bls12Backend, PairingBackend, ToyBackend};
use crate::lvs;
use crate::protocol::{self, TxPayload};
use crate::tre::{self, time_label};

fn sim(seed: u64) -> Simulator<ToyBackend> {
    let mut s = Simulator::new(ToyBackend::large(), 4, 10, Target::default(), seed).unwrap();
    s.register_user("alice").unwrap();
    s.register_provider("shop").unwrap();
    s.designate("alice", "shop").unwrap();
    s
}

fn bundle_items(prefix: &str, n: usize, due: u64) -> Vec<(String, TxPayload)> {
    (0..n)
        .map(|i| {
            (
                format!("{prefix}{i}"),
                TxPayload::new("shop", 10 * (i as u64 + 1), due),
            )
        })
        .collect()
}

#[test]
fn clock_boundaries() {
    let mut c = SimClock::new(10);
    assert!(c.advance(0).is_empty());
    assert_eq!(c.advance(10), vec![10]);
    assert_eq!(c.advance(25), vec![20, 30]);
    assert_eq!(c.tick(), 35);
    assert!(c.advance(4).is_empty());
    assert_eq!(c.release_tick(0), 10);
    assert_eq!(c.release_tick(10), 10);
    assert_eq!(c.release_tick(11), 20);
}

#[test]
fn advance_publishes_verified_tiks() {
    let mut s = sim(1);
    assert!(s.advance(0).is_empty());
    let tiks = s.advance(10);
    assert_eq!(tiks.len(), 1);
    assert_eq!(tiks[0].label, b"10");
    assert!(tre::verify_tik(s.backend(), s.server.public(), &tiks[0]));
    assert!(s.node.known_tiks.contains_key("10"));
}

#[test]
fn submission_checks() {
    let mut s = sim(2);
    s.submit_bundle("alice", 10, &bundle_items("a", 2, 10))
        .unwrap();
    assert_eq!(s.node.mempool.len(), 2);

    // Same ids again.
    let err = s
        .submit_bundle("alice", 10, &bundle_items("a", 1, 10))
        .unwrap_err();
    assert!(matches!(err, SimError::Rejected(Rejection::Duplicate(_))));

    let b = *s.backend();
    let keys = s.user("alice").unwrap().clone();
    let mut tx = protocol::make_ordinary(
        &b,
        "alice",
        &keys.signer,
        "o1",
        &TxPayload::new("bob", 1, 0),
    )
    .unwrap();
    tx.signature.sigma = b.mul(&tx.signature.sigma, &b.generator());
    assert_eq!(
        s.node.submit_tx(LedgerTx::Ordinary(tx)),
        Err(Rejection::Invalid("o1".into()))
    );
    s.submit_ordinary("alice", "o2", &TxPayload::new("bob", 1, 0))
        .unwrap();
    assert!(matches!(
        s.submit_ordinary("alice", "o2", &TxPayload::new("bob", 2, 0)),
        Err(SimError::Rejected(Rejection::Duplicate(_)))
    ));
}

#[test]
fn mining_errors_and_limits() {
    let mut s = sim(3);
    assert!(matches!(
        s.mine(10),
        Err(SimError::Ledger(LedgerError::EmptyMempool))
    ));
    s.submit_bundle("alice", 10, &bundle_items("a", 3, 10))
        .unwrap();
    s.mine(2).unwrap();
    assert_eq!(s.node.chain[0].txs.len(), 2);
    assert_eq!(s.node.mempool.len(), 1);

    s.node.target = Target::from_difficulty(0);
    s.node.max_attempts = 500;
    assert!(matches!(
        s.mine(10),
        Err(SimError::Ledger(LedgerError::AttemptCap(500)))
    ));
    assert_eq!(s.node.mempool.len(), 1);

    s.node.target = Target::trivial();
    s.mine(10).unwrap();
    assert_eq!(s.node.chain[1].header.nonce, 0);
    s.node.validate_chain().unwrap();
}

#[test]
fn default_target_meets_work_bound() {
    let mut s = sim(4);
    s.submit_bundle("alice", 10, &bundle_items("a", 1, 10))
        .unwrap();
    s.mine(10).unwrap();
    let block = &s.node.chain[0];
    assert!(Target::default().accepts(&block.digest()));
    assert_eq!(block.header.tx_root, tx_root(s.backend(), &block.txs));
}

fn run_script(seed: u64) -> ChainDump {
    let mut s = sim(seed);
    s.submit_bundle("alice", 10, &bundle_items("a", 3, 10))
        .unwrap();
    s.submit_ordinary("shop", "o1", &TxPayload::new("alice", 3, 0))
        .unwrap();
    s.mine(10).unwrap();
    s.advance(10);
    s.redact("shop", "a1", TxPayload::new("shop", 5, 10))
        .unwrap();
    s.dump()
}

#[test]
fn identical_seeds_give_identical_chains() {
    let a = serde_json::to_string(&run_script(9)).unwrap();
    let b = serde_json::to_string(&run_script(9)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, serde_json::to_string(&run_script(10)).unwrap());
}

#[test]
fn redaction_preserves_headers_and_roots() {
    let mut s = sim(5);
    s.submit_bundle("alice", 10, &bundle_items("a", 3, 10))
        .unwrap();
    s.submit_ordinary("alice", "o1", &TxPayload::new("bob", 3, 0))
        .unwrap();
    s.mine(2).unwrap();
    s.mine(10).unwrap();
    let before = s.dump();

    s.advance(10);
    s.redact("shop", "a0", TxPayload::new("shop", 1, 10))
        .unwrap();
    s.redact("shop", "a2", TxPayload::new("shop", 2, 10))
        .unwrap();
    s.redact("shop", "a0", TxPayload::new("shop", 3, 10))
        .unwrap();
    let after = s.dump();

    assert_eq!(before.skeleton(), after.skeleton());
    assert_ne!(before, after);
    s.node.validate_chain().unwrap();
    let Some(LedgerTx::Redactable(a0)) = s.node.find("a0") else {
        panic!("a0 is redactable")
    };
    assert_eq!(a0.redaction_log.len(), 2);
    assert_eq!(a0.payload.amount, 3);
    assert_eq!(a0.redacted_by.as_deref(), Some("shop"));
}

#[test]
fn early_redaction_fails_until_release() {
    let mut s = sim(6);
    s.submit_bundle("alice", 15, &bundle_items("a", 2, 15))
        .unwrap();
    s.mine(10).unwrap();
    let new = TxPayload::new("shop", 1, 15);

    let err = s.redact("shop", "a0", new.clone()).unwrap_err();
    assert_eq!(err.code(), "label-mismatch");
    s.advance(10);
    let err = s.redact("shop", "a0", new.clone()).unwrap_err();
    assert_eq!(err.code(), "label-mismatch");
    s.advance(10);
    s.redact("shop", "a0", new).unwrap();
}

#[test]
fn undesignated_provider_is_refused() {
    let mut s = sim(7);
    s.register_provider("rival").unwrap();
    s.submit_bundle("alice", 10, &bundle_items("a", 1, 10))
        .unwrap();
    s.mine(10).unwrap();
    s.advance(10);
    let err = s
        .redact("rival", "a0", TxPayload::new("rival", 1, 10))
        .unwrap_err();
    assert_eq!(err.code(), "trapdoor-mismatch");
}

#[test]
fn apply_redaction_guards_leave_state_untouched() {
    let mut s = sim(8);
    s.submit_bundle("alice", 10, &bundle_items("a", 1, 10))
        .unwrap();
    s.submit_ordinary("alice", "o1", &TxPayload::new("bob", 3, 0))
        .unwrap();
    s.mine(10).unwrap();
    let b = *s.backend();
    let before = s.dump();

    let Some(LedgerTx::Redactable(tx)) = s.node.find("a0").cloned() else {
        panic!("a0 is redactable")
    };
    let new = TxPayload::new("shop", 1, 10);
    let provider = s.provider("shop").unwrap().clone();
    let wrong_trapdoor = b.scalar(12345);
    let forged_r = crate::chameleon::adapt_digest(
        &b,
        &wrong_trapdoor,
        &b.hash_to_scalar(&tx.message()),
        &crate::chameleon::hash_digest(
            &b,
            &crate::chameleon::trapdoor_public(&b, &wrong_trapdoor),
            &b.hash_to_scalar(&tx.message()),
            &tx.r,
        ),
        &tx.r,
        &b.hash_to_scalar(&protocol::encode_message("a0", &new)),
    )
    .unwrap();
    let sigma = lvs::sign(&b, provider.signer.secret(), &tx.signature.h).unwrap();
    let req = RedactionRequest {
        tx_id: "a0".into(),
        new_payload: new.clone(),
        r_new: forged_r,
        sigma_new: sigma.clone(),
        provider: "shop".into(),
    };
    assert_eq!(
        s.node.apply_redaction(&req, 0),
        Err(LedgerError::VerificationFailed("a0".into()))
    );
    let immutable = RedactionRequest {
        tx_id: "o1".into(),
        ..req.clone()
    };
    assert_eq!(
        s.node.apply_redaction(&immutable, 0),
        Err(LedgerError::NotRedactable("o1".into()))
    );
    let missing = RedactionRequest {
        tx_id: "zz".into(),
        ..req
    };
    assert_eq!(
        s.node.apply_redaction(&missing, 0),
        Err(LedgerError::UnknownTx("zz".into()))
    );
    assert_eq!(s.dump(), before);
}

#[test]
fn batched_redactions_on_production_curve() {
    let mut s = Simulator::new(Bls12Backend, 4, 10, Target::trivial(), 11).unwrap();
    s.register_user("alice").unwrap();
    s.register_provider("shop").unwrap();
    s.submit_bundle("alice", 10, &bundle_items("a", 4, 10))
        .unwrap();
    s.submit_ordinary("alice", "o1", &TxPayload::new("bob", 3, 0))
        .unwrap();
    s.mine(10).unwrap();
    let before = s.dump();

    let sk_h = *s.user("alice").unwrap().trapdoor.secret();
    let provider = s.provider("shop").unwrap().clone();
    let mut reqs: Vec<RedactionRequest<Bls12Backend>> = ["a0", "a1", "a3"]
        .iter()
        .map(|id| {
            let Some(LedgerTx::Redactable(tx)) = s.node.find(id).cloned() else {
                panic!("{id} is redactable")
            };
            let new = TxPayload::new("shop", 7, 10);
            let (r_new, sigma_new) = protocol::adapt(
                &s.params,
                &provider,
                &sk_h,
                id,
                &tx.payload,
                &tx.h,
                &tx.r,
                &new,
            )
            .unwrap();
            RedactionRequest {
                tx_id: id.to_string(),
                new_payload: new,
                r_new,
                sigma_new,
                provider: "shop".into(),
            }
        })
        .collect();
    reqs[1].new_payload.amount = 8;
    reqs.push(RedactionRequest {
        tx_id: "o1".into(),
        ..reqs[0].clone()
    });

    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let results = s
        .node
        .apply_redactions(&reqs, 20, &mut rng, Exec::default());
    assert!(results[0].is_ok());
    assert_eq!(
        results[1],
        Err(LedgerError::VerificationFailed("a1".into()))
    );
    assert!(results[2].is_ok());
    assert_eq!(results[3], Err(LedgerError::NotRedactable("o1".into())));

    let after = s.dump();
    assert_eq!(before.skeleton(), after.skeleton());
    s.node.validate_chain().unwrap();
    let amounts: Vec<u64> = ["a0", "a1", "a2", "a3"]
        .iter()
        .map(|id| {
            s.node
                .find(id)
                .and_then(LedgerTx::as_redactable)
                .unwrap()
                .payload
                .amount
        })
        .collect();
    assert_eq!(amounts, vec![7, 20, 30, 7]);
}

#[test]
fn tampered_block_fails_validation() {
    let mut s = sim(12);
    s.submit_bundle("alice", 10, &bundle_items("a", 2, 10))
        .unwrap();
    s.mine(1).unwrap();
    s.mine(1).unwrap();
    s.node.validate_chain().unwrap();

    let mut broken = s.node.clone();
    if let LedgerTx::Redactable(t) = &mut broken.chain[0].txs[0] {
        t.h = broken.backend.mul(&t.h, &broken.backend.generator());
    }
    assert_eq!(
        broken.validate_chain(),
        Err(BlockError::TxRoot { height: 0 })
    );

    let mut relinked = s.node.clone();
    relinked.chain[1].header.prev_digest = [7; 32];
    assert!(relinked.validate_chain().is_err());
}

#[test]
fn tiks_unlock_addressed_ciphertexts() {
    let mut s = sim(13);
    s.submit_bundle("alice", 20, &bundle_items("a", 1, 20))
        .unwrap();
    let tiks = s.advance(20);
    let b = *s.backend();
    let c = &s.bundles()[0].transactions[0].ciphertext;
    assert_eq!(c.label, time_label(20));
    let s_key = s.user("alice").unwrap().designation.s;
    let payload = tre::tre_decrypt(&b, c, &tiks[1], &s_key).unwrap();
    let sk_h = protocol::decode_trapdoor(&b, &payload).unwrap();
    assert_eq!(sk_h, *s.user("alice").unwrap().trapdoor.secret());
}

#[test]
fn scenario_json_runs() {
    let text = r#"{
        "seed": 3,
        "events": [
            {"op": "register_user", "id": "alice"},
            {"op": "register_provider", "id": "shop"},
            {"op": "register_provider", "id": "rival"},
            {"op": "designate", "user": "alice", "provider": "shop"},
            {"op": "submit_bundle", "user": "alice", "due_tick": 10,
             "items": [{"id": "a1", "payee": "shop", "amount": 100},
                       {"id": "a2", "payee": "shop", "amount": 50}]},
            {"op": "submit_ordinary", "sender": "alice", "id": "o1", "payee": "bob", "amount": 5},
            {"op": "mine"},
            {"op": "redact", "provider": "shop", "id": "a1", "amount": 40, "expect": "label-mismatch"},
            {"op": "advance", "ticks": 10},
            {"op": "redact", "provider": "rival", "id": "a1", "amount": 1, "expect": "trapdoor-mismatch"},
            {"op": "redact", "provider": "shop", "id": "a1", "amount": 40},
            {"op": "redact", "provider": "shop", "id": "a2", "memo": "settled"}
        ]
    }"#;
    let scenario = Scenario::from_json(text).unwrap();
    let out = scenario.run().unwrap();
    assert!(out.passed(), "{:?}", out.failures);
    assert_eq!(out.dump.blocks.len(), 1);

    let wrong = text.replace(
        r#""amount": 40}"#,
        r#""amount": 40, "expect": "aux-check"}"#,
    );
    let out = Scenario::from_json(&wrong).unwrap().run().unwrap();
    assert_eq!(out.failures.len(), 1);

    assert!(Scenario::from_json(r#"{"events": [{"op": "fly"}]}"#).is_err());
}
