use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::export::{
    tik_schedule_from_json, tik_schedule_to_json, BundleJson, TestSecrets, UserPublicJson,
};
use super::*;
use crate::group::{Bls12Backend, ToyBackend};
use crate::tre::time_label;

struct World<B: PairingBackend> {
    params: SystemParams<B>,
    server: ServerKeyPair<B>,
    user: UserKeys<B>,
    provider: ProviderKeys<B>,
    rng: ChaCha20Rng,
}

fn world<B: PairingBackend>(b: B, bound: usize, seed: u64) -> World<B> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = setup(b, bound, &mut rng).unwrap();
    let server = server_keygen(&params, &mut rng);
    let user = user_keygen(&params, server.public(), "alice", &mut rng).unwrap();
    let provider = provider_keygen(&params, "shop", &mut rng).unwrap();
    World {
        params,
        server,
        user,
        provider,
        rng,
    }
}

fn items(n: usize) -> Vec<(String, TxPayload)> {
    (0..n)
        .map(|i| {
            (
                format!("tx-{i}"),
                TxPayload::new("shop", 100 + i as u64, 20),
            )
        })
        .collect()
}

#[test]
fn setup_produces_consistent_master_key() {
    let w = world(ToyBackend::golden(), 4, 1);
    assert_eq!(w.params.mpk().bound(), 4);
    assert!(w.params.mpk().is_consistent(&w.params.backend));
    let again = world(ToyBackend::golden(), 4, 1);
    assert_eq!(again.params.msk(), w.params.msk());
    assert_eq!(again.params.mpk(), w.params.mpk());
}

#[test]
fn keygen_components() {
    let w = world(ToyBackend::large(), 4, 2);
    let b = &w.params.backend;
    let pk = w.user.public();
    assert!(pk.pk_tre.is_consistent(b, w.server.public()));
    assert_eq!(pk.pk_local.g_alpha, *w.params.mpk().base());
    assert_eq!(pk.pk_local.hk, HASH_KEY);
    assert!(pk.pk_beta.is_consistent(b));

    for seed in 0..100u64 {
        let mut r1 = ChaCha20Rng::seed_from_u64(2 * seed);
        let mut r2 = ChaCha20Rng::seed_from_u64(2 * seed + 1);
        let a = user_keygen(&w.params, w.server.public(), "a", &mut r1).unwrap();
        let c = user_keygen(&w.params, w.server.public(), "c", &mut r2).unwrap();
        assert_ne!(a.signer.secret(), c.signer.secret());
    }
}

#[test]
fn designation_registry_records_deliveries() {
    let w = world(ToyBackend::golden(), 2, 3);
    let mut registry = DesignationRegistry::default();
    let key = designate_provider(&w.user, "shop", &mut registry);
    assert_eq!(key.s, w.user.designation.s);
    designate_provider(&w.user, "other", &mut registry);
    designate_provider(&w.user, "shop", &mut registry);
    assert_eq!(registry.providers_for("alice"), ["shop", "other"]);
    assert!(registry.is_designated("alice", "other"));
    assert!(!registry.is_designated("bob", "shop"));
}

#[test]
fn trapdoor_payload_roundtrip() {
    let toy = ToyBackend::large();
    let x = toy.scalar(0x0102_0304_0506_0708);
    let payload = encode_trapdoor(&toy, &x);
    assert_eq!(&payload[..24], &[0u8; 24]);
    assert_eq!(decode_trapdoor(&toy, &payload), Some(x));
    let mut padded = payload;
    padded[0] = 1;
    assert_eq!(decode_trapdoor(&toy, &padded), None);

    let bls = Bls12Backend;
    let y = bls.random_scalar(&mut ChaCha20Rng::seed_from_u64(4));
    assert_eq!(decode_trapdoor(&bls, &encode_trapdoor(&bls, &y)), Some(y));
}

/// Creation, extraction, local verification, decryption, adaptation and
/// miner verification for one member of a bundle.
fn lifecycle<B: PairingBackend>(b: B, n: usize, member: usize) {
    let mut w = world(b, 4, 5);
    let label = time_label(20);
    let bundle = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(n),
        &label,
        &mut w.rng,
        Exec::default(),
    )
    .unwrap();
    let b = &w.params.backend;
    let pk = w.user.public();
    let provider_pk = w.provider.public();
    assert!(lvs::verify_aggregate_full(
        b,
        &pk.pk_beta,
        &bundle.aggregate
    ));
    for tx in &bundle.transactions {
        assert!(verify_transaction(
            b,
            &pk,
            None,
            tx,
            Some(&bundle.aggregate)
        ));
    }

    let (tik, aux) = ext(&w.params, &w.server, &pk, &bundle, &[member], &label).unwrap();
    assert!(tre::verify_tik(b, w.server.public(), &tik));
    let (tik_all, aux_all) = ext_members(&w.params, &w.server, &pk, &bundle, &label).unwrap();
    assert_eq!((&tik_all.label, &tik_all.key), (&tik.label, &tik.key));
    assert_eq!(
        (&aux_all[member].subset, &aux_all[member].powers),
        (&aux.subset, &aux.powers)
    );
    let tx = &bundle.transactions[member];
    let sk_h = released_dec(
        &w.params,
        &pk,
        &bundle,
        &aux,
        &tx.ciphertext,
        &tik,
        &w.user.designation.s,
    )
    .unwrap();
    assert_eq!(sk_h, *w.user.trapdoor.secret());

    let new_payload = TxPayload::new("shop", 40, 20);
    let (r_new, sigma_new) = adapt(
        &w.params,
        &w.provider,
        &sk_h,
        &tx.id,
        &tx.payload,
        &tx.h,
        &tx.r,
        &new_payload,
    )
    .unwrap();
    let mut redacted = tx.clone();
    redacted.install_redaction(new_payload, r_new, sigma_new, "shop", 20);
    assert_eq!(redacted.h, tx.h);
    assert!(verify_transaction(
        b,
        &pk,
        Some(&provider_pk),
        &redacted,
        Some(&bundle.aggregate)
    ));
    // Same rewrite checked as if the user still signed it.
    let as_user = RedactableTransaction {
        signer: SignerRole::User,
        ..redacted.clone()
    };
    assert!(!verify_transaction(
        b,
        &pk,
        Some(&provider_pk),
        &as_user,
        None
    ));
    assert!(!verify_transaction(b, &pk, None, &redacted, None));
    // The old body no longer opens with the new randomness.
    let stale = RedactableTransaction {
        payload: tx.payload.clone(),
        ..redacted
    };
    assert!(!verify_transaction(
        b,
        &pk,
        Some(&provider_pk),
        &stale,
        None
    ));
}

#[test]
fn toy_lifecycle() {
    lifecycle(ToyBackend::large(), 3, 1);
}

#[test]
fn production_lifecycle() {
    lifecycle(Bls12Backend, 2, 0);
}

#[test]
fn bundle_shapes() {
    let mut w = world(ToyBackend::large(), 2, 6);
    let label = time_label(10);
    let one = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(1),
        &label,
        &mut w.rng,
        Exec::Sequential,
    )
    .unwrap();
    assert_eq!(one.aggregate.sigma_hat, one.transactions[0].signature.sigma);
    assert_eq!(
        make_bundle(
            &w.params,
            &w.user,
            w.server.public(),
            &[],
            &label,
            &mut w.rng,
            Exec::Sequential
        ),
        Err(ProtocolError::EmptyBundle)
    );
    assert_eq!(
        make_bundle(
            &w.params,
            &w.user,
            w.server.public(),
            &items(3),
            &label,
            &mut w.rng,
            Exec::Sequential
        ),
        Err(ProtocolError::BoundExceeded { len: 3, bound: 2 })
    );
}

#[test]
fn bundle_output_is_schedule_independent() {
    let w = world(ToyBackend::large(), 4, 7);
    let label = time_label(10);
    let run = |exec| {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        make_bundle(
            &w.params,
            &w.user,
            w.server.public(),
            &items(4),
            &label,
            &mut rng,
            exec,
        )
        .unwrap()
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}

fn release_failures<B: PairingBackend>(b: B) {
    let mut w = world(b, 4, 8);
    let label = time_label(30);
    let bundle = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(3),
        &label,
        &mut w.rng,
        Exec::Sequential,
    )
    .unwrap();
    let b = &w.params.backend;
    let pk = w.user.public();
    let (tik, aux) = ext(&w.params, &w.server, &pk, &bundle, &[2], &label).unwrap();
    let c = &bundle.transactions[2].ciphertext;
    let s = w.user.designation.s;

    let mut bad_aux = aux.clone();
    bad_aux.powers[1] = b.mul(&bad_aux.powers[1], &b.generator());
    assert_eq!(
        released_dec(&w.params, &pk, &bundle, &bad_aux, c, &tik, &s),
        Err(ReleaseError::AuxCheck)
    );

    let early = tre::extract_tik(b, w.server.secret(), &time_label(20));
    let err = released_dec(&w.params, &pk, &bundle, &aux, c, &early, &s).unwrap_err();
    assert_eq!(err.code(), "label-mismatch");

    let guess = b.random_nonzero(&mut w.rng);
    assert_eq!(
        released_dec(&w.params, &pk, &bundle, &aux, c, &tik, &guess),
        Err(ReleaseError::TrapdoorMismatch)
    );

    let mut altered = bundle.clone();
    altered.transactions[2].payload.amount += 1;
    assert_eq!(
        released_dec(&w.params, &pk, &altered, &aux, c, &tik, &s),
        Err(ReleaseError::SubsetCheck)
    );

    let (_, pair_aux) = ext(&w.params, &w.server, &pk, &bundle, &[0, 2], &label).unwrap();
    let mut bad_base = pair_aux.clone();
    bad_base.powers[0] = b.mul(&bad_base.powers[0], &b.generator());
    assert_eq!(
        released_dec(&w.params, &pk, &bundle, &bad_base, c, &tik, &s),
        Err(ReleaseError::AuxCheck)
    );
    let mut wrong_sigma = bundle.clone();
    wrong_sigma.aggregate.sigma_hat = b.mul(&wrong_sigma.aggregate.sigma_hat, &b.generator());
    assert_eq!(
        released_dec(&w.params, &pk, &wrong_sigma, &pair_aux, c, &tik, &s),
        Err(ReleaseError::SubsetCheck)
    );
    assert_eq!(
        released_dec(&w.params, &pk, &bundle, &pair_aux, c, &tik, &s),
        Ok(*w.user.trapdoor.secret())
    );
}

#[test]
fn released_dec_failure_codes() {
    release_failures(ToyBackend::large());
}

#[test]
fn released_dec_failure_codes_on_the_production_curve() {
    release_failures(Bls12Backend);
}

#[test]
fn non_designated_providers_never_recover_the_trapdoor() {
    let mut w = world(ToyBackend::large(), 2, 9);
    let label = time_label(10);
    let bundle = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(2),
        &label,
        &mut w.rng,
        Exec::Sequential,
    )
    .unwrap();
    let pk = w.user.public();
    let (tik, aux) = ext(&w.params, &w.server, &pk, &bundle, &[0], &label).unwrap();
    for _ in 0..100 {
        let guess = w.params.backend.random_nonzero(&mut w.rng);
        let got = released_dec(
            &w.params,
            &pk,
            &bundle,
            &aux,
            &bundle.transactions[0].ciphertext,
            &tik,
            &guess,
        );
        assert_eq!(got, Err(ReleaseError::TrapdoorMismatch));
    }
}

#[test]
fn adapt_fixed_point_keeps_randomness() {
    let mut w = world(ToyBackend::large(), 2, 10);
    let payload = TxPayload::new("shop", 5, 10);
    let created = tr_creat(
        &w.params,
        &w.user,
        w.server.public(),
        "id",
        &payload,
        b"10",
        &mut w.rng,
    )
    .unwrap();
    let (r, sigma) = adapt(
        &w.params,
        &w.provider,
        w.user.trapdoor.secret(),
        "id",
        &payload,
        &created.h,
        &created.r,
        &payload,
    )
    .unwrap();
    assert_eq!(r, created.r);
    assert!(lvs::verify_single(
        &w.params.backend,
        w.provider.signer.public(),
        &sigma.sigma,
        &sigma.h
    ));
}

#[test]
fn same_content_different_randomness() {
    let mut w = world(ToyBackend::large(), 2, 11);
    let payload = TxPayload::new("shop", 5, 10);
    let a = tr_creat(
        &w.params,
        &w.user,
        w.server.public(),
        "id",
        &payload,
        b"10",
        &mut w.rng,
    )
    .unwrap();
    let c = tr_creat(
        &w.params,
        &w.user,
        w.server.public(),
        "id",
        &payload,
        b"10",
        &mut w.rng,
    )
    .unwrap();
    assert_ne!(a.h, c.h);
    let pk = w.user.public();
    for t in [&a, &c] {
        assert!(verify(
            &w.params.backend,
            &pk,
            None,
            "id",
            &payload,
            &t.h,
            &t.r,
            &t.signature,
            SignerRole::User,
            None
        ));
    }
}

#[test]
fn ordinary_transactions() {
    let w = world(ToyBackend::large(), 2, 12);
    let b = &w.params.backend;
    let payload = TxPayload::new("bob", 7, 0);
    let tx = make_ordinary(b, "alice", &w.user.signer, "o-1", &payload).unwrap();
    assert!(verify_ordinary(b, &tx, w.user.signer.public()));
    assert!(!verify_ordinary(b, &tx, w.provider.signer.public()));
    let mut tampered = tx.clone();
    tampered.payload.amount = 8;
    assert!(!verify_ordinary(b, &tampered, w.user.signer.public()));
}

type Rewrites = Vec<(TxPayload, Bls12Scalar, Signature<Bls12Backend>)>;

fn redaction_fixture(
    b: Bls12Backend,
    n: usize,
) -> (World<Bls12Backend>, DeferredBundle<Bls12Backend>, Rewrites) {
    let mut w = world(b, n, 13);
    let bundle = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(n),
        b"10",
        &mut w.rng,
        Exec::default(),
    )
    .unwrap();
    let rewrites = bundle
        .transactions
        .iter()
        .map(|tx| {
            let new = TxPayload::new("shop", 1, 20);
            let (r, s) = adapt(
                &w.params,
                &w.provider,
                w.user.trapdoor.secret(),
                &tx.id,
                &tx.payload,
                &tx.h,
                &tx.r,
                &new,
            )
            .unwrap();
            (new, r, s)
        })
        .collect();
    (w, bundle, rewrites)
}

type Bls12Scalar = <Bls12Backend as PairingBackend>::Scalar;

#[test]
fn batch_redaction_check() {
    let (mut w, bundle, mut rewrites) = redaction_fixture(Bls12Backend, 5);
    let b = w.params.backend;
    let pk_h = *w.user.trapdoor.public();
    let provider_pk = w.provider.signer.public().clone();
    let checks = |rewrites: &[(TxPayload, Bls12Scalar, Signature<Bls12Backend>)]| -> Vec<usize> {
        let list: Vec<_> = bundle
            .transactions
            .iter()
            .zip(rewrites)
            .map(|(tx, (p, r, s))| RedactionCheck {
                pk_h: &pk_h,
                provider_pk: &provider_pk,
                message: encode_message(&tx.id, p),
                h: &tx.h,
                r,
                signature: s,
            })
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        verify_redactions_batch(&b, &list, &mut rng, Exec::default())
    };
    assert!(checks(&rewrites).is_empty());

    rewrites[3].0.amount = 2;
    let other = lvs::sign(&b, &b.random_nonzero(&mut w.rng), &rewrites[1].2.h).unwrap();
    rewrites[1].2 = other;
    assert_eq!(checks(&rewrites), vec![1, 3]);
}

#[test]
fn export_roundtrips() {
    let mut w = world(ToyBackend::large(), 3, 14);
    let b = w.params.backend;
    let bundle = make_bundle(
        &w.params,
        &w.user,
        w.server.public(),
        &items(3),
        b"10",
        &mut w.rng,
        Exec::Sequential,
    )
    .unwrap();
    let json = serde_json::to_string(&BundleJson::from_bundle(&b, &bundle)).unwrap();
    let back: BundleJson = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_bundle(&b).unwrap(), bundle);

    let pk = w.user.public();
    let pk_json = UserPublicJson::from_public(&b, &pk);
    assert_eq!(pk_json.to_public(&b).unwrap(), pk);

    let secrets = serde_json::to_value(TestSecrets::from_keys(&b, &w.user)).unwrap();
    assert_eq!(secrets["test_only"], true);

    let tiks: Vec<_> = [10u64, 20]
        .iter()
        .map(|&t| tre::extract_tik(&b, w.server.secret(), &time_label(t)))
        .collect();
    let schedule = tik_schedule_to_json(&b, &tiks);
    assert_eq!(schedule[1].label, "20");
    assert_eq!(tik_schedule_from_json(&b, &schedule).unwrap(), tiks);
}
