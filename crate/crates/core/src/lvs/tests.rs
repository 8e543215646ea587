use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::group::{Bls12Backend, ToyBackend};

fn golden_key() -> (ToyBackend, SignerKeyPair<ToyBackend>) {
    let b = ToyBackend::golden();
    let keys = keygen_with_secret(&b, b.scalar(3), 4).unwrap();
    (b, keys)
}

fn golden_signatures(
    b: &ToyBackend,
    keys: &SignerKeyPair<ToyBackend>,
) -> Vec<Signature<ToyBackend>> {
    [2, 5]
        .iter()
        .map(|&h| sign(b, keys.secret(), &b.scalar(h)).unwrap())
        .collect()
}

#[test]
fn golden_keygen_powers() {
    let b = ToyBackend::golden();
    let keys = keygen_with_secret(&b, b.scalar(3), 3).unwrap();
    assert_eq!(
        keys.public().powers(),
        &[b.element(3), b.element(9), b.element(27)]
    );
    assert!(keys.public().is_consistent(&b));
    assert_eq!(keys.public().power(&b, 0), Some(b.generator()));
    assert_eq!(keys.public().power(&b, 4), None);
}

#[test]
fn golden_sign_and_verify() {
    let (b, keys) = golden_key();
    let sigs = golden_signatures(&b, &keys);
    // 1/(3+2) = 81 and 1/(3+5) = 38 modulo 101.
    assert_eq!(sigs[0].sigma, b.element(81));
    assert_eq!(sigs[1].sigma, b.element(38));
    assert!(verify_single(
        &b,
        keys.public(),
        &sigs[1].sigma,
        &b.scalar(5)
    ));
    assert!(!verify_single(
        &b,
        keys.public(),
        &sigs[1].sigma,
        &b.scalar(6)
    ));
    assert!(!verify_single(
        &b,
        keys.public(),
        &b.identity(),
        &b.scalar(5)
    ));
}

#[test]
fn golden_aggregate_and_aux() {
    let (b, keys) = golden_key();
    let sigs = golden_signatures(&b, &keys);
    let agg = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();
    assert_eq!(agg.sigma_hat, b.element(48));
    assert_eq!(
        expand_poly(&agg.member_hashes, b.one()),
        vec![b.scalar(10), b.scalar(7), b.scalar(1)]
    );
    assert!(verify_aggregate_full(&b, keys.public(), &agg));

    let aux = derive_aux(&b, keys.public(), &agg.member_hashes, &[0]).unwrap();
    assert_eq!(aux.powers, vec![b.element(8), b.element(24)]);
    assert!(verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &aux,
        &[b.scalar(2)]
    ));
    assert!(!verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &aux,
        &[b.scalar(5)]
    ));

    let mut tampered = aux.clone();
    tampered.powers[1] = b.element(25);
    assert!(!check_aux_chain(&b, keys.public(), &tampered));
    assert!(!verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &tampered,
        &[b.scalar(2)]
    ));

    let shifted = b.mul(&agg.sigma_hat, &b.generator());
    assert!(!verify_subset(
        &b,
        keys.public(),
        &shifted,
        &aux,
        &[b.scalar(2)]
    ));
    let forged = AggregateSignature {
        sigma_hat: shifted,
        ..agg.clone()
    };
    assert!(!verify_aggregate_full(&b, keys.public(), &forged));

    let all = derive_aux(&b, keys.public(), &agg.member_hashes, &[1, 0]).unwrap();
    assert_eq!(all.powers[0], b.generator());
    assert!(verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &all,
        &[b.scalar(5), b.scalar(2)]
    ));
}

#[test]
fn aggregate_guards() {
    let (b, keys) = golden_key();
    let sigs = golden_signatures(&b, &keys);
    assert_eq!(
        aggregate(&b, keys.public(), &[], Exec::Sequential),
        Err(LvsError::Empty)
    );
    assert_eq!(
        aggregate(
            &b,
            keys.public(),
            &[sigs[0].clone(), sigs[0].clone()],
            Exec::Sequential
        ),
        Err(LvsError::DuplicateHash { index: 1 })
    );
    let mut bad = sigs.clone();
    bad[1].sigma = b.element(39);
    assert_eq!(
        aggregate(&b, keys.public(), &bad, Exec::Sequential),
        Err(LvsError::InvalidMember { index: 1 })
    );
    let five: Vec<_> = (10..15)
        .map(|h| sign(&b, keys.secret(), &b.scalar(h)).unwrap())
        .collect();
    assert_eq!(
        aggregate(&b, keys.public(), &five, Exec::Sequential),
        Err(LvsError::BoundExceeded {
            needed: 5,
            available: 4
        })
    );
    assert_eq!(
        sign(&b, keys.secret(), &b.scalar(98)),
        Err(LvsError::DegenerateHash)
    );
    assert!(matches!(
        keygen_with_secret(&b, b.scalar(3), 0),
        Err(LvsError::ZeroBound)
    ));
}

#[test]
fn aux_guards() {
    let (b, keys) = golden_key();
    let hashes = [b.scalar(2), b.scalar(5)];
    assert_eq!(
        derive_aux(&b, keys.public(), &hashes, &[]),
        Err(LvsError::BadSubset)
    );
    assert_eq!(
        derive_aux(&b, keys.public(), &hashes, &[0, 0]),
        Err(LvsError::BadSubset)
    );
    assert_eq!(
        derive_aux(&b, keys.public(), &hashes, &[2]),
        Err(LvsError::IndexOutOfRange { index: 2, len: 2 })
    );
}

#[test]
fn aggregation_is_order_independent() {
    let (b, keys) = golden_key();
    let mut sigs = golden_signatures(&b, &keys);
    let forward = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();
    sigs.reverse();
    let backward = aggregate(&b, keys.public(), &sigs, Exec::Parallel).unwrap();
    assert_eq!(forward.sigma_hat, backward.sigma_hat);
}

/// `x^{-1} mod p` by square-and-multiply, independent of the scalar type.
fn inv_mod(x: u64, p: u64) -> u64 {
    let (mut base, mut exp, mut acc) = (x as u128 % p as u128, p - 2, 1u128);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        exp >>= 1;
    }
    acc as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregate_exponent_matches_direct_product(
        sk in 1u64..ToyBackend::LARGE_MODULUS,
        hashes in prop::collection::btree_set(0u64..1_000_000, 1..8),
        pick in any::<prop::sample::Index>(),
    ) {
        let b = ToyBackend::large();
        let p = b.modulus();
        let hashes: Vec<u64> = hashes.into_iter().collect();
        prop_assume!(hashes.iter().all(|h| !(sk as u128 + *h as u128).is_multiple_of(p as u128)));
        let keys = keygen_with_secret(&b, b.scalar(sk), 8).unwrap();
        let sigs: Vec<_> = hashes.iter().map(|&h| sign(&b, keys.secret(), &b.scalar(h)).unwrap()).collect();
        let agg = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();

        let product = hashes.iter().fold(1u128, |acc, &h| acc * ((sk as u128 + h as u128) % p as u128) % p as u128);
        prop_assert_eq!(agg.sigma_hat.exponent(), inv_mod(product as u64, p));
        prop_assert!(verify_aggregate_full(&b, keys.public(), &agg));

        let i = pick.index(hashes.len());
        let aux = derive_aux(&b, keys.public(), &agg.member_hashes, &[i]).unwrap();
        prop_assert!(verify_subset(&b, keys.public(), &agg.sigma_hat, &aux, &[b.scalar(hashes[i])]));
        let wrong = b.scalar(hashes[i] + 1_000_000);
        prop_assert!(!verify_subset(&b, keys.public(), &agg.sigma_hat, &aux, &[wrong]));
    }

    #[test]
    fn every_subset_verifies(mask in 1u32..(1 << 6)) {
        let b = ToyBackend::large();
        let keys = keygen_with_secret(&b, b.scalar(123_456_789), 6).unwrap();
        let hashes: Vec<_> = (0..6).map(|i| b.hash_to_scalar(&[i])).collect();
        let sigs: Vec<_> = hashes.iter().map(|h| sign(&b, keys.secret(), h).unwrap()).collect();
        let agg = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();
        let subset: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let sub_hashes: Vec<_> = subset.iter().map(|&i| hashes[i]).collect();
        let aux = derive_aux(&b, keys.public(), &agg.member_hashes, &subset).unwrap();
        prop_assert_eq!(aux.powers.len(), subset.len() + 1);
        prop_assert!(verify_subset(&b, keys.public(), &agg.sigma_hat, &aux, &sub_hashes));
        let decoded = AuxiliaryInfo::decode(&b, &aux.encode(&b)).unwrap();
        prop_assert_eq!(decoded, aux);
    }
}

#[test]
fn production_roundtrip() {
    let b = Bls12Backend;
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let keys = keygen(&b, 4, &mut rng).unwrap();
    assert!(keys.public().is_consistent(&b));
    let hashes: Vec<_> = (0..4u8).map(|i| b.hash_to_scalar(&[i])).collect();
    let sigs: Vec<_> = hashes
        .iter()
        .map(|h| sign(&b, keys.secret(), h).unwrap())
        .collect();
    for s in &sigs {
        assert!(verify_single(&b, keys.public(), &s.sigma, &s.h));
    }
    assert!(!verify_single(
        &b,
        keys.public(),
        &sigs[0].sigma,
        &hashes[1]
    ));

    let agg = aggregate(&b, keys.public(), &sigs, Exec::default()).unwrap();
    assert!(verify_aggregate_full(&b, keys.public(), &agg));
    let aux = derive_aux(&b, keys.public(), &agg.member_hashes, &[2]).unwrap();
    assert!(verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &aux,
        &[hashes[2]]
    ));
    assert!(!verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &aux,
        &[hashes[1]]
    ));

    let pair = derive_aux(&b, keys.public(), &agg.member_hashes, &[3, 0]).unwrap();
    assert!(verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &pair,
        &[hashes[3], hashes[0]]
    ));

    assert_eq!(
        AggregateSignature::decode(&b, &agg.encode(&b)).unwrap(),
        agg
    );
    assert_eq!(
        PowerKey::decode(&b, &keys.public().encode(&b)).unwrap(),
        *keys.public()
    );
}

#[test]
fn inconsistent_power_chain_is_detected() {
    let b = ToyBackend::golden();
    let key = PowerKey::<ToyBackend>::from_powers(vec![b.element(3), b.element(9), b.element(28)])
        .unwrap();
    assert!(!key.is_consistent(&b));
}

#[test]
fn folded_chain_check_catches_a_broken_middle_link() {
    let b = Bls12Backend;
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    let keys = keygen(&b, 5, &mut rng).unwrap();
    let hashes: Vec<_> = (0..5u8).map(|i| b.hash_to_scalar(&[i, 9])).collect();
    let sigs: Vec<_> = hashes
        .iter()
        .map(|h| sign(&b, keys.secret(), h).unwrap())
        .collect();
    let agg = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();
    let aux = derive_aux(&b, keys.public(), &agg.member_hashes, &[0, 1, 2, 3]).unwrap();
    assert!(check_aux_chain(&b, keys.public(), &aux));
    assert!(verify_subset(
        &b,
        keys.public(),
        &agg.sigma_hat,
        &aux,
        &hashes[..4]
    ));

    let mut broken = aux.clone();
    broken.powers[2] = b.mul(&broken.powers[2], &b.generator_in(Slot::Right));
    assert!(!check_aux_chain(&b, keys.public(), &broken));
    let mut swapped = aux;
    swapped.powers.swap(1, 2);
    assert!(!check_aux_chain(&b, keys.public(), &swapped));
}

#[test]
fn member_aux_golden_values() {
    let (b, keys) = golden_key();
    let hashes = [b.scalar(2), b.scalar(5)];
    let all = derive_member_aux(&b, keys.public(), &hashes).unwrap();
    // Member 0 drops (3 + 2): (g^{3+5}, g^{3*8}); member 1 drops (3 + 5):
    // (g^{3+2}, g^{3*5}).
    assert_eq!(all[0].powers, vec![b.element(8), b.element(24)]);
    assert_eq!(all[1].powers, vec![b.element(5), b.element(15)]);
    assert_eq!(all[1].subset, vec![1]);
    assert_eq!(
        derive_member_aux(&b, keys.public(), &[hashes[0], hashes[0]]),
        Err(LvsError::DuplicateHash { index: 1 })
    );
    assert_eq!(
        derive_member_aux(&b, keys.public(), &[]),
        Err(LvsError::BadSubset)
    );
}

#[test]
fn member_aux_matches_per_member_derivation() {
    let b = Bls12Backend;
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let keys = keygen(&b, 6, &mut rng).unwrap();
    let hashes: Vec<_> = (0..6u8).map(|i| b.hash_to_scalar(&[i, 1])).collect();
    let sigs: Vec<_> = hashes
        .iter()
        .map(|h| sign(&b, keys.secret(), h).unwrap())
        .collect();
    let agg = aggregate(&b, keys.public(), &sigs, Exec::Sequential).unwrap();
    let all = derive_member_aux(&b, keys.public(), &agg.member_hashes).unwrap();
    for (j, aux) in all.iter().enumerate() {
        assert_eq!(
            *aux,
            derive_aux(&b, keys.public(), &agg.member_hashes, &[j]).unwrap()
        );
        assert!(verify_subset(
            &b,
            keys.public(),
            &agg.sigma_hat,
            aux,
            &[hashes[j]]
        ));
    }
}

#[test]
fn batched_member_check_still_names_the_bad_member() {
    let b = Bls12Backend;
    let mut rng = ChaCha20Rng::seed_from_u64(24);
    let keys = keygen(&b, 5, &mut rng).unwrap();
    let mut sigs: Vec<_> = (0..5u8)
        .map(|i| sign(&b, keys.secret(), &b.hash_to_scalar(&[i, 2])).unwrap())
        .collect();
    assert!(aggregate(&b, keys.public(), &sigs, Exec::Sequential).is_ok());
    sigs[3].sigma = b.mul(&sigs[3].sigma, &b.generator_in(Slot::Left));
    assert_eq!(
        aggregate(&b, keys.public(), &sigs, Exec::Sequential),
        Err(LvsError::InvalidMember { index: 3 })
    );
    // Swapping two signatures keeps the set of group elements but breaks
    // both equations.
    sigs[3].sigma = sigs[4].sigma;
    sigs.swap(0, 1);
    let (s0, s1) = (sigs[0].sigma, sigs[1].sigma);
    sigs[0].sigma = s1;
    sigs[1].sigma = s0;
    assert!(matches!(
        aggregate(&b, keys.public(), &sigs, Exec::Sequential),
        Err(LvsError::InvalidMember { .. })
    ));
}
