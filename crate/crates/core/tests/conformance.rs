use epass_core::conformance::{cross_check, evaluate, random_instance, signed, Instance};
use epass_core::group::ScalarField;
use epass_core::{Bls12Backend, PairingBackend, ToyBackend};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn backends_agree_on_random_relations() {
    let r = cross_check(&ToyBackend::large(), &Bls12Backend, 0x5eed, 250);
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.checked, 250);
    assert!(
        r.truths[0] > 50 && r.truths[1] > 50,
        "unbalanced sample {:?}",
        r.truths
    );
}

#[test]
fn golden_group_matches_the_integers_on_tiny_relations() {
    // e(g^3, g^4) = e(g^6, g^2) holds; e(g^3, g^4) = e(g^5, g^2) does not.
    let b = ToyBackend::golden();
    let holds = Instance::Raw {
        lhs: vec![(3, 4)],
        rhs: vec![(6, 2)],
    };
    let fails = Instance::Raw {
        lhs: vec![(3, 4)],
        rhs: vec![(5, 2)],
    };
    assert!(holds.expected() && evaluate(&b, &holds));
    assert!(!fails.expected() && !evaluate(&b, &fails));
}

#[test]
fn every_kind_of_instance_is_drawn() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut seen = [false; 4];
    for _ in 0..200 {
        let i = match random_instance(&mut rng) {
            Instance::Raw { .. } => 0,
            Instance::Single { .. } => 1,
            Instance::Subset { .. } => 2,
            Instance::Tik { .. } => 3,
        };
        seen[i] = true;
    }
    assert_eq!(seen, [true; 4]);
}

#[test]
fn scalars_from_signed_exponents() {
    let b = ToyBackend::golden();
    assert_eq!(signed(&b, -3), b.scalar_from_u64(98));
    assert!(!signed(&b, 5).is_zero());
}
