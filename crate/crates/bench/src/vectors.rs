//! Test vectors in the 101-element toy group, produced by running the
//! library. Group elements are written as their discrete logarithms to base
//! `g`, so every value can be checked by hand.

use epass_core::chameleon;
use epass_core::group::{PairingBackend, ToyBackend};
use epass_core::lvs;
use epass_core::tre;
use epass_core::Exec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LvsVectors {
    pub secret: u64,
    pub powers: Vec<u64>,
    pub hashes: Vec<u64>,
    pub signatures: Vec<u64>,
    pub aggregate: u64,
    /// Coefficients of `prod (x + h_i)`, constant term first.
    pub delta: Vec<u64>,
    pub aux_subset: Vec<usize>,
    pub aux: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChameleonVectors {
    pub trapdoor: u64,
    pub public_key: u64,
    pub digest: u64,
    pub r: u64,
    pub hash: u64,
    pub new_digest: u64,
    pub new_r: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreVectors {
    pub server_secret: u64,
    pub designation: u64,
    pub r0: u64,
    /// A label whose `H1` is `g^h1`.
    pub label: String,
    pub h1: u64,
    pub u: u64,
    /// Exponent of the pairing value that masks the payload.
    pub mask: u64,
    pub tik: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenVectors {
    pub modulus: u64,
    pub lvs: LvsVectors,
    pub chameleon: ChameleonVectors,
    pub tre: TreVectors,
}

fn exp(e: &<ToyBackend as PairingBackend>::G) -> u64 {
    e.exponent()
}

/// First label `t<i>` whose `H1` lands on `g^target`.
pub fn label_hashing_to(b: &ToyBackend, target: u64) -> String {
    (0u64..)
        .map(|i| format!("t{i}"))
        .find(|l| b.hash_to_group(l.as_bytes()) == b.element(target))
        .expect("every exponent is hit by some label")
}

pub fn golden() -> GoldenVectors {
    let b = ToyBackend::golden();

    let keys = lvs::keygen_with_secret(&b, b.scalar(3), 4).expect("nonzero bound");
    let hashes = [2u64, 5];
    let sigs: Vec<_> = hashes
        .iter()
        .map(|&h| lvs::sign(&b, keys.secret(), &b.scalar(h)).expect("3 + h is invertible"))
        .collect();
    let agg = lvs::aggregate(&b, keys.public(), &sigs, Exec::Sequential).expect("valid members");
    let delta = epass_core::poly::expand_poly(&agg.member_hashes, b.one());
    let aux =
        lvs::derive_aux(&b, keys.public(), &agg.member_hashes, &[0]).expect("member 0 exists");

    let ch = chameleon::ch_keygen_with_secret(&b, b.scalar(7));
    let h = chameleon::hash_digest(&b, ch.public(), &b.scalar(4), &b.scalar(10));
    let new_r = chameleon::adapt_digest(
        &b,
        ch.secret(),
        &b.scalar(4),
        &h,
        &b.scalar(10),
        &b.scalar(9),
    )
    .expect("fresh digest adapts");

    let server = tre::server_keygen_with_secret(&b, b.scalar(3));
    let designation = tre::designation_with_secret(&b, server.public(), b.scalar(5));
    let label = label_hashing_to(&b, 11);
    let c = tre::tre_encrypt_with(
        &b,
        server.public(),
        &designation.public,
        &[0u8; epass_core::group::H2_LEN],
        label.as_bytes(),
        &b.scalar(2),
    )
    .expect("consistent designation");
    // With an all-zero payload rho is exactly H2(K); find K by search.
    let mask = (0..b.modulus())
        .find(|&e| b.gt_to_bytes(&b.gt(e)) == c.rho)
        .expect("mask is some power of e(g,g)");
    let tik = tre::extract_tik(&b, server.secret(), label.as_bytes());

    GoldenVectors {
        modulus: b.modulus(),
        lvs: LvsVectors {
            secret: 3,
            powers: keys.public().powers().iter().map(exp).collect(),
            hashes: hashes.to_vec(),
            signatures: sigs.iter().map(|s| exp(&s.sigma)).collect(),
            aggregate: exp(&agg.sigma_hat),
            delta: delta.iter().map(|d| d.value()).collect(),
            aux_subset: aux.subset.clone(),
            aux: aux.powers.iter().map(exp).collect(),
        },
        chameleon: ChameleonVectors {
            trapdoor: 7,
            public_key: exp(ch.public()),
            digest: 4,
            r: 10,
            hash: exp(&h),
            new_digest: 9,
            new_r: new_r.value(),
        },
        tre: TreVectors {
            server_secret: 3,
            designation: 5,
            r0: 2,
            h1: exp(&b.hash_to_group(label.as_bytes())),
            label,
            u: exp(&c.u),
            mask,
            tik: exp(&tik.key),
        },
    }
}
