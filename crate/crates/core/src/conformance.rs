//! Cross-backend relation checks.
//!
//! Each [`Instance`] is a pairing relation written with small integer
//! exponents: a bare product-of-pairings equation, a signature check, a
//! subset check with auxiliary data, or a time-key check, optionally
//! tampered with. Because the integers are small the truth value is the same
//! in every group of large enough order, so two backends must agree on it
//! and both must match [`Instance::expected`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::exec::Exec;
use crate::group::PairingBackend;
use crate::lvs::{self, AuxiliaryInfo};
use crate::tre;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetTamper {
    None,
    Sigma,
    AuxPower(usize),
    Hash(usize),
    Swap(usize, usize),
}

/// One pairing relation, described by small integers only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    /// `prod e(g^a, g^b) == prod e(g^c, g^d)`.
    Raw {
        lhs: Vec<(i64, i64)>,
        rhs: Vec<(i64, i64)>,
    },
    Single {
        alpha: u64,
        h: u64,
        tamper: i64,
    },
    Subset {
        alpha: u64,
        hashes: Vec<u64>,
        subset: Vec<usize>,
        tamper: SubsetTamper,
    },
    Tik {
        secret: u64,
        label: String,
        tamper: bool,
    },
}

impl Instance {
    /// Truth value computed over the integers.
    pub fn expected(&self) -> bool {
        match self {
            Instance::Raw { lhs, rhs } => {
                let sum = |v: &[(i64, i64)]| v.iter().map(|(a, b)| a * b).sum::<i64>();
                sum(lhs) == sum(rhs)
            }
            Instance::Single { tamper, .. } => *tamper == 0,
            Instance::Subset { tamper, .. } => matches!(tamper, SubsetTamper::None),
            Instance::Tik { tamper, .. } => !tamper,
        }
    }
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Instance {
    let small = |rng: &mut R| rng.gen_range(-(1i64 << 16)..=(1 << 16));
    match rng.gen_range(0..20) {
        0..=7 => {
            let lhs: Vec<_> = (0..rng.gen_range(1..=3))
                .map(|_| (small(rng), small(rng)))
                .collect();
            let mut rhs: Vec<_> = (0..rng.gen_range(0..=2))
                .map(|_| (small(rng), small(rng)))
                .collect();
            let target: i64 = lhs.iter().map(|(a, b)| a * b).sum();
            let partial: i64 = rhs.iter().map(|(a, b)| a * b).sum();
            let miss = if rng.gen_bool(0.5) {
                0
            } else {
                rng.gen_range(1..=1000) * if rng.gen_bool(0.5) { 1 } else { -1 }
            };
            rhs.push((target - partial + miss, 1));
            Instance::Raw { lhs, rhs }
        }
        8..=11 => Instance::Single {
            alpha: rng.gen_range(1..1 << 20),
            h: rng.gen_range(0..1 << 20),
            tamper: if rng.gen_bool(0.5) {
                0
            } else {
                rng.gen_range(1..50)
            },
        },
        12..=16 => {
            let n = rng.gen_range(1..=5);
            let mut hashes: Vec<u64> = Vec::with_capacity(n);
            while hashes.len() < n {
                let h = rng.gen_range(0..1 << 20);
                if !hashes.contains(&h) {
                    hashes.push(h);
                }
            }
            let m = rng.gen_range(1..=n);
            let mut subset = sample(rng, n, m).into_vec();
            subset.sort_unstable();
            let tamper = match rng.gen_range(0..6) {
                0 | 1 => SubsetTamper::None,
                2 => SubsetTamper::Sigma,
                3 => SubsetTamper::AuxPower(rng.gen_range(0..=m)),
                4 => SubsetTamper::Hash(rng.gen_range(0..m)),
                _ => SubsetTamper::Swap(0, rng.gen_range(1..=m)),
            };
            Instance::Subset {
                alpha: rng.gen_range(1..1 << 20),
                hashes,
                subset,
                tamper,
            }
        }
        _ => Instance::Tik {
            secret: rng.gen_range(1..1 << 20),
            label: format!("{}", rng.gen_range(0..10_000u32)),
            tamper: rng.gen_bool(0.4),
        },
    }
}

pub fn signed<B: PairingBackend>(b: &B, e: i64) -> B::Scalar {
    let s = b.scalar_from_u64(e.unsigned_abs());
    if e < 0 {
        -s
    } else {
        s
    }
}

fn g_pow<B: PairingBackend>(b: &B, e: i64) -> B::G {
    b.pow(&b.generator(), &signed(b, e))
}

/// Evaluates the relation on `b`.
pub fn evaluate<B: PairingBackend>(b: &B, inst: &Instance) -> bool {
    let g = b.generator();
    match inst {
        Instance::Raw { lhs, rhs } => {
            let elems = |v: &[(i64, i64)]| -> Vec<(B::G, B::G)> {
                v.iter().map(|&(x, y)| (g_pow(b, x), g_pow(b, y))).collect()
            };
            let (l, r) = (elems(lhs), elems(rhs));
            let l: Vec<(&B::G, &B::G)> = l.iter().map(|(x, y)| (x, y)).collect();
            let r: Vec<(&B::G, &B::G)> = r.iter().map(|(x, y)| (x, y)).collect();
            b.pairing_eq(&l, &r)
        }
        Instance::Single { alpha, h, tamper } => {
            let keys = lvs::keygen_with_secret(b, b.scalar_from_u64(*alpha), 1).unwrap();
            let h = b.scalar_from_u64(*h);
            let sig = lvs::sign(b, keys.secret(), &h).unwrap();
            let sigma = b.mul(&sig.sigma, &g_pow(b, *tamper));
            lvs::verify_single(b, keys.public(), &sigma, &h)
        }
        Instance::Subset {
            alpha,
            hashes,
            subset,
            tamper,
        } => {
            let keys = lvs::keygen_with_secret(b, b.scalar_from_u64(*alpha), hashes.len()).unwrap();
            let hs: Vec<B::Scalar> = hashes.iter().map(|&h| b.scalar_from_u64(h)).collect();
            let sigs: Vec<_> = hs
                .iter()
                .map(|h| lvs::sign(b, keys.secret(), h).unwrap())
                .collect();
            let agg = lvs::aggregate(b, keys.public(), &sigs, Exec::Sequential).unwrap();
            let aux = lvs::derive_aux(b, keys.public(), &agg.member_hashes, subset).unwrap();
            let mut sigma_hat = agg.sigma_hat.clone();
            let mut powers = aux.powers.clone();
            let mut subset_hashes: Vec<B::Scalar> = subset.iter().map(|&i| hs[i]).collect();
            match *tamper {
                SubsetTamper::None => {}
                SubsetTamper::Sigma => sigma_hat = b.mul(&sigma_hat, &g),
                SubsetTamper::AuxPower(i) => powers[i] = b.mul(&powers[i], &g),
                SubsetTamper::Hash(i) => subset_hashes[i] = subset_hashes[i] + b.one(),
                SubsetTamper::Swap(i, j) => powers.swap(i, j),
            }
            let aux = AuxiliaryInfo {
                subset: aux.subset,
                powers,
            };
            lvs::verify_subset(b, keys.public(), &sigma_hat, &aux, &subset_hashes)
        }
        Instance::Tik {
            secret,
            label,
            tamper,
        } => {
            let server = tre::server_keygen_with_secret(b, b.scalar_from_u64(*secret));
            let mut tik = tre::extract_tik(b, server.secret(), label.as_bytes());
            if *tamper {
                tik.key = b.mul(&tik.key, &g);
            }
            tre::verify_tik(b, server.public(), &tik)
        }
    }
}

/// Outcome of replaying a batch of instances on two backends.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossCheck {
    pub checked: usize,
    /// Indices where the backends returned different booleans.
    pub disagreements: Vec<usize>,
    /// Indices where either backend differed from the integer truth value.
    pub wrong: Vec<usize>,
    /// How many instances were false and true.
    pub truths: [usize; 2],
}

impl CrossCheck {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty() && self.wrong.is_empty()
    }
}

/// Replays `count` instances drawn from `seed` on both backends.
pub fn cross_check<A: PairingBackend, B: PairingBackend>(
    a: &A,
    b: &B,
    seed: u64,
    count: usize,
) -> CrossCheck {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = CrossCheck::default();
    for n in 0..count {
        let inst = random_instance(&mut rng);
        let expected = inst.expected();
        let (x, y) = (evaluate(a, &inst), evaluate(b, &inst));
        if x != y {
            log::warn!("instance {n} disagrees: {inst:?}");
            out.disagreements.push(n);
        }
        if x != expected || y != expected {
            out.wrong.push(n);
        }
        out.truths[usize::from(x)] += 1;
        out.checked += 1;
    }
    out
}
