//! BLS12-381 backend with mirrored source-group elements.
//!
//! An element `x = g^a` is carried as `(g1^a, g2^a)`. Either half may be
//! absent: `H1` only exists in G2 (hashing cannot produce a matching G1 point
//! without knowing the discrete log), and callers restrict elements they only
//! ever place on one side of a pairing. `e(x, y)` uses `(x.g1, y.g2)` and
//! falls back to `(y.g1, x.g2)`, which is the same value because both halves
//! share one exponent.

use std::fmt;

use ark_bls12_381::{g2, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{AdditiveGroup, AffineRepr, CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{BigInteger, Field, PrimeField};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{BackendKind, BackendParams, GroupError, PairingBackend, ScalarField, Slot, H2_LEN};
use crate::wire::Reader;

const TAG_BASE: u8 = 0x20;
const HAS_G1: u8 = 0b01;
const HAS_G2: u8 = 0b10;
const G1_LEN: usize = 48;
const G2_LEN: usize = 96;
const H1_DST: &[u8] = b"EPASS-V01-CS01-with-BLS12381G2_XMD:SHA-256_SSWU_RO_";

impl ScalarField for Fr {
    fn is_zero(&self) -> bool {
        ark_ff::Zero::is_zero(self)
    }

    fn inverse(&self) -> Result<Self, GroupError> {
        Field::inverse(self).ok_or(GroupError::InversionOfZero)
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        self.into_bigint().to_bytes_be()
    }
}

#[derive(Clone, Copy, Default)]
pub struct BlsElement {
    g1: Option<G1Projective>,
    g2: Option<G2Projective>,
}

impl BlsElement {
    pub fn g1(&self) -> Option<&G1Projective> {
        self.g1.as_ref()
    }

    pub fn g2(&self) -> Option<&G2Projective> {
        self.g2.as_ref()
    }

    fn mask(&self) -> u8 {
        (if self.g1.is_some() { HAS_G1 } else { 0 }) | (if self.g2.is_some() { HAS_G2 } else { 0 })
    }
}

/// Halves present on both sides are compared; elements sharing no half are
/// never equal.
impl PartialEq for BlsElement {
    fn eq(&self, other: &Self) -> bool {
        let mut compared = false;
        if let (Some(a), Some(b)) = (&self.g1, &other.g1) {
            if a != b {
                return false;
            }
            compared = true;
        }
        if let (Some(a), Some(b)) = (&self.g2, &other.g2) {
            if a != b {
                return false;
            }
            compared = true;
        }
        compared
    }
}

impl fmt::Debug for BlsElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = Vec::new();
        Bls12Backend.write_g(self, &mut out);
        write!(f, "BlsElement({})", hex::encode(&out[..out.len().min(17)]))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct BlsGt(pub PairingOutput<Bls12_381>);

impl fmt::Debug for BlsGt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut bytes = Vec::new();
        self.0
            .serialize_compressed(&mut bytes)
            .expect("serializing into a Vec cannot fail");
        write!(f, "BlsGt({}..)", hex::encode(&bytes[..16]))
    }
}

/// Production backend over BLS12-381.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bls12Backend;

impl Bls12Backend {
    pub fn new() -> Self {
        Self
    }

    fn gt_base() -> PairingOutput<Bls12_381> {
        use std::sync::OnceLock;
        static BASE: OnceLock<PairingOutput<Bls12_381>> = OnceLock::new();
        *BASE.get_or_init(|| Bls12_381::pairing(G1Affine::generator(), G2Affine::generator()))
    }

    /// Orients each pair as (G1, G2); `None` when some pair has no usable
    /// orientation.
    fn orient(
        pairs: &[(&BlsElement, &BlsElement)],
        g1s: &mut Vec<G1Projective>,
        g2s: &mut Vec<G2Projective>,
        negate: bool,
    ) -> Option<()> {
        for (a, b) in pairs {
            let (p, q) = match (a.g1, b.g2, b.g1, a.g2) {
                (Some(p), Some(q), _, _) => (p, q),
                (_, _, Some(p), Some(q)) => (p, q),
                _ => return None,
            };
            g1s.push(if negate { -p } else { p });
            g2s.push(q);
        }
        Some(())
    }

    fn product(g1s: &[G1Projective], g2s: &[G2Projective]) -> PairingOutput<Bls12_381> {
        let a = G1Projective::normalize_batch(g1s);
        let b = G2Projective::normalize_batch(g2s);
        Bls12_381::multi_pairing(a, b)
    }
}

impl PairingBackend for Bls12Backend {
    type Scalar = Fr;
    type G = BlsElement;
    type Gt = BlsGt;

    fn kind(&self) -> BackendKind {
        BackendKind::Production
    }

    fn params(&self) -> BackendParams {
        BackendParams {
            kind: BackendKind::Production,
            name: "bls12-381 (arkworks), mirrored G1/G2".into(),
            order_hex: Fr::MODULUS.to_string(),
            order_bits: Fr::MODULUS_BIT_SIZE,
        }
    }

    fn scalar_from_u64(&self, v: u64) -> Fr {
        Fr::from(v)
    }

    fn random_scalar(&self, rng: &mut dyn RngCore) -> Fr {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Fr::from_le_bytes_mod_order(&wide)
    }

    fn scalar_from_be_bytes(&self, bytes: &[u8]) -> Result<Fr, GroupError> {
        if bytes.len() != 32 {
            return Err(GroupError::Malformed(format!(
                "scalar needs 32 bytes, got {}",
                bytes.len()
            )));
        }
        let s = Fr::from_be_bytes_mod_order(bytes);
        if s.into_bigint().to_bytes_be() != bytes {
            return Err(GroupError::Malformed("non-canonical scalar".into()));
        }
        Ok(s)
    }

    fn scalar_len(&self) -> usize {
        32
    }

    fn generator(&self) -> BlsElement {
        BlsElement {
            g1: Some(G1Projective::generator()),
            g2: Some(G2Projective::generator()),
        }
    }

    fn generator_in(&self, slot: Slot) -> BlsElement {
        self.restrict(&self.generator(), slot)
    }

    fn identity(&self) -> BlsElement {
        BlsElement {
            g1: Some(G1Projective::ZERO),
            g2: Some(G2Projective::ZERO),
        }
    }

    fn is_identity(&self, x: &BlsElement) -> bool {
        x.g1.is_none_or(|p| ark_ff::Zero::is_zero(&p))
            && x.g2.is_none_or(|q| ark_ff::Zero::is_zero(&q))
    }

    fn mul(&self, a: &BlsElement, b: &BlsElement) -> BlsElement {
        BlsElement {
            g1: a.g1.zip(b.g1).map(|(x, y)| x + y),
            g2: a.g2.zip(b.g2).map(|(x, y)| x + y),
        }
    }

    fn pow(&self, base: &BlsElement, e: &Fr) -> BlsElement {
        BlsElement {
            g1: base.g1.map(|p| p * e),
            g2: base.g2.map(|q| q * e),
        }
    }

    fn msm(&self, bases: &[BlsElement], scalars: &[Fr]) -> BlsElement {
        assert_eq!(bases.len(), scalars.len(), "msm length mismatch");
        let g1: Option<Vec<G1Projective>> = bases.iter().map(|b| b.g1).collect();
        let g2: Option<Vec<G2Projective>> = bases.iter().map(|b| b.g2).collect();
        BlsElement {
            g1: g1.map(|pts| {
                G1Projective::msm(&G1Projective::normalize_batch(&pts), scalars)
                    .expect("lengths checked")
            }),
            g2: g2.map(|pts| {
                G2Projective::msm(&G2Projective::normalize_batch(&pts), scalars)
                    .expect("lengths checked")
            }),
        }
    }

    fn restrict(&self, x: &BlsElement, slot: Slot) -> BlsElement {
        match slot {
            Slot::Left if x.g1.is_some() => BlsElement { g1: x.g1, g2: None },
            Slot::Right if x.g2.is_some() => BlsElement { g1: None, g2: x.g2 },
            _ => *x,
        }
    }

    fn try_pair(&self, a: &BlsElement, b: &BlsElement) -> Option<BlsGt> {
        let (mut g1s, mut g2s) = (Vec::with_capacity(1), Vec::with_capacity(1));
        Self::orient(&[(a, b)], &mut g1s, &mut g2s, false)?;
        Some(BlsGt(Self::product(&g1s, &g2s)))
    }

    fn gt_identity(&self) -> BlsGt {
        BlsGt(PairingOutput::ZERO)
    }

    fn gt_generator(&self) -> BlsGt {
        BlsGt(Self::gt_base())
    }

    fn gt_mul(&self, a: &BlsGt, b: &BlsGt) -> BlsGt {
        BlsGt(a.0 + b.0)
    }

    fn gt_pow(&self, a: &BlsGt, e: &Fr) -> BlsGt {
        BlsGt(a.0 * e)
    }

    fn pairing_eq(
        &self,
        lhs: &[(&BlsElement, &BlsElement)],
        rhs: &[(&BlsElement, &BlsElement)],
    ) -> bool {
        let n = lhs.len() + rhs.len();
        let (mut g1s, mut g2s) = (Vec::with_capacity(n), Vec::with_capacity(n));
        if Self::orient(lhs, &mut g1s, &mut g2s, false).is_none()
            || Self::orient(rhs, &mut g1s, &mut g2s, true).is_none()
        {
            return false;
        }
        ark_ff::Zero::is_zero(&Self::product(&g1s, &g2s))
    }

    fn pairing_eq_base(&self, lhs: &[(&BlsElement, &BlsElement)]) -> bool {
        let (mut g1s, mut g2s) = (Vec::with_capacity(lhs.len()), Vec::with_capacity(lhs.len()));
        if Self::orient(lhs, &mut g1s, &mut g2s, false).is_none() {
            return false;
        }
        Self::product(&g1s, &g2s) == Self::gt_base()
    }

    fn hash_to_scalar(&self, input: &[u8]) -> Fr {
        let mut wide = Vec::with_capacity(64);
        for counter in [0u8, 1u8] {
            wide.extend_from_slice(
                &Sha256::new()
                    .chain_update(b"EPASS-H")
                    .chain_update([counter])
                    .chain_update(input)
                    .finalize(),
            );
        }
        Fr::from_be_bytes_mod_order(&wide)
    }

    fn hash_to_group(&self, input: &[u8]) -> BlsElement {
        let hasher = MapToCurveBasedHasher::<
            G2Projective,
            DefaultFieldHasher<Sha256, 128>,
            WBMap<g2::Config>,
        >::new(H1_DST)
        .expect("static domain separation tag is valid");
        let mut msg = input.to_vec();
        loop {
            let q: G2Affine = hasher.hash(&msg).expect("hash to curve is total");
            if !q.is_zero() {
                return BlsElement {
                    g1: None,
                    g2: Some(q.into()),
                };
            }
            msg.push(0);
        }
    }

    fn gt_to_bytes(&self, x: &BlsGt) -> [u8; H2_LEN] {
        let mut bytes = Vec::new();
        x.0.serialize_compressed(&mut bytes)
            .expect("serializing into a Vec cannot fail");
        Sha256::new()
            .chain_update(b"EPASS-H2")
            .chain_update(&bytes)
            .finalize()
            .into()
    }

    fn write_g(&self, x: &BlsElement, out: &mut Vec<u8>) {
        out.push(TAG_BASE | x.mask());
        if let Some(p) = x.g1 {
            p.into_affine()
                .serialize_compressed(&mut *out)
                .expect("serializing into a Vec cannot fail");
        }
        if let Some(q) = x.g2 {
            q.into_affine()
                .serialize_compressed(&mut *out)
                .expect("serializing into a Vec cannot fail");
        }
    }

    fn read_g(&self, r: &mut Reader<'_>) -> Result<BlsElement, GroupError> {
        let tag = r.u8()?;
        let mask = tag & 0x0f;
        if tag & 0xf0 != TAG_BASE || mask == 0 || mask > (HAS_G1 | HAS_G2) {
            return Err(GroupError::BackendTag {
                expected: TAG_BASE,
                found: tag,
            });
        }
        let bad = |e: ark_serialize::SerializationError| GroupError::Malformed(e.to_string());
        let g1 = if mask & HAS_G1 != 0 {
            Some(
                G1Affine::deserialize_compressed(r.take(G1_LEN)?)
                    .map_err(bad)?
                    .into(),
            )
        } else {
            None
        };
        let g2 = if mask & HAS_G2 != 0 {
            Some(
                G2Affine::deserialize_compressed(r.take(G2_LEN)?)
                    .map_err(bad)?
                    .into(),
            )
        } else {
            None
        };
        let x = BlsElement { g1, g2 };
        if let (Some(p), Some(q)) = (g1, g2) {
            // Both halves must carry the same exponent.
            let lhs = Bls12_381::pairing(p, G2Affine::generator());
            let rhs = Bls12_381::pairing(G1Affine::generator(), q);
            if lhs != rhs {
                return Err(GroupError::Malformed("inconsistent G1/G2 mirror".into()));
            }
        }
        Ok(x)
    }
}
