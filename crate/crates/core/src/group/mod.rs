//! Bilinear group abstraction shared by every primitive in the crate.
//!
//! All protocol code is generic over [`PairingBackend`]. Two backends ship:
//!
//! * [`ToyBackend`] stores each element as its discrete logarithm modulo a
//!   small prime. Pairing equations reduce to exact integer arithmetic, so it
//!   doubles as a brute-force oracle for hand-computed test vectors.
//! * [`Bls12Backend`] runs on BLS12-381. The curve is asymmetric, so an
//!   element may carry a mirror in each source group (same exponent on the G1
//!   and G2 generators). [`Slot`] hints let callers drop the half they never
//!   pair on, which is purely a size/speed concern; the algebra stays
//!   symmetric.

mod bls;
mod toy;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use bls::{Bls12Backend, BlsElement, BlsGt};
pub use toy::{ToyBackend, ToyElement, ToyGt, ToyScalar};

use crate::wire::Reader;

/// Output length of `H2` in bytes. Timed-release payloads are exactly this
/// long.
pub const H2_LEN: usize = 32;

/// Errors raised by scalar and element handling.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("inversion of zero")]
    InversionOfZero,
    #[error("unexpected backend tag {found:#04x} (expected {expected:#04x})")]
    BackendTag { expected: u8, found: u8 },
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
}

/// Which side of the symmetric pairing an element is going to be used on.
///
/// The toy backend ignores this. On BLS12-381, `Left` keeps the G1 mirror and
/// `Right` keeps the G2 mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Toy,
    Production,
}

impl BackendKind {
    pub fn tag(self) -> u8 {
        match self {
            BackendKind::Toy => 0x10,
            BackendKind::Production => 0x20,
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Toy => "toy",
            BackendKind::Production => "production",
        })
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toy" => Ok(BackendKind::Toy),
            "production" | "bls12-381" => Ok(BackendKind::Production),
            other => Err(format!(
                "unknown backend `{other}` (expected toy|production)"
            )),
        }
    }
}

/// Human readable description of a backend instance, embedded in every
/// benchmark report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendParams {
    pub kind: BackendKind,
    pub name: String,
    /// Group order in hex.
    pub order_hex: String,
    pub order_bits: u32,
}

/// Arithmetic in `Z_p`.
pub trait ScalarField:
    Copy
    + Debug
    + PartialEq
    + Eq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn is_zero(&self) -> bool;

    fn inverse(&self) -> Result<Self, GroupError>;

    /// Fixed-width big-endian bytes of the canonical residue.
    fn to_be_bytes(&self) -> Vec<u8>;
}

/// A bilinear group `(p, G, G_T, g, e)` together with the hash suite
/// `H: bytes -> Z_p`, `H1: bytes -> G*` and `H2: G_T -> {0,1}^256`.
pub trait PairingBackend: Clone + Debug + Send + Sync + 'static {
    type Scalar: ScalarField;
    type G: Clone + Debug + PartialEq + Send + Sync;
    type Gt: Clone + Debug + PartialEq + Send + Sync;

    fn kind(&self) -> BackendKind;

    fn params(&self) -> BackendParams;

    // -- scalars ---------------------------------------------------------

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;

    fn zero(&self) -> Self::Scalar {
        self.scalar_from_u64(0)
    }

    fn one(&self) -> Self::Scalar {
        self.scalar_from_u64(1)
    }

    /// Uniform element of `Z_p`.
    fn random_scalar(&self, rng: &mut dyn RngCore) -> Self::Scalar;

    /// Uniform element of `Z_p^*`.
    fn random_nonzero(&self, rng: &mut dyn RngCore) -> Self::Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// Parses fixed-width big-endian bytes; rejects non-canonical residues.
    fn scalar_from_be_bytes(&self, bytes: &[u8]) -> Result<Self::Scalar, GroupError>;

    fn scalar_len(&self) -> usize;

    // -- source group ----------------------------------------------------

    fn generator(&self) -> Self::G;

    /// The generator projected onto one pairing slot.
    fn generator_in(&self, slot: Slot) -> Self::G {
        let _ = slot;
        self.generator()
    }

    fn identity(&self) -> Self::G;

    fn is_identity(&self, x: &Self::G) -> bool;

    fn mul(&self, a: &Self::G, b: &Self::G) -> Self::G;

    fn pow(&self, base: &Self::G, e: &Self::Scalar) -> Self::G;

    /// `prod bases[i]^scalars[i]`. Panics when the slices differ in length.
    fn msm(&self, bases: &[Self::G], scalars: &[Self::Scalar]) -> Self::G {
        assert_eq!(bases.len(), scalars.len(), "msm length mismatch");
        bases
            .iter()
            .zip(scalars)
            .fold(self.identity(), |acc, (b, s)| {
                self.mul(&acc, &self.pow(b, s))
            })
    }

    /// Drops whatever the element needs only for the other slot.
    fn restrict(&self, x: &Self::G, slot: Slot) -> Self::G {
        let _ = slot;
        x.clone()
    }

    // -- pairing ---------------------------------------------------------

    /// `e(a, b)`, or `None` when the two encodings cannot be paired (an
    /// asymmetric backend given two elements restricted to the same slot).
    fn try_pair(&self, a: &Self::G, b: &Self::G) -> Option<Self::Gt>;

    fn pair(&self, a: &Self::G, b: &Self::G) -> Self::Gt {
        self.try_pair(a, b)
            .expect("pairing arguments restricted to the same source group")
    }

    fn gt_identity(&self) -> Self::Gt;

    /// `e(g, g)`.
    fn gt_generator(&self) -> Self::Gt;

    fn gt_mul(&self, a: &Self::Gt, b: &Self::Gt) -> Self::Gt;

    fn gt_pow(&self, a: &Self::Gt, e: &Self::Scalar) -> Self::Gt;

    /// `prod e(lhs) == prod e(rhs)`. False when any pair cannot be formed.
    fn pairing_eq(&self, lhs: &[(&Self::G, &Self::G)], rhs: &[(&Self::G, &Self::G)]) -> bool {
        let product = |pairs: &[(&Self::G, &Self::G)]| -> Option<Self::Gt> {
            pairs.iter().try_fold(self.gt_identity(), |acc, (a, b)| {
                Some(self.gt_mul(&acc, &self.try_pair(a, b)?))
            })
        };
        match (product(lhs), product(rhs)) {
            (Some(l), Some(r)) => l == r,
            _ => false,
        }
    }

    /// `prod e(lhs) == e(g, g)`.
    fn pairing_eq_base(&self, lhs: &[(&Self::G, &Self::G)]) -> bool {
        let g = self.generator();
        self.pairing_eq(lhs, &[(&g, &g)])
    }

    // -- hashing ---------------------------------------------------------

    /// `H`.
    fn hash_to_scalar(&self, input: &[u8]) -> Self::Scalar;

    /// `H1`; never the identity.
    fn hash_to_group(&self, input: &[u8]) -> Self::G;

    /// `H2`.
    fn gt_to_bytes(&self, x: &Self::Gt) -> [u8; H2_LEN];

    // -- encoding --------------------------------------------------------

    fn write_g(&self, x: &Self::G, out: &mut Vec<u8>);

    fn read_g(&self, r: &mut Reader<'_>) -> Result<Self::G, GroupError>;

    fn encode_g(&self, x: &Self::G) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_g(x, &mut out);
        out
    }

    fn decode_g(&self, bytes: &[u8]) -> Result<Self::G, GroupError> {
        let mut r = Reader::new(bytes);
        let x = self.read_g(&mut r)?;
        r.finish()?;
        Ok(x)
    }

    /// Tag byte followed by the fixed-width big-endian residue.
    fn encode_scalar(&self, s: &Self::Scalar) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.scalar_len());
        out.push(self.kind().tag());
        out.extend_from_slice(&s.to_be_bytes());
        out
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Self::Scalar, GroupError> {
        let (&tag, rest) = bytes
            .split_first()
            .ok_or_else(|| GroupError::Malformed("empty scalar encoding".into()))?;
        if tag != self.kind().tag() {
            return Err(GroupError::BackendTag {
                expected: self.kind().tag(),
                found: tag,
            });
        }
        self.scalar_from_be_bytes(rest)
    }
}

/// Hex helpers over the canonical encodings.
pub fn g_to_hex<B: PairingBackend>(b: &B, x: &B::G) -> String {
    hex::encode(b.encode_g(x))
}

pub fn g_from_hex<B: PairingBackend>(b: &B, s: &str) -> Result<B::G, GroupError> {
    let bytes = hex::decode(s).map_err(|e| GroupError::Malformed(e.to_string()))?;
    b.decode_g(&bytes)
}

pub fn scalar_to_hex<B: PairingBackend>(b: &B, s: &B::Scalar) -> String {
    hex::encode(b.encode_scalar(s))
}

pub fn scalar_from_hex<B: PairingBackend>(b: &B, s: &str) -> Result<B::Scalar, GroupError> {
    let bytes = hex::decode(s).map_err(|e| GroupError::Malformed(e.to_string()))?;
    b.decode_scalar(&bytes)
}

/// Inverts every element in place with a single field inversion.
pub fn batch_inverse<S: ScalarField>(values: &mut [S], one: S) -> Result<(), GroupError> {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = one;
    for v in values.iter() {
        if v.is_zero() {
            return Err(GroupError::InversionOfZero);
        }
        prefix.push(acc);
        acc = acc * *v;
    }
    let mut inv = acc.inverse()?;
    for (v, p) in values.iter_mut().zip(prefix).rev() {
        let next = inv * *v;
        *v = inv * p;
        inv = next;
    }
    Ok(())
}
