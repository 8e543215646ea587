//! Exponent-tracking backend.
//!
//! `g^a` is stored as `a mod p` and `e(g,g)^c` as `c mod p`, so every pairing
//! equation becomes a congruence that can be checked exactly. This is not a
//! cryptographic group (discrete logs are public); it exists to pin
//! hand-computed vectors and as an independent oracle for the curve backend.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use super::{BackendKind, BackendParams, GroupError, PairingBackend, ScalarField, H2_LEN};
use crate::wire::Reader;

const TAG: u8 = 0x10;

/// Residue modulo a prime below `2^63`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyScalar {
    value: u64,
    modulus: u64,
}

impl ToyScalar {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn with(&self, value: u64) -> Self {
        Self {
            value,
            modulus: self.modulus,
        }
    }

    fn check_modulus(&self, other: &Self) {
        debug_assert_eq!(self.modulus, other.modulus, "mixed toy moduli");
    }
}

impl fmt::Debug for ToyScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl Add for ToyScalar {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.check_modulus(&rhs);
        self.with(((self.value as u128 + rhs.value as u128) % self.modulus as u128) as u64)
    }
}

impl Sub for ToyScalar {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self.check_modulus(&rhs);
        self + (-rhs)
    }
}

impl Mul for ToyScalar {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.check_modulus(&rhs);
        self.with(mul_mod(self.value, rhs.value, self.modulus))
    }
}

impl Neg for ToyScalar {
    type Output = Self;

    fn neg(self) -> Self {
        if self.value == 0 {
            self
        } else {
            self.with(self.modulus - self.value)
        }
    }
}

impl ScalarField for ToyScalar {
    fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn inverse(&self) -> Result<Self, GroupError> {
        if self.value == 0 {
            return Err(GroupError::InversionOfZero);
        }
        // Extended Euclid on signed 128-bit integers.
        let (mut old_r, mut r) = (self.value as i128, self.modulus as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        debug_assert_eq!(old_r, 1, "modulus must be prime");
        Ok(self.with(old_s.rem_euclid(self.modulus as i128) as u64))
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        self.value.to_be_bytes().to_vec()
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `g^exponent`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyElement(pub ToyScalar);

/// `e(g,g)^exponent`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyGt(pub ToyScalar);

impl ToyElement {
    pub fn exponent(&self) -> u64 {
        self.0.value
    }
}

impl ToyGt {
    pub fn exponent(&self) -> u64 {
        self.0.value
    }
}

impl fmt::Debug for ToyElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g^{}", self.0.value)
    }
}

impl fmt::Debug for ToyGt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e(g,g)^{}", self.0.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyBackend {
    modulus: u64,
}

impl ToyBackend {
    /// The modulus used by the hand-computed vectors.
    pub const GOLDEN_MODULUS: u64 = 101;

    /// `2^62 - 57`, large enough that random collisions are not a concern in
    /// property tests.
    pub const LARGE_MODULUS: u64 = (1 << 62) - 57;

    pub fn new(modulus: u64) -> Result<Self, GroupError> {
        if modulus >= 1 << 63 || !is_prime_u64(modulus) {
            return Err(GroupError::NotPrime(modulus));
        }
        Ok(Self { modulus })
    }

    pub fn golden() -> Self {
        Self::new(Self::GOLDEN_MODULUS).expect("101 is prime")
    }

    pub fn large() -> Self {
        Self::new(Self::LARGE_MODULUS).expect("2^62-57 is prime")
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn scalar(&self, v: u64) -> ToyScalar {
        ToyScalar {
            value: v % self.modulus,
            modulus: self.modulus,
        }
    }

    /// `g^e`.
    pub fn element(&self, e: u64) -> ToyElement {
        ToyElement(self.scalar(e))
    }

    /// `e(g,g)^e`.
    pub fn gt(&self, e: u64) -> ToyGt {
        ToyGt(self.scalar(e))
    }

    fn digest_mod(&self, domain: &[u8], input: &[u8]) -> u64 {
        let d = Sha256::new()
            .chain_update(domain)
            .chain_update(input)
            .finalize();
        let wide = u128::from_be_bytes(d[..16].try_into().expect("16 bytes"));
        (wide % self.modulus as u128) as u64
    }
}

impl PairingBackend for ToyBackend {
    type Scalar = ToyScalar;
    type G = ToyElement;
    type Gt = ToyGt;

    fn kind(&self) -> BackendKind {
        BackendKind::Toy
    }

    fn params(&self) -> BackendParams {
        BackendParams {
            kind: BackendKind::Toy,
            name: "toy-exponent-tracking".into(),
            order_hex: format!("{:x}", self.modulus),
            order_bits: 64 - self.modulus.leading_zeros(),
        }
    }

    fn scalar_from_u64(&self, v: u64) -> ToyScalar {
        self.scalar(v)
    }

    fn random_scalar(&self, rng: &mut dyn RngCore) -> ToyScalar {
        self.scalar(rng.gen_range(0..self.modulus))
    }

    fn scalar_from_be_bytes(&self, bytes: &[u8]) -> Result<ToyScalar, GroupError> {
        let arr: [u8; 8] = bytes.try_into().map_err(|_| {
            GroupError::Malformed(format!("toy scalar needs 8 bytes, got {}", bytes.len()))
        })?;
        let v = u64::from_be_bytes(arr);
        if v >= self.modulus {
            return Err(GroupError::Malformed("non-canonical toy scalar".into()));
        }
        Ok(self.scalar(v))
    }

    fn scalar_len(&self) -> usize {
        8
    }

    fn generator(&self) -> ToyElement {
        self.element(1)
    }

    fn identity(&self) -> ToyElement {
        self.element(0)
    }

    fn is_identity(&self, x: &ToyElement) -> bool {
        x.0.value == 0
    }

    fn mul(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        ToyElement(a.0 + b.0)
    }

    fn pow(&self, base: &ToyElement, e: &ToyScalar) -> ToyElement {
        ToyElement(base.0 * *e)
    }

    fn try_pair(&self, a: &ToyElement, b: &ToyElement) -> Option<ToyGt> {
        Some(ToyGt(a.0 * b.0))
    }

    fn gt_identity(&self) -> ToyGt {
        self.gt(0)
    }

    fn gt_generator(&self) -> ToyGt {
        self.gt(1)
    }

    fn gt_mul(&self, a: &ToyGt, b: &ToyGt) -> ToyGt {
        ToyGt(a.0 + b.0)
    }

    fn gt_pow(&self, a: &ToyGt, e: &ToyScalar) -> ToyGt {
        ToyGt(a.0 * *e)
    }

    fn hash_to_scalar(&self, input: &[u8]) -> ToyScalar {
        self.scalar(self.digest_mod(b"EPASS-H", input))
    }

    fn hash_to_group(&self, input: &[u8]) -> ToyElement {
        let e = self.hash_to_scalar(input);
        if e.is_zero() {
            self.element(1)
        } else {
            ToyElement(e)
        }
    }

    fn gt_to_bytes(&self, x: &ToyGt) -> [u8; H2_LEN] {
        Sha256::new()
            .chain_update(b"EPASS-H2")
            .chain_update(self.modulus.to_be_bytes())
            .chain_update(x.0.value.to_be_bytes())
            .finalize()
            .into()
    }

    fn write_g(&self, x: &ToyElement, out: &mut Vec<u8>) {
        out.push(TAG);
        out.extend_from_slice(&x.0.value.to_be_bytes());
    }

    fn read_g(&self, r: &mut Reader<'_>) -> Result<ToyElement, GroupError> {
        let tag = r.u8()?;
        if tag != TAG {
            return Err(GroupError::BackendTag {
                expected: TAG,
                found: tag,
            });
        }
        let s = self.scalar_from_be_bytes(r.take(8)?)?;
        Ok(ToyElement(s))
    }
}
