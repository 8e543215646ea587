//! Discrete-log chameleon hash `h = g^{H(m)} * pk^r` with trapdoor `x`,
//! `pk = g^x`.
//!
//! Collision finding with the trapdoor is a single field operation:
//! `r' = (H(m) + x*r - H(m')) / x`. Without `x` it is as hard as the discrete
//! logarithm of `pk`.

use rand::RngCore;

use crate::group::{PairingBackend, ScalarField, Slot};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChameleonError {
    #[error("digest does not open to the claimed message and randomness")]
    StaleDigest,
    #[error("trapdoor is zero")]
    TrapdoorZero,
}

#[derive(Debug, Clone)]
pub struct TrapdoorKeyPair<B: PairingBackend> {
    sk: B::Scalar,
    pk: B::G,
}

impl<B: PairingBackend> TrapdoorKeyPair<B> {
    pub fn secret(&self) -> &B::Scalar {
        &self.sk
    }

    pub fn public(&self) -> &B::G {
        &self.pk
    }
}

pub fn ch_keygen<B: PairingBackend>(b: &B, rng: &mut dyn RngCore) -> TrapdoorKeyPair<B> {
    let x = b.random_nonzero(rng);
    ch_keygen_with_secret(b, x)
}

pub fn ch_keygen_with_secret<B: PairingBackend>(b: &B, x: B::Scalar) -> TrapdoorKeyPair<B> {
    TrapdoorKeyPair {
        pk: trapdoor_public(b, &x),
        sk: x,
    }
}

/// `g^x`, the public half of a trapdoor.
pub fn trapdoor_public<B: PairingBackend>(b: &B, x: &B::Scalar) -> B::G {
    b.pow(&b.generator_in(Slot::Left), x)
}

/// Hash over an already-digested message scalar.
pub fn hash_digest<B: PairingBackend>(
    b: &B,
    pk: &B::G,
    message_digest: &B::Scalar,
    r: &B::Scalar,
) -> B::G {
    let bases = [b.generator_in(Slot::Left), b.restrict(pk, Slot::Left)];
    b.msm(&bases, &[*message_digest, *r])
}

pub fn ch_hash<B: PairingBackend>(b: &B, pk: &B::G, m: &[u8], r: &B::Scalar) -> B::G {
    hash_digest(b, pk, &b.hash_to_scalar(m), r)
}

pub fn ch_verify<B: PairingBackend>(b: &B, pk: &B::G, m: &[u8], h: &B::G, r: &B::Scalar) -> bool {
    ch_hash(b, pk, m, r) == *h
}

/// Collision on message digests: the `r'` opening `h` to `new_digest`.
pub fn adapt_digest<B: PairingBackend>(
    b: &B,
    sk: &B::Scalar,
    digest: &B::Scalar,
    h: &B::G,
    r: &B::Scalar,
    new_digest: &B::Scalar,
) -> Result<B::Scalar, ChameleonError> {
    if sk.is_zero() {
        return Err(ChameleonError::TrapdoorZero);
    }
    // With the trapdoor in hand, g^m pk^r collapses to g^(m + sk r).
    if b.pow(&b.generator_in(Slot::Left), &(*digest + *sk * *r)) != *h {
        return Err(ChameleonError::StaleDigest);
    }
    let inv = sk.inverse().map_err(|_| ChameleonError::TrapdoorZero)?;
    Ok((*digest + *sk * *r - *new_digest) * inv)
}

pub fn ch_adapt<B: PairingBackend>(
    b: &B,
    sk: &B::Scalar,
    m: &[u8],
    h: &B::G,
    r: &B::Scalar,
    m_new: &[u8],
) -> Result<B::Scalar, ChameleonError> {
    adapt_digest(b, sk, &b.hash_to_scalar(m), h, r, &b.hash_to_scalar(m_new))
}
