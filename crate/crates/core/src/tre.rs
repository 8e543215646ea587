//! Timed-release encryption gated by a time server.
//!
//! The server holds `a`, publishes `Z = g^a`, and at time `T` releases the
//! time-instant key `k_T = H1(T)^a`. A payload addressed to `T` for the holder
//! of designation secret `s` is masked with `H2(e(g, H1(T))^{r0*s*a})`; it can
//! be unmasked only with both `k_T` and `s`.

use rand::RngCore;

use crate::group::{GroupError, PairingBackend, Slot, H2_LEN};
use crate::wire::{put_bytes32, Reader};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreError {
    #[error("designation key fails e(g^s, Z) = e(g, Z^s)")]
    DesignationCheck,
    #[error("payload must be exactly {H2_LEN} bytes, got {0}")]
    PayloadLength(usize),
    #[error("time key is for {tik:?}, ciphertext is locked to {ciphertext:?}")]
    LabelMismatch { ciphertext: String, tik: String },
    #[error("ciphertext element cannot be paired with the time key")]
    Unpairable,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Canonical time label: the tick count as ASCII decimal.
pub fn time_label(tick: u64) -> Vec<u8> {
    tick.to_string().into_bytes()
}

#[derive(Debug, Clone)]
pub struct ServerKeyPair<B: PairingBackend> {
    sk: B::Scalar,
    pk: B::G,
}

impl<B: PairingBackend> ServerKeyPair<B> {
    pub fn secret(&self) -> &B::Scalar {
        &self.sk
    }

    /// `Z = g^a`.
    pub fn public(&self) -> &B::G {
        &self.pk
    }
}

pub fn server_keygen<B: PairingBackend>(b: &B, rng: &mut dyn RngCore) -> ServerKeyPair<B> {
    server_keygen_with_secret(b, b.random_nonzero(rng))
}

pub fn server_keygen_with_secret<B: PairingBackend>(b: &B, sk: B::Scalar) -> ServerKeyPair<B> {
    ServerKeyPair {
        pk: b.pow(&b.generator(), &sk),
        sk,
    }
}

/// Public half of a designation key: `(g^s, Z^s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignationPublic<B: PairingBackend> {
    pub g_s: B::G,
    pub z_s: B::G,
}

impl<B: PairingBackend> DesignationPublic<B> {
    pub fn is_consistent(&self, b: &B, server_pk: &B::G) -> bool {
        b.pairing_eq(
            &[(&self.g_s, server_pk)],
            &[(&b.generator_in(Slot::Left), &self.z_s)],
        )
    }
}

#[derive(Debug, Clone)]
pub struct DesignationKey<B: PairingBackend> {
    pub s: B::Scalar,
    pub public: DesignationPublic<B>,
}

pub fn designation_keygen<B: PairingBackend>(
    b: &B,
    server_pk: &B::G,
    rng: &mut dyn RngCore,
) -> DesignationKey<B> {
    designation_with_secret(b, server_pk, b.random_nonzero(rng))
}

pub fn designation_with_secret<B: PairingBackend>(
    b: &B,
    server_pk: &B::G,
    s: B::Scalar,
) -> DesignationKey<B> {
    DesignationKey {
        public: DesignationPublic {
            g_s: b.pow(&b.generator_in(Slot::Left), &s),
            z_s: b.pow(server_pk, &s),
        },
        s,
    }
}

/// Time-instant key `k_T = H1(T)^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tik<B: PairingBackend> {
    pub label: Vec<u8>,
    pub key: B::G,
}

impl<B: PairingBackend> Tik<B> {
    pub fn label_str(&self) -> String {
        String::from_utf8_lossy(&self.label).into_owned()
    }
}

pub fn extract_tik<B: PairingBackend>(b: &B, sk: &B::Scalar, label: &[u8]) -> Tik<B> {
    Tik {
        label: label.to_vec(),
        key: b.restrict(&b.pow(&b.hash_to_group(label), sk), Slot::Right),
    }
}

/// `e(Z, H1(T)) = e(g, k_T)`; needs nothing secret.
pub fn verify_tik<B: PairingBackend>(b: &B, server_pk: &B::G, tik: &Tik<B>) -> bool {
    let h1 = b.hash_to_group(&tik.label);
    b.pairing_eq(
        &[(server_pk, &h1)],
        &[(&b.generator_in(Slot::Left), &tik.key)],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeLockedCiphertext<B: PairingBackend> {
    pub label: Vec<u8>,
    /// `g^{r0}`.
    pub u: B::G,
    pub rho: [u8; H2_LEN],
}

impl<B: PairingBackend> TimeLockedCiphertext<B> {
    /// `u32` label length, label, `U`, then `rho` raw.
    pub fn encode(&self, b: &B) -> Vec<u8> {
        let mut out = Vec::new();
        put_bytes32(&mut out, &self.label);
        b.write_g(&self.u, &mut out);
        out.extend_from_slice(&self.rho);
        out
    }

    pub fn decode(b: &B, bytes: &[u8]) -> Result<Self, TreError> {
        let mut r = Reader::new(bytes);
        let label = r.bytes32()?.to_vec();
        let u = b.read_g(&mut r)?;
        let rho = r.take(H2_LEN)?.try_into().expect("exact length");
        r.finish()?;
        Ok(Self { label, u, rho })
    }
}

fn xor(a: &[u8; H2_LEN], b: &[u8; H2_LEN]) -> [u8; H2_LEN] {
    let mut out = [0u8; H2_LEN];
    for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = x ^ y;
    }
    out
}

/// Encrypts with a caller-chosen `r0`; see [`tre_encrypt`].
pub fn tre_encrypt_with<B: PairingBackend>(
    b: &B,
    server_pk: &B::G,
    designation: &DesignationPublic<B>,
    payload: &[u8],
    label: &[u8],
    r0: &B::Scalar,
) -> Result<TimeLockedCiphertext<B>, TreError> {
    if !designation.is_consistent(b, server_pk) {
        return Err(TreError::DesignationCheck);
    }
    seal(b, designation, payload, label, r0)
}

/// Encryption without the pairing check of `designation` against the server
/// key, for a designation key the caller generated or has already checked.
pub fn seal<B: PairingBackend>(
    b: &B,
    designation: &DesignationPublic<B>,
    payload: &[u8],
    label: &[u8],
    r0: &B::Scalar,
) -> Result<TimeLockedCiphertext<B>, TreError> {
    let payload: &[u8; H2_LEN] = payload
        .try_into()
        .map_err(|_| TreError::PayloadLength(payload.len()))?;
    let u = b.pow(&b.generator_in(Slot::Left), r0);
    let masked_key = b.pow(&b.restrict(&designation.z_s, Slot::Left), r0);
    let k = b
        .try_pair(&masked_key, &b.hash_to_group(label))
        .ok_or(TreError::Unpairable)?;
    Ok(TimeLockedCiphertext {
        label: label.to_vec(),
        u,
        rho: xor(payload, &b.gt_to_bytes(&k)),
    })
}

pub fn tre_encrypt<B: PairingBackend>(
    b: &B,
    server_pk: &B::G,
    designation: &DesignationPublic<B>,
    payload: &[u8],
    label: &[u8],
    rng: &mut dyn RngCore,
) -> Result<TimeLockedCiphertext<B>, TreError> {
    let r0 = b.random_nonzero(rng);
    tre_encrypt_with(b, server_pk, designation, payload, label, &r0)
}

/// `rho XOR H2(e(U, k_T)^s)`. A wrong `s` or forged `k_T` yields garbage, not an
/// error; callers validate the recovered payload.
pub fn tre_decrypt<B: PairingBackend>(
    b: &B,
    c: &TimeLockedCiphertext<B>,
    tik: &Tik<B>,
    s: &B::Scalar,
) -> Result<[u8; H2_LEN], TreError> {
    if tik.label != c.label {
        return Err(TreError::LabelMismatch {
            ciphertext: String::from_utf8_lossy(&c.label).into_owned(),
            tik: tik.label_str(),
        });
    }
    // e(U, k)^s computed as e(U^s, k): a source-group exponentiation is
    // cheaper than one in G_T.
    let k = b
        .try_pair(&b.pow(&c.u, s), &tik.key)
        .ok_or(TreError::Unpairable)?;
    Ok(xor(&c.rho, &b.gt_to_bytes(&k)))
}
