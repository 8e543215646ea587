//! The deferred-payment protocol: four roles (CA, user, provider, time
//! server) composed from the signature, chameleon-hash and timed-release
//! primitives.
//!
//! Lifecycle of a deferred transaction:
//!
//! 1. the user chameleon-hashes `(ID, tx)`, signs the digest and time-locks
//!    the chameleon trapdoor to the due tick ([`tr_creat`]); a batch of these
//!    is aggregated into one signature ([`make_bundle`]);
//! 2. at the due tick the server releases the time key and auxiliary data for
//!    the members to be settled ([`ext`]);
//! 3. the designated provider checks the members locally and recovers the
//!    trapdoor ([`released_dec`]), then rewrites the transaction without
//!    changing its digest ([`adapt`]);
//! 4. miners accept the rewrite after [`verify`].

mod batch;
pub mod export;
mod tx;

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use batch::{verify_redactions_batch, RedactionCheck};
pub use tx::{decode_message, encode_message, message_digest, TxPayload};

use crate::chameleon::{self, ChameleonError, TrapdoorKeyPair};
use crate::exec::Exec;
use crate::group::{GroupError, PairingBackend, ScalarField, H2_LEN};
use crate::lvs::{
    self, AggregateSignature, AuxiliaryInfo, LvsError, PowerKey, Signature, SignerKeyPair,
};
use crate::tre::{
    self, DesignationKey, DesignationPublic, ServerKeyPair, Tik, TimeLockedCiphertext, TreError,
};

/// Domain tag standing in for the hash key `hk` shared by all parties.
pub const HASH_KEY: &str = "epass/v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Signature(#[from] LvsError),
    #[error(transparent)]
    Chameleon(#[from] ChameleonError),
    #[error(transparent)]
    TimedRelease(#[from] TreError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("a bundle needs at least one transaction")]
    EmptyBundle,
    #[error("bundle of {len} exceeds the aggregation bound {bound}")]
    BoundExceeded { len: usize, bound: usize },
}

/// Output of [`setup`]. The master secret stays with the CA.
#[derive(Debug, Clone)]
pub struct SystemParams<B: PairingBackend> {
    pub backend: B,
    pub bound: usize,
    pub hk: String,
    master: SignerKeyPair<B>,
}

impl<B: PairingBackend> SystemParams<B> {
    pub fn mpk(&self) -> &PowerKey<B> {
        self.master.public()
    }

    pub fn msk(&self) -> &B::Scalar {
        self.master.secret()
    }
}

pub fn setup<B: PairingBackend>(
    backend: B,
    bound: usize,
    rng: &mut dyn RngCore,
) -> Result<SystemParams<B>, ProtocolError> {
    let master = lvs::keygen(&backend, bound, rng)?;
    Ok(SystemParams {
        backend,
        bound,
        hk: HASH_KEY.to_string(),
        master,
    })
}

pub fn setup_with_secret<B: PairingBackend>(
    backend: B,
    bound: usize,
    msk: B::Scalar,
) -> Result<SystemParams<B>, ProtocolError> {
    let master = lvs::keygen_with_secret(&backend, msk, bound)?;
    Ok(SystemParams {
        backend,
        bound,
        hk: HASH_KEY.to_string(),
        master,
    })
}

/// `(hk, g^alpha)`. The remaining component of the local verification key has
/// no definition to implement; the user's power chain and `hk` serve instead.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalKey<B: PairingBackend> {
    pub hk: String,
    pub g_alpha: B::G,
}

#[derive(Debug, Clone)]
pub struct UserKeys<B: PairingBackend> {
    pub id: String,
    pub signer: SignerKeyPair<B>,
    pub trapdoor: TrapdoorKeyPair<B>,
    pub designation: DesignationKey<B>,
    pub local: LocalKey<B>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPublic<B: PairingBackend> {
    pub id: String,
    pub pk_beta: PowerKey<B>,
    pub pk_h: B::G,
    pub pk_tre: DesignationPublic<B>,
    pub pk_local: LocalKey<B>,
}

impl<B: PairingBackend> UserKeys<B> {
    pub fn public(&self) -> UserPublic<B> {
        UserPublic {
            id: self.id.clone(),
            pk_beta: self.signer.public().clone(),
            pk_h: self.trapdoor.public().clone(),
            pk_tre: self.designation.public.clone(),
            pk_local: self.local.clone(),
        }
    }
}

pub fn user_keygen<B: PairingBackend>(
    params: &SystemParams<B>,
    server_pk: &B::G,
    id: impl Into<String>,
    rng: &mut dyn RngCore,
) -> Result<UserKeys<B>, ProtocolError> {
    let b = &params.backend;
    Ok(UserKeys {
        id: id.into(),
        signer: lvs::keygen(b, params.bound, rng)?,
        trapdoor: chameleon::ch_keygen(b, rng),
        designation: tre::designation_keygen(b, server_pk, rng),
        local: LocalKey {
            hk: params.hk.clone(),
            g_alpha: params.mpk().base().clone(),
        },
    })
}

#[derive(Debug, Clone)]
pub struct ProviderKeys<B: PairingBackend> {
    pub id: String,
    pub signer: SignerKeyPair<B>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderPublic<B: PairingBackend> {
    pub id: String,
    pub pk: PowerKey<B>,
}

impl<B: PairingBackend> ProviderKeys<B> {
    pub fn public(&self) -> ProviderPublic<B> {
        ProviderPublic {
            id: self.id.clone(),
            pk: self.signer.public().clone(),
        }
    }
}

pub fn provider_keygen<B: PairingBackend>(
    params: &SystemParams<B>,
    id: impl Into<String>,
    rng: &mut dyn RngCore,
) -> Result<ProviderKeys<B>, ProtocolError> {
    Ok(ProviderKeys {
        id: id.into(),
        signer: lvs::keygen(&params.backend, params.bound, rng)?,
    })
}

pub fn server_keygen<B: PairingBackend>(
    params: &SystemParams<B>,
    rng: &mut dyn RngCore,
) -> ServerKeyPair<B> {
    tre::server_keygen(&params.backend, rng)
}

/// Off-chain record of which provider received which user's designation
/// secret.
#[derive(Debug, Clone, Default)]
pub struct DesignationRegistry {
    deliveries: BTreeMap<String, Vec<String>>,
}

impl DesignationRegistry {
    pub fn providers_for(&self, user: &str) -> &[String] {
        self.deliveries.get(user).map_or(&[], Vec::as_slice)
    }

    pub fn is_designated(&self, user: &str, provider: &str) -> bool {
        self.providers_for(user).iter().any(|p| p == provider)
    }
}

/// Hands the user's designation secret to `provider_id`. Designating a second
/// provider is allowed but logged.
pub fn designate_provider<B: PairingBackend>(
    user: &UserKeys<B>,
    provider_id: &str,
    registry: &mut DesignationRegistry,
) -> DesignationKey<B> {
    let list = registry.deliveries.entry(user.id.clone()).or_default();
    if !list.is_empty() && !list.iter().any(|p| p == provider_id) {
        log::warn!(
            "user {} designates {provider_id} in addition to {:?}",
            user.id,
            list
        );
    }
    if !list.iter().any(|p| p == provider_id) {
        list.push(provider_id.to_string());
    }
    user.designation.clone()
}

/// The scalar a signature binds: `H(encode(h))` for chameleon digest `h`.
pub fn scalarize<B: PairingBackend>(b: &B, h: &B::G) -> B::Scalar {
    b.hash_to_scalar(&b.encode_g(h))
}

/// Trapdoor as an `H2`-length payload: big-endian, left-padded with zeros.
pub fn encode_trapdoor<B: PairingBackend>(b: &B, sk_h: &B::Scalar) -> [u8; H2_LEN] {
    let bytes = sk_h.to_be_bytes();
    debug_assert!(bytes.len() <= H2_LEN && b.scalar_len() == bytes.len());
    let mut out = [0u8; H2_LEN];
    out[H2_LEN - bytes.len()..].copy_from_slice(&bytes);
    out
}

pub fn decode_trapdoor<B: PairingBackend>(b: &B, payload: &[u8; H2_LEN]) -> Option<B::Scalar> {
    let width = b.scalar_len();
    let (pad, body) = payload.split_at(H2_LEN - width);
    if pad.iter().any(|&x| x != 0) {
        return None;
    }
    b.scalar_from_be_bytes(body).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignerRole {
    User,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionRecord {
    #[serde(with = "hex32")]
    pub old_digest: [u8; 32],
    #[serde(with = "hex32")]
    pub new_digest: [u8; 32],
    pub provider: String,
    pub tick: u64,
}

/// `(ID, tx_ID, h, r, sigma_ID, C)` plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RedactableTransaction<B: PairingBackend> {
    pub id: String,
    pub owner: String,
    pub payload: TxPayload,
    pub h: B::G,
    pub r: B::Scalar,
    pub signature: Signature<B>,
    pub signer: SignerRole,
    /// Provider whose key signed the current content, once redacted.
    pub redacted_by: Option<String>,
    pub ciphertext: TimeLockedCiphertext<B>,
    pub redaction_log: Vec<RedactionRecord>,
}

impl<B: PairingBackend> RedactableTransaction<B> {
    pub fn message(&self) -> Vec<u8> {
        encode_message(&self.id, &self.payload)
    }

    pub fn is_redacted(&self) -> bool {
        self.signer == SignerRole::Provider
    }

    /// Installs a verified rewrite; `h` is untouched.
    pub fn install_redaction(
        &mut self,
        new_payload: TxPayload,
        r_new: B::Scalar,
        sigma_new: Signature<B>,
        provider: &str,
        tick: u64,
    ) {
        self.redaction_log.push(RedactionRecord {
            old_digest: message_digest(&self.id, &self.payload),
            new_digest: message_digest(&self.id, &new_payload),
            provider: provider.to_string(),
            tick,
        });
        self.payload = new_payload;
        self.r = r_new;
        self.signature = sigma_new;
        self.signer = SignerRole::Provider;
        self.redacted_by = Some(provider.to_string());
    }
}

/// `(h, r, sigma_ID, C)` from one run of transaction creation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrCreated<B: PairingBackend> {
    pub h: B::G,
    pub r: B::Scalar,
    pub signature: Signature<B>,
    pub ciphertext: TimeLockedCiphertext<B>,
}

pub fn tr_creat<B: PairingBackend>(
    params: &SystemParams<B>,
    user: &UserKeys<B>,
    server_pk: &B::G,
    id: &str,
    payload: &TxPayload,
    label: &[u8],
    rng: &mut dyn RngCore,
) -> Result<TrCreated<B>, ProtocolError> {
    let b = &params.backend;
    let r = b.random_scalar(rng);
    let h = chameleon::ch_hash(b, user.trapdoor.public(), &encode_message(id, payload), &r);
    let signature = lvs::sign(b, user.signer.secret(), &scalarize(b, &h))?;
    // The designation key is the user's own and was derived from this server
    // key, so release builds skip the pairing check.
    debug_assert!(user.designation.public.is_consistent(b, server_pk));
    let r0 = b.random_nonzero(rng);
    let ciphertext = tre::seal(
        b,
        &user.designation.public,
        &encode_trapdoor(b, user.trapdoor.secret()),
        label,
        &r0,
    )?;
    Ok(TrCreated {
        h,
        r,
        signature,
        ciphertext,
    })
}

/// A user's deferred transactions with one aggregate signature over their
/// scalarized digests (member `i` is transaction `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct DeferredBundle<B: PairingBackend> {
    pub owner: String,
    pub transactions: Vec<RedactableTransaction<B>>,
    pub aggregate: AggregateSignature<B>,
}

impl<B: PairingBackend> DeferredBundle<B> {
    /// Wire bytes of what the user broadcasts besides the plaintext records:
    /// every ciphertext plus the aggregate element.
    pub fn communication_bytes(&self, b: &B) -> usize {
        let ciphertexts: usize = self
            .transactions
            .iter()
            .map(|t| t.ciphertext.encode(b).len())
            .sum();
        ciphertexts + 2 + b.encode_g(&self.aggregate.sigma_hat).len()
    }
}

pub fn make_bundle<B: PairingBackend>(
    params: &SystemParams<B>,
    user: &UserKeys<B>,
    server_pk: &B::G,
    items: &[(String, TxPayload)],
    label: &[u8],
    rng: &mut dyn RngCore,
    exec: Exec,
) -> Result<DeferredBundle<B>, ProtocolError> {
    if items.is_empty() {
        return Err(ProtocolError::EmptyBundle);
    }
    if items.len() > params.bound {
        return Err(ProtocolError::BoundExceeded {
            len: items.len(),
            bound: params.bound,
        });
    }
    // One seed per item, drawn up front, keeps output independent of the
    // execution schedule.
    let seeds: Vec<[u8; 32]> = items
        .iter()
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        })
        .collect();
    let indexed: Vec<(&(String, TxPayload), [u8; 32])> = items.iter().zip(seeds).collect();
    let created = exec.map(&indexed, |((id, payload), seed)| {
        tr_creat(
            params,
            user,
            server_pk,
            id,
            payload,
            label,
            &mut ChaCha20Rng::from_seed(*seed),
        )
    });
    let created = created.into_iter().collect::<Result<Vec<_>, _>>()?;
    let b = &params.backend;
    let signatures: Vec<Signature<B>> = created.iter().map(|c| c.signature.clone()).collect();
    let aggregate = lvs::aggregate(b, user.signer.public(), &signatures, exec)?;
    let transactions = items
        .iter()
        .zip(created)
        .map(|((id, payload), c)| RedactableTransaction {
            id: id.clone(),
            owner: user.id.clone(),
            payload: payload.clone(),
            h: c.h,
            r: c.r,
            signature: c.signature,
            signer: SignerRole::User,
            redacted_by: None,
            ciphertext: c.ciphertext,
            redaction_log: Vec::new(),
        })
        .collect();
    Ok(DeferredBundle {
        owner: user.id.clone(),
        transactions,
        aggregate,
    })
}

/// Server side: time key for `label` plus auxiliary information for the
/// bundle members in `subset`.
pub fn ext<B: PairingBackend>(
    params: &SystemParams<B>,
    server: &ServerKeyPair<B>,
    user: &UserPublic<B>,
    bundle: &DeferredBundle<B>,
    subset: &[usize],
    label: &[u8],
) -> Result<(Tik<B>, AuxiliaryInfo<B>), ProtocolError> {
    let b = &params.backend;
    let tik = tre::extract_tik(b, server.secret(), label);
    let aux = lvs::derive_aux(b, &user.pk_beta, &bundle.aggregate.member_hashes, subset)?;
    Ok((tik, aux))
}

/// [`ext`] for every member of the bundle: one time key and the singleton
/// auxiliary information of each member, in member order.
pub fn ext_members<B: PairingBackend>(
    params: &SystemParams<B>,
    server: &ServerKeyPair<B>,
    user: &UserPublic<B>,
    bundle: &DeferredBundle<B>,
    label: &[u8],
) -> Result<(Tik<B>, Vec<AuxiliaryInfo<B>>), ProtocolError> {
    let b = &params.backend;
    let tik = tre::extract_tik(b, server.secret(), label);
    let aux = lvs::derive_member_aux(b, &user.pk_beta, &bundle.aggregate.member_hashes)?;
    Ok((tik, aux))
}

/// Why timed-release decryption returned nothing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReleaseError {
    #[error("subset-check: aggregate does not verify for the selected members")]
    SubsetCheck,
    #[error("aux-check: auxiliary chain is inconsistent with the user key")]
    AuxCheck,
    #[error("label-mismatch: {0}")]
    LabelMismatch(String),
    #[error("trapdoor-mismatch: decrypted value does not open the user's chameleon key")]
    TrapdoorMismatch,
}

impl ReleaseError {
    pub fn code(&self) -> &'static str {
        match self {
            ReleaseError::SubsetCheck => "subset-check",
            ReleaseError::AuxCheck => "aux-check",
            ReleaseError::LabelMismatch(_) => "label-mismatch",
            ReleaseError::TrapdoorMismatch => "trapdoor-mismatch",
        }
    }
}

/// Provider side: locally verifies the members named by `aux` against the
/// bundle's aggregate, then opens `ciphertext` with the time key and the
/// designation secret `s`. Returns the chameleon trapdoor only if it matches
/// the user's public chameleon key.
pub fn released_dec<B: PairingBackend>(
    params: &SystemParams<B>,
    user: &UserPublic<B>,
    bundle: &DeferredBundle<B>,
    aux: &AuxiliaryInfo<B>,
    ciphertext: &TimeLockedCiphertext<B>,
    tik: &Tik<B>,
    s: &B::Scalar,
) -> Result<B::Scalar, ReleaseError> {
    let b = &params.backend;
    let mut subset_hashes = Vec::with_capacity(aux.subset.len());
    for &i in &aux.subset {
        let tx = bundle
            .transactions
            .get(i)
            .ok_or(ReleaseError::SubsetCheck)?;
        let h = chameleon::ch_hash(b, &user.pk_h, &tx.message(), &tx.r);
        subset_hashes.push(scalarize(b, &h));
    }
    if !lvs::verify_subset(
        b,
        &user.pk_beta,
        &bundle.aggregate.sigma_hat,
        aux,
        &subset_hashes,
    ) {
        // Only the failure path pays for telling the two checks apart.
        return Err(if lvs::check_aux_chain(b, &user.pk_beta, aux) {
            ReleaseError::SubsetCheck
        } else {
            ReleaseError::AuxCheck
        });
    }
    let payload = match tre::tre_decrypt(b, ciphertext, tik, s) {
        Ok(p) => p,
        Err(TreError::LabelMismatch { ciphertext, tik }) => {
            return Err(ReleaseError::LabelMismatch(format!(
                "ciphertext locked to {ciphertext:?}, key for {tik:?}"
            )))
        }
        Err(_) => return Err(ReleaseError::TrapdoorMismatch),
    };
    let sk_h = decode_trapdoor(b, &payload).ok_or(ReleaseError::TrapdoorMismatch)?;
    if chameleon::trapdoor_public(b, &sk_h) != user.pk_h {
        return Err(ReleaseError::TrapdoorMismatch);
    }
    Ok(sk_h)
}

/// Provider rewrite: new randomness opening the unchanged digest to the new
/// payload, and a provider signature on the digest.
#[allow(clippy::too_many_arguments)]
pub fn adapt<B: PairingBackend>(
    params: &SystemParams<B>,
    provider: &ProviderKeys<B>,
    sk_h: &B::Scalar,
    id: &str,
    old_payload: &TxPayload,
    h: &B::G,
    r: &B::Scalar,
    new_payload: &TxPayload,
) -> Result<(B::Scalar, Signature<B>), ProtocolError> {
    let b = &params.backend;
    let r_new = chameleon::ch_adapt(
        b,
        sk_h,
        &encode_message(id, old_payload),
        h,
        r,
        &encode_message(id, new_payload),
    )?;
    let sigma = lvs::sign(b, provider.signer.secret(), &scalarize(b, h))?;
    Ok((r_new, sigma))
}

/// Miner-side check of a redactable transaction. Only public values are
/// involved, so it takes the backend rather than the CA's parameters.
///
/// The individual signature is checked against the user's key before
/// redaction and against the provider's key after (the third condition of the
/// verification algorithm writes the key as `g^i`; it is read as the current
/// signer's `g^{sk}`). When `aggregate` is supplied its full check must pass
/// and the transaction's digest must be one of its members.
#[allow(clippy::too_many_arguments)]
pub fn verify<B: PairingBackend>(
    b: &B,
    user: &UserPublic<B>,
    provider: Option<&ProviderPublic<B>>,
    id: &str,
    payload: &TxPayload,
    h: &B::G,
    r: &B::Scalar,
    signature: &Signature<B>,
    signer: SignerRole,
    aggregate: Option<&AggregateSignature<B>>,
) -> bool {
    if !chameleon::ch_verify(b, &user.pk_h, &encode_message(id, payload), h, r) {
        return false;
    }
    let bound_scalar = scalarize(b, h);
    if signature.h != bound_scalar {
        return false;
    }
    if let Some(agg) = aggregate {
        if !agg.member_hashes.contains(&bound_scalar)
            || !lvs::verify_aggregate_full(b, &user.pk_beta, agg)
        {
            return false;
        }
    }
    let key = match (signer, provider) {
        (SignerRole::User, _) => &user.pk_beta,
        (SignerRole::Provider, Some(p)) => &p.pk,
        (SignerRole::Provider, None) => return false,
    };
    lvs::verify_single(b, key, &signature.sigma, &signature.h)
}

/// [`verify`] on a stored transaction.
pub fn verify_transaction<B: PairingBackend>(
    b: &B,
    user: &UserPublic<B>,
    provider: Option<&ProviderPublic<B>>,
    tx: &RedactableTransaction<B>,
    aggregate: Option<&AggregateSignature<B>>,
) -> bool {
    verify(
        b,
        user,
        provider,
        &tx.id,
        &tx.payload,
        &tx.h,
        &tx.r,
        &tx.signature,
        tx.signer,
        aggregate,
    )
}

/// Immutable transaction: plain SHA-256 digest and the same signature scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinaryTransaction<B: PairingBackend> {
    pub id: String,
    pub sender: String,
    pub payload: TxPayload,
    pub digest: [u8; 32],
    pub signature: Signature<B>,
}

pub fn make_ordinary<B: PairingBackend>(
    b: &B,
    sender: &str,
    signer: &SignerKeyPair<B>,
    id: &str,
    payload: &TxPayload,
) -> Result<OrdinaryTransaction<B>, ProtocolError> {
    let digest = message_digest(id, payload);
    let signature = lvs::sign(b, signer.secret(), &b.hash_to_scalar(&digest))?;
    Ok(OrdinaryTransaction {
        id: id.to_string(),
        sender: sender.to_string(),
        payload: payload.clone(),
        digest,
        signature,
    })
}

pub fn verify_ordinary<B: PairingBackend>(
    b: &B,
    tx: &OrdinaryTransaction<B>,
    sender_pk: &PowerKey<B>,
) -> bool {
    tx.digest == message_digest(&tx.id, &tx.payload)
        && tx.signature.h == b.hash_to_scalar(&tx.digest)
        && lvs::verify_single(b, sender_pk, &tx.signature.sigma, &tx.signature.h)
}

pub(crate) mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected 32 bytes"))
    }
}

#[cfg(test)]
mod tests;
