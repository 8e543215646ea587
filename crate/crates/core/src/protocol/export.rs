//! JSON interchange for public keys, bundles and time-key schedules.
//!
//! Group elements and scalars are hex strings of their canonical encodings,
//! so a document names its backend implicitly through the encoding tags.
//! Secret material is only exported through [`TestSecrets`], which always
//! carries `"test_only": true`.

use serde::{Deserialize, Serialize};

use super::{
    DeferredBundle, LocalKey, ProtocolError, RedactableTransaction, RedactionRecord, SignerRole,
    TxPayload, UserKeys, UserPublic,
};
use crate::group::{
    g_from_hex, g_to_hex, scalar_from_hex, scalar_to_hex, GroupError, PairingBackend,
};
use crate::lvs::{AggregateSignature, PowerKey, Signature};
use crate::tre::{DesignationPublic, Tik, TimeLockedCiphertext};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserPublicJson {
    pub id: String,
    pub pk_beta: Vec<String>,
    pub pk_h: String,
    pub g_s: String,
    pub z_s: String,
    pub hk: String,
    pub g_alpha: String,
}

impl UserPublicJson {
    pub fn from_public<B: PairingBackend>(b: &B, pk: &UserPublic<B>) -> Self {
        Self {
            id: pk.id.clone(),
            pk_beta: pk.pk_beta.powers().iter().map(|x| g_to_hex(b, x)).collect(),
            pk_h: g_to_hex(b, &pk.pk_h),
            g_s: g_to_hex(b, &pk.pk_tre.g_s),
            z_s: g_to_hex(b, &pk.pk_tre.z_s),
            hk: pk.pk_local.hk.clone(),
            g_alpha: g_to_hex(b, &pk.pk_local.g_alpha),
        }
    }

    pub fn to_public<B: PairingBackend>(&self, b: &B) -> Result<UserPublic<B>, ProtocolError> {
        let powers = self
            .pk_beta
            .iter()
            .map(|x| g_from_hex(b, x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(UserPublic {
            id: self.id.clone(),
            pk_beta: PowerKey::from_powers(powers)?,
            pk_h: g_from_hex(b, &self.pk_h)?,
            pk_tre: DesignationPublic {
                g_s: g_from_hex(b, &self.g_s)?,
                z_s: g_from_hex(b, &self.z_s)?,
            },
            pk_local: LocalKey {
                hk: self.hk.clone(),
                g_alpha: g_from_hex(b, &self.g_alpha)?,
            },
        })
    }
}

/// A user's secrets, for reproducing test runs only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSecrets {
    pub test_only: bool,
    pub id: String,
    pub beta: String,
    pub sk_h: String,
    pub s: String,
}

impl TestSecrets {
    pub fn from_keys<B: PairingBackend>(b: &B, keys: &UserKeys<B>) -> Self {
        Self {
            test_only: true,
            id: keys.id.clone(),
            beta: scalar_to_hex(b, keys.signer.secret()),
            sk_h: scalar_to_hex(b, keys.trapdoor.secret()),
            s: scalar_to_hex(b, &keys.designation.s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionJson {
    pub id: String,
    pub owner: String,
    pub payload: TxPayload,
    pub h: String,
    pub r: String,
    pub sigma: String,
    pub signed_scalar: String,
    pub signer: SignerRole,
    #[serde(default)]
    pub redacted_by: Option<String>,
    pub ciphertext: String,
    #[serde(default)]
    pub redaction_log: Vec<RedactionRecord>,
}

impl TransactionJson {
    pub fn from_tx<B: PairingBackend>(b: &B, tx: &RedactableTransaction<B>) -> Self {
        Self {
            id: tx.id.clone(),
            owner: tx.owner.clone(),
            payload: tx.payload.clone(),
            h: g_to_hex(b, &tx.h),
            r: scalar_to_hex(b, &tx.r),
            sigma: g_to_hex(b, &tx.signature.sigma),
            signed_scalar: scalar_to_hex(b, &tx.signature.h),
            signer: tx.signer,
            redacted_by: tx.redacted_by.clone(),
            ciphertext: hex::encode(tx.ciphertext.encode(b)),
            redaction_log: tx.redaction_log.clone(),
        }
    }

    pub fn to_tx<B: PairingBackend>(
        &self,
        b: &B,
    ) -> Result<RedactableTransaction<B>, ProtocolError> {
        let ct = hex::decode(&self.ciphertext).map_err(|e| GroupError::Malformed(e.to_string()))?;
        Ok(RedactableTransaction {
            id: self.id.clone(),
            owner: self.owner.clone(),
            payload: self.payload.clone(),
            h: g_from_hex(b, &self.h)?,
            r: scalar_from_hex(b, &self.r)?,
            signature: Signature {
                sigma: g_from_hex(b, &self.sigma)?,
                h: scalar_from_hex(b, &self.signed_scalar)?,
            },
            signer: self.signer,
            redacted_by: self.redacted_by.clone(),
            ciphertext: TimeLockedCiphertext::decode(b, &ct)?,
            redaction_log: self.redaction_log.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleJson {
    pub owner: String,
    pub sigma_hat: String,
    pub member_hashes: Vec<String>,
    pub transactions: Vec<TransactionJson>,
}

impl BundleJson {
    pub fn from_bundle<B: PairingBackend>(b: &B, bundle: &DeferredBundle<B>) -> Self {
        Self {
            owner: bundle.owner.clone(),
            sigma_hat: g_to_hex(b, &bundle.aggregate.sigma_hat),
            member_hashes: bundle
                .aggregate
                .member_hashes
                .iter()
                .map(|h| scalar_to_hex(b, h))
                .collect(),
            transactions: bundle
                .transactions
                .iter()
                .map(|t| TransactionJson::from_tx(b, t))
                .collect(),
        }
    }

    pub fn to_bundle<B: PairingBackend>(&self, b: &B) -> Result<DeferredBundle<B>, ProtocolError> {
        Ok(DeferredBundle {
            owner: self.owner.clone(),
            transactions: self
                .transactions
                .iter()
                .map(|t| t.to_tx(b))
                .collect::<Result<_, _>>()?,
            aggregate: AggregateSignature {
                sigma_hat: g_from_hex(b, &self.sigma_hat)?,
                member_hashes: self
                    .member_hashes
                    .iter()
                    .map(|h| scalar_from_hex(b, h))
                    .collect::<Result<_, _>>()?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TikJson {
    pub label: String,
    pub key: String,
}

/// Published time keys in release order.
pub fn tik_schedule_to_json<B: PairingBackend>(b: &B, tiks: &[Tik<B>]) -> Vec<TikJson> {
    tiks.iter()
        .map(|t| TikJson {
            label: t.label_str(),
            key: g_to_hex(b, &t.key),
        })
        .collect()
}

pub fn tik_schedule_from_json<B: PairingBackend>(
    b: &B,
    items: &[TikJson],
) -> Result<Vec<Tik<B>>, GroupError> {
    items
        .iter()
        .map(|t| {
            Ok(Tik {
                label: t.label.clone().into_bytes(),
                key: g_from_hex(b, &t.key)?,
            })
        })
        .collect()
}
