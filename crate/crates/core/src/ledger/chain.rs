//! Blocks, headers and the proof-of-work target.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group::PairingBackend;
use crate::protocol::{OrdinaryTransaction, RedactableTransaction};
use crate::wire::{put_bytes16, put_u64};

/// Difficulty used when none is configured. The target is `2^256 / 1024`, so
/// one header in 1024 qualifies on average.
pub const DEFAULT_DIFFICULTY: u64 = 0x0400;

/// Upper bound (exclusive) on header digests, read as big-endian integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target(BigUint);

impl Target {
    /// `2^256 / difficulty`. Difficulty 0 yields the unreachable target 0.
    pub fn from_difficulty(difficulty: u64) -> Self {
        if difficulty == 0 {
            return Target(BigUint::default());
        }
        Target((BigUint::from(1u8) << 256u32) / difficulty)
    }

    /// Every digest passes.
    pub fn trivial() -> Self {
        Target(BigUint::from(1u8) << 256u32)
    }

    pub fn from_biguint(value: BigUint) -> Self {
        Target(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn accepts(&self, digest: &[u8; 32]) -> bool {
        BigUint::from_bytes_be(digest) < self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.to_str_radix(16)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        BigUint::parse_bytes(s.as_bytes(), 16).map(Target)
    }
}

impl Default for Target {
    fn default() -> Self {
        Target::from_difficulty(DEFAULT_DIFFICULTY)
    }
}

/// Anything a block can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum LedgerTx<B: PairingBackend> {
    Redactable(RedactableTransaction<B>),
    Ordinary(OrdinaryTransaction<B>),
}

impl<B: PairingBackend> LedgerTx<B> {
    pub fn id(&self) -> &str {
        match self {
            LedgerTx::Redactable(t) => &t.id,
            LedgerTx::Ordinary(t) => &t.id,
        }
    }

    /// Bytes this transaction feeds into `tx_root`: the chameleon digest for
    /// redactable transactions, so rewriting the body leaves the root alone.
    pub fn root_contribution(&self, b: &B) -> Vec<u8> {
        match self {
            LedgerTx::Redactable(t) => {
                let mut out = vec![0x01];
                out.extend(b.encode_g(&t.h));
                out
            }
            LedgerTx::Ordinary(t) => {
                let mut out = vec![0x00];
                out.extend_from_slice(&t.digest);
                out
            }
        }
    }

    pub fn as_redactable(&self) -> Option<&RedactableTransaction<B>> {
        match self {
            LedgerTx::Redactable(t) => Some(t),
            LedgerTx::Ordinary(_) => None,
        }
    }
}

pub fn tx_root<B: PairingBackend>(b: &B, txs: &[LedgerTx<B>]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((txs.len() as u64).to_be_bytes());
    for tx in txs {
        let part = tx.root_contribution(b);
        hasher.update((part.len() as u32).to_be_bytes());
        hasher.update(&part);
    }
    hasher.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub prev_digest: [u8; 32],
    pub tx_root: [u8; 32],
    pub nonce: u64,
    pub target: Target,
    pub timestamp_tick: u64,
}

impl BlockHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(128);
        put_u64(&mut out, self.height);
        out.extend_from_slice(&self.prev_digest);
        out.extend_from_slice(&self.tx_root);
        put_u64(&mut out, self.nonce);
        put_bytes16(&mut out, &self.target.value().to_bytes_be());
        put_u64(&mut out, self.timestamp_tick);
        out
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.encode()).into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block<B: PairingBackend> {
    pub header: BlockHeader,
    pub txs: Vec<LedgerTx<B>>,
}

impl<B: PairingBackend> Block<B> {
    pub fn digest(&self) -> [u8; 32] {
        self.header.digest()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockError {
    #[error("block {height}: parent digest mismatch")]
    Parent { height: u64 },
    #[error("block {height}: expected height {expected}")]
    Height { height: u64, expected: u64 },
    #[error("block {height}: tx_root does not match its transactions")]
    TxRoot { height: u64 },
    #[error("block {height}: header digest is not below the target")]
    Work { height: u64 },
}

/// Structural checks of `block` against its parent (none for genesis).
pub fn validate_block<B: PairingBackend>(
    b: &B,
    block: &Block<B>,
    parent: Option<&Block<B>>,
) -> Result<(), BlockError> {
    let h = &block.header;
    let (expected_height, expected_prev) = match parent {
        Some(p) => (p.header.height + 1, p.digest()),
        None => (0, [0u8; 32]),
    };
    if h.height != expected_height {
        return Err(BlockError::Height {
            height: h.height,
            expected: expected_height,
        });
    }
    if h.prev_digest != expected_prev {
        return Err(BlockError::Parent { height: h.height });
    }
    if h.tx_root != tx_root(b, &block.txs) {
        return Err(BlockError::TxRoot { height: h.height });
    }
    if !h.target.accepts(&h.digest()) {
        return Err(BlockError::Work { height: h.height });
    }
    Ok(())
}

/// Searches nonces `0, 1, ...` for a header below the target. `None` once
/// `max_attempts` nonces have failed.
pub fn solve(mut header: BlockHeader, max_attempts: u64) -> Option<BlockHeader> {
    for nonce in 0..max_attempts {
        header.nonce = nonce;
        if header.target.accepts(&header.digest()) {
            return Some(header);
        }
    }
    None
}

/// Plain-data view of a chain with hex digests, for golden files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDump {
    pub blocks: Vec<BlockDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDump {
    pub height: u64,
    pub digest: String,
    pub prev_digest: String,
    pub tx_root: String,
    pub nonce: u64,
    pub target: String,
    pub timestamp_tick: u64,
    pub txs: Vec<TxDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxDump {
    pub kind: String,
    pub id: String,
    /// Chameleon digest or SHA-256 digest, whichever anchors the entry.
    pub anchor: String,
    pub body: serde_json::Value,
    #[serde(default)]
    pub redaction_log: Vec<crate::protocol::RedactionRecord>,
}

impl ChainDump {
    /// Copy with transaction bodies and redaction logs blanked, leaving only
    /// the parts redaction must never touch.
    pub fn skeleton(&self) -> ChainDump {
        let mut out = self.clone();
        for block in &mut out.blocks {
            for tx in &mut block.txs {
                tx.body = serde_json::Value::Null;
                tx.redaction_log.clear();
            }
        }
        out
    }
}

pub fn dump_chain<B: PairingBackend>(b: &B, chain: &[Block<B>]) -> ChainDump {
    use crate::group::{g_to_hex, scalar_to_hex};
    let blocks = chain
        .iter()
        .map(|block| BlockDump {
            height: block.header.height,
            digest: hex::encode(block.digest()),
            prev_digest: hex::encode(block.header.prev_digest),
            tx_root: hex::encode(block.header.tx_root),
            nonce: block.header.nonce,
            target: block.header.target.to_hex(),
            timestamp_tick: block.header.timestamp_tick,
            txs: block
                .txs
                .iter()
                .map(|tx| match tx {
                    LedgerTx::Redactable(t) => TxDump {
                        kind: "redactable".into(),
                        id: t.id.clone(),
                        anchor: g_to_hex(b, &t.h),
                        body: serde_json::json!({
                            "payload": t.payload,
                            "r": scalar_to_hex(b, &t.r),
                            "sigma": g_to_hex(b, &t.signature.sigma),
                            "signer": t.signer,
                            "redacted_by": t.redacted_by,
                        }),
                        redaction_log: t.redaction_log.clone(),
                    },
                    LedgerTx::Ordinary(t) => TxDump {
                        kind: "ordinary".into(),
                        id: t.id.clone(),
                        anchor: hex::encode(t.digest),
                        body: serde_json::json!({
                            "sender": t.sender,
                            "payload": t.payload,
                            "sigma": g_to_hex(b, &t.signature.sigma),
                        }),
                        redaction_log: Vec::new(),
                    },
                })
                .collect(),
        })
        .collect();
    ChainDump { blocks }
}
