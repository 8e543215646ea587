//! Transaction payloads and their canonical byte layout.
//!
//! `encode_message(ID, tx)`:
//!
//! ```text
//! u32 len(ID)    | ID bytes
//! u32 len(payee) | payee bytes (UTF-8)
//! u64 amount     (big-endian, currency units)
//! u64 due_tick   (big-endian)
//! u32 len(memo)  | memo bytes
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group::GroupError;
use crate::wire::{put_bytes32, put_u64, Reader};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TxPayload {
    pub payee: String,
    pub amount: u64,
    pub due_tick: u64,
    #[serde(default, with = "hex_bytes")]
    pub memo: Vec<u8>,
}

impl TxPayload {
    pub fn new(payee: impl Into<String>, amount: u64, due_tick: u64) -> Self {
        Self {
            payee: payee.into(),
            amount,
            due_tick,
            memo: Vec::new(),
        }
    }

    pub fn with_memo(mut self, memo: impl Into<Vec<u8>>) -> Self {
        self.memo = memo.into();
        self
    }
}

pub fn encode_message(id: &str, payload: &TxPayload) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + id.len() + payload.payee.len() + payload.memo.len());
    put_bytes32(&mut out, id.as_bytes());
    put_bytes32(&mut out, payload.payee.as_bytes());
    put_u64(&mut out, payload.amount);
    put_u64(&mut out, payload.due_tick);
    put_bytes32(&mut out, &payload.memo);
    out
}

pub fn decode_message(bytes: &[u8]) -> Result<(String, TxPayload), GroupError> {
    let utf8 =
        |b: &[u8]| String::from_utf8(b.to_vec()).map_err(|e| GroupError::Malformed(e.to_string()));
    let mut r = Reader::new(bytes);
    let id = utf8(r.bytes32()?)?;
    let payee = utf8(r.bytes32()?)?;
    let amount = r.u64()?;
    let due_tick = r.u64()?;
    let memo = r.bytes32()?.to_vec();
    r.finish()?;
    Ok((
        id,
        TxPayload {
            payee,
            amount,
            due_tick,
            memo,
        },
    ))
}

/// SHA-256 of the canonical message; used for the redaction log and the
/// immutable transaction path.
pub fn message_digest(id: &str, payload: &TxPayload) -> [u8; 32] {
    Sha256::digest(encode_message(id, payload)).into()
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fixed() {
        let p = TxPayload::new("shop", 0x0102, 7).with_memo(b"m".to_vec());
        let bytes = encode_message("id", &p);
        let expected: Vec<u8> = [
            &[0, 0, 0, 2][..],
            b"id",
            &[0, 0, 0, 4],
            b"shop",
            &[0, 0, 0, 0, 0, 0, 1, 2],
            &[0, 0, 0, 0, 0, 0, 0, 7],
            &[0, 0, 0, 1],
            b"m",
        ]
        .concat();
        assert_eq!(bytes, expected);
        assert_eq!(decode_message(&bytes).unwrap(), ("id".to_string(), p));
    }

    #[test]
    fn field_boundaries_are_unambiguous() {
        // Same concatenated text, different split between id and payee.
        let a = encode_message("ab", &TxPayload::new("c", 1, 1));
        let b = encode_message("a", &TxPayload::new("bc", 1, 1));
        assert_ne!(a, b);
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode_message("x", &TxPayload::new("y", 1, 2));
        bytes.push(0);
        assert!(decode_message(&bytes).is_err());
    }
}
