//! Minimal length-prefixed binary framing used by the canonical encodings.

use crate::group::GroupError;

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], GroupError> {
        if self.buf.len() < n {
            return Err(GroupError::Malformed(format!(
                "truncated input: wanted {n} bytes, {} left",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, GroupError> {
        Ok(self.take(1)?[0])
    }

    pub fn peek_u8(&self) -> Result<u8, GroupError> {
        self.buf
            .first()
            .copied()
            .ok_or_else(|| GroupError::Malformed("truncated input".into()))
    }

    pub fn u16(&mut self) -> Result<u16, GroupError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32, GroupError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, GroupError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().expect("8 bytes")))
    }

    /// `u32` length followed by that many bytes.
    pub fn bytes32(&mut self) -> Result<&'a [u8], GroupError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// `u16` length followed by that many bytes.
    pub fn bytes16(&mut self) -> Result<&'a [u8], GroupError> {
        let n = self.u16()? as usize;
        self.take(n)
    }

    pub fn finish(self) -> Result<(), GroupError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(GroupError::Malformed(format!(
                "{} trailing bytes",
                self.buf.len()
            )))
        }
    }
}

pub fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_bytes32(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(
        out,
        u32::try_from(bytes.len()).expect("field longer than 4 GiB"),
    );
    out.extend_from_slice(bytes);
}

pub fn put_bytes16(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u16(
        out,
        u16::try_from(bytes.len()).expect("field longer than 64 KiB"),
    );
    out.extend_from_slice(bytes);
}
