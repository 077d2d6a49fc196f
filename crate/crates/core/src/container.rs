//! The `NCC1` container:
//! `"NCC1" | version u8 | codec u8 | model_len u32 | model | payload_len u64 |
//! payload | crc32`, integers little-endian, CRC over every preceding byte.

use crate::error::{Error, Result};
use crate::wire::Reader;

pub const MAGIC: [u8; 4] = *b"NCC1";
pub const CONTAINER_VERSION: u8 = 1;
const FIXED_BYTES: usize = 4 + 1 + 1 + 4 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CodecId {
    Huffman = 1,
    Arithmetic = 2,
    Rans = 3,
    ContextArithmetic = 4,
    ContextRans = 5,
    BitsBack = 6,
    Jpegish = 7,
}

impl CodecId {
    pub const ALL: [CodecId; 7] = [
        CodecId::Huffman,
        CodecId::Arithmetic,
        CodecId::Rans,
        CodecId::ContextArithmetic,
        CodecId::ContextRans,
        CodecId::BitsBack,
        CodecId::Jpegish,
    ];

    pub fn from_u8(v: u8) -> Result<Self> {
        Self::ALL.into_iter().find(|c| *c as u8 == v).ok_or(Error::UnknownCodec(v))
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Huffman => "huffman",
            CodecId::Arithmetic => "arithmetic",
            CodecId::Rans => "rans",
            CodecId::ContextArithmetic => "context-arithmetic",
            CodecId::ContextRans => "context-rans",
            CodecId::BitsBack => "bits-back",
            CodecId::Jpegish => "jpegish",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_lossless(self) -> bool {
        self != CodecId::Jpegish
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub codec: CodecId,
    pub model: Vec<u8>,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FIXED_BYTES + self.model.len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(CONTAINER_VERSION);
        out.push(self.codec as u8);
        out.extend_from_slice(&(self.model.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.model);
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Checks the CRC, then magic, version and codec id, then the lengths.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < FIXED_BYTES {
            return Err(Error::Format(format!("{} bytes is shorter than any container", bytes.len())));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut r = Reader::new(body);
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u8()?;
        if version != CONTAINER_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let codec = CodecId::from_u8(r.u8()?)?;
        let model = r.chunk()?.to_vec();
        let payload_len = r.u64()?;
        if payload_len != r.remaining() as u64 {
            return Err(Error::Format(format!("payload length {payload_len}, {} bytes present", r.remaining())));
        }
        let payload = r.take(payload_len as usize)?.to_vec();
        Ok(Self { codec, model, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Container {
        Container { codec: CodecId::Rans, model: vec![1, 2, 3], payload: vec![9; 5] }
    }

    #[test]
    fn golden_layout() {
        let b = sample().to_bytes();
        let mut want = b"NCC1".to_vec();
        want.extend_from_slice(&[1, 3, 3, 0, 0, 0, 1, 2, 3, 5, 0, 0, 0, 0, 0, 0, 0, 9, 9, 9, 9, 9]);
        want.extend_from_slice(&crc32fast::hash(&want).to_le_bytes());
        assert_eq!(b, want);
        assert_eq!(Container::from_bytes(&b).unwrap(), sample());
    }

    fn reseal(mut b: Vec<u8>) -> Vec<u8> {
        let n = b.len() - 4;
        let crc = crc32fast::hash(&b[..n]);
        b[n..].copy_from_slice(&crc.to_le_bytes());
        b
    }

    #[test]
    fn header_rejections() {
        let b = sample().to_bytes();
        let mut v = b.clone();
        v[4] = 2;
        assert_eq!(Container::from_bytes(&reseal(v)), Err(Error::UnsupportedVersion(2)));
        let mut v = b.clone();
        v[5] = 99;
        assert_eq!(Container::from_bytes(&reseal(v)), Err(Error::UnknownCodec(99)));
        let mut v = b.clone();
        v[0] = b'X';
        assert!(matches!(Container::from_bytes(&reseal(v)), Err(Error::Format(_))));
        let mut v = b.clone();
        v[14] = 6;
        assert!(matches!(Container::from_bytes(&reseal(v)), Err(Error::Format(_))));
        assert!(matches!(Container::from_bytes(&b[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn codec_names_roundtrip() {
        for c in CodecId::ALL {
            assert_eq!(CodecId::from_name(c.name()), Some(c));
            assert_eq!(CodecId::from_u8(c as u8).unwrap(), c);
        }
        assert_eq!(CodecId::from_u8(0), Err(Error::UnknownCodec(0)));
    }

    proptest! {
        #[test]
        fn any_single_byte_change_fails_checksum(pos in 0usize..26, flip in 1u8..=255) {
            let mut b = sample().to_bytes();
            let n = b.len();
            b[pos % n] ^= flip;
            let err = Container::from_bytes(&b).unwrap_err();
            prop_assert!(matches!(err, Error::Checksum { .. }), "{:?}", err);
        }
    }
}
