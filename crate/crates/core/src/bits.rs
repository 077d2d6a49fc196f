//! Bit sequences and MSB-first bit I/O.

use std::fmt;

/// An ordered, growable sequence of bits packed MSB-first into bytes.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitVector {
    bytes: Vec<u8>,
    len: usize,
}

impl BitVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self { bytes: Vec::with_capacity(bits.div_ceil(8)), len: 0 }
    }

    /// Wraps `bytes`, keeping only the first `len` bits.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "bit length exceeds byte buffer");
        let mut bytes = bytes[..len.div_ceil(8)].to_vec();
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        Self { bytes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        for i in (0..count).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    pub fn extend_from(&mut self, other: &BitVector) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    /// Packed bytes; the final byte is zero-padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut v = BitVector::new();
        for b in iter {
            v.push(b);
        }
        v
    }
}

/// Sequential reader over a [`BitVector`].
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a BitVector,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitVector) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn read(&mut self) -> Option<bool> {
        let bit = self.bits.get(self.pos)?;
        self.pos += 1;
        Some(bit)
    }

    /// Reads a bit, yielding zero once the stream is exhausted.
    pub fn read_or_zero(&mut self) -> bool {
        self.read().unwrap_or(false)
    }

    pub fn read_bits(&mut self, count: u32) -> Option<u64> {
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | self.read()? as u64;
        }
        Some(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_vector() {
        let v = BitVector::new();
        assert_eq!(v.len(), 0);
        assert!(v.as_bytes().is_empty());
    }

    #[test]
    fn from_bytes_masks_tail() {
        let v = BitVector::from_bytes(&[0xFF, 0xFF], 10);
        assert_eq!(v.as_bytes(), &[0xFF, 0xC0]);
        assert_eq!(v.len(), 10);
    }

    proptest! {
        #[test]
        fn concatenation_is_associative(a in proptest::collection::vec(any::<bool>(), 0..40),
                                        b in proptest::collection::vec(any::<bool>(), 0..40),
                                        c in proptest::collection::vec(any::<bool>(), 0..40)) {
            let (a, b, c): (BitVector, BitVector, BitVector) =
                (a.into_iter().collect(), b.into_iter().collect(), c.into_iter().collect());
            let mut left = a.clone();
            left.extend_from(&b);
            left.extend_from(&c);
            let mut bc = b.clone();
            bc.extend_from(&c);
            let mut right = a.clone();
            right.extend_from(&bc);
            prop_assert_eq!(left.len(), a.len() + b.len() + c.len());
            prop_assert_eq!(left, right);
        }

        #[test]
        fn reader_returns_pushed_bits(values in proptest::collection::vec(any::<u16>(), 0..20)) {
            let mut v = BitVector::new();
            for &x in &values { v.push_bits(x as u64, 13); }
            let mut r = BitReader::new(&v);
            for &x in &values { prop_assert_eq!(r.read_bits(13), Some((x & 0x1FFF) as u64)); }
            prop_assert_eq!(r.read(), None);
        }
    }
}
