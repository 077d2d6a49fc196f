//! Arithmetic coding: a 32-bit integer range coder with pending-bit carry
//! handling, plus an exact rational interval coder used as a reference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::pmf::QuantizedPmf;
use crate::bits::{BitReader, BitVector};
use crate::error::{Error, Result};

const CODE_BITS: u32 = 32;
const TOP: u64 = (1 << CODE_BITS) - 1;
const HALF: u64 = 1 << (CODE_BITS - 1);
const QUARTER: u64 = 1 << (CODE_BITS - 2);

/// Bits added by termination: one pending bit plus the disambiguating bit.
pub const AC_FLUSH_BITS: u32 = 2;

/// Encoder state: the current interval `[low, high]` and pending carry bits.
#[derive(Debug, Clone)]
pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitVector,
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self { low: 0, high: TOP, pending: 0, out: BitVector::new() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub fn encode(&mut self, symbol: usize, pmf: &QuantizedPmf) -> Result<()> {
        pmf.check_symbol(symbol)?;
        let range = self.high - self.low + 1;
        let shift = pmf.precision();
        self.high = self.low + ((range * pmf.cum(symbol + 1) as u64) >> shift) - 1;
        self.low += (range * pmf.cum(symbol) as u64) >> shift;
        debug_assert!(self.low <= self.high);
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < 3 * QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        Ok(())
    }

    /// Bits emitted so far, excluding pending bits.
    pub fn bits_emitted(&self) -> usize {
        self.out.len()
    }

    /// Emits two disambiguating bits (plus pending bits) and returns the stream.
    pub fn finish(mut self) -> BitVector {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        self.out
    }
}

/// Decoder mirroring [`ArithEncoder`]; bits past the end of the stream read as zero.
#[derive(Debug, Clone)]
pub struct ArithDecoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    reader: BitReader<'a>,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(bits: &'a BitVector) -> Self {
        let mut reader = BitReader::new(bits);
        let mut value = 0u64;
        for _ in 0..CODE_BITS {
            value = (value << 1) | reader.read_or_zero() as u64;
        }
        Self { low: 0, high: TOP, value, reader }
    }

    pub fn decode(&mut self, pmf: &QuantizedPmf) -> usize {
        let range = self.high - self.low + 1;
        let shift = pmf.precision();
        let scaled = (((self.value - self.low + 1) << shift) - 1) / range;
        let symbol = pmf.symbol_for_slot(scaled as u32);
        self.high = self.low + ((range * pmf.cum(symbol + 1) as u64) >> shift) - 1;
        self.low += (range * pmf.cum(symbol) as u64) >> shift;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < 3 * QUARTER {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.reader.read_or_zero() as u64;
        }
        symbol
    }
}

/// Encodes `message` with one PMF per position.
pub fn ac_encode(models: &[QuantizedPmf], message: &[usize]) -> Result<BitVector> {
    if models.len() != message.len() {
        return Err(Error::LengthMismatch { models: models.len(), symbols: message.len() });
    }
    let mut enc = ArithEncoder::new();
    for (s, pmf) in message.iter().zip(models) {
        enc.encode(*s, pmf)?;
    }
    Ok(enc.finish())
}

/// Decodes one symbol per model; the message length is the model count.
pub fn ac_decode(models: &[QuantizedPmf], bits: &BitVector) -> Vec<usize> {
    let mut dec = ArithDecoder::new(bits);
    models.iter().map(|pmf| dec.decode(pmf)).collect()
}

/// Exact interval `[low, high)` that infinite-precision arithmetic coding
/// assigns to `message`, given integer frequency tables (any totals).
pub fn exact_interval(tables: &[Vec<u64>], message: &[usize]) -> Result<(BigRational, BigRational)> {
    if tables.len() != message.len() {
        return Err(Error::LengthMismatch { models: tables.len(), symbols: message.len() });
    }
    let mut low = BigRational::zero();
    let mut width = BigRational::one();
    for (&s, freqs) in message.iter().zip(tables) {
        if s >= freqs.len() {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: freqs.len() });
        }
        let total: u64 = freqs.iter().sum();
        let cum: u64 = freqs[..s].iter().sum();
        let t = BigInt::from(total);
        low += &width * BigRational::new(BigInt::from(cum), t.clone());
        width *= BigRational::new(BigInt::from(freqs[s]), t);
    }
    let high = &low + &width;
    Ok((low, high))
}

/// Shortest bit string whose dyadic interval `[m/2^k, (m+1)/2^k)` lies inside `[low, high)`.
pub fn shortest_codeword(low: &BigRational, high: &BigRational) -> BitVector {
    assert!(low < high, "empty interval");
    let mut k = 0u32;
    loop {
        let scale = BigRational::from_integer(BigInt::one() << k);
        let m = (low * &scale).ceil();
        if (&m + BigRational::one()) / &scale <= *high {
            let m = m.to_integer();
            let mut bits = BitVector::new();
            for i in (0..k).rev() {
                bits.push(m.bit(i as u64));
            }
            return bits;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::pmf::quantize_pmf;
    use proptest::prelude::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn single_symbol_interval() {
        let (lo, hi) = exact_interval(&[vec![1, 4]], &[0]).unwrap();
        assert_eq!((lo, hi), (ratio(0, 1), ratio(1, 5)));
    }

    #[test]
    fn aa_interval_and_length() {
        let tables = vec![vec![1, 4], vec![1, 4]];
        let (lo, hi) = exact_interval(&tables, &[0, 0]).unwrap();
        assert_eq!(lo, ratio(0, 1));
        assert_eq!(hi, ratio(4, 100));
        let code = shortest_codeword(&lo, &hi);
        // 2^-5 = 0.03125 is the largest dyadic interval inside [0, 0.04).
        assert_eq!(code.len(), 5);
        assert!(code.iter().all(|b| !b));
    }

    #[test]
    fn near_deterministic_pmf_costs_constant_bits() {
        let pmf = QuantizedPmf::from_freqs(vec![4095, 1], 12).unwrap();
        for n in [1usize, 10, 100, 1000] {
            let models = vec![pmf.clone(); n];
            let msg = vec![0usize; n];
            let bits = ac_encode(&models, &msg).unwrap();
            let info: f64 = msg.iter().map(|&s| pmf.info_bits(s)).sum();
            assert!(info < 0.36, "n={n}: info {info}");
            assert!(bits.len() as f64 <= info + AC_FLUSH_BITS as f64 + 1.0, "n={n}: {}", bits.len());
            assert_eq!(ac_decode(&models, &bits), msg);
        }
    }

    #[test]
    fn length_mismatch() {
        let pmf = quantize_pmf(&[0.5, 0.5], 12).unwrap();
        assert!(matches!(ac_encode(&[pmf], &[0, 1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn empty_message() {
        let bits = ac_encode(&[], &[]).unwrap();
        assert_eq!(bits.len(), 2);
        assert!(ac_decode(&[], &bits).is_empty());
    }

    #[test]
    fn queue_order() {
        let a = quantize_pmf(&[0.9, 0.1], 12).unwrap();
        let b = quantize_pmf(&[0.2, 0.3, 0.5], 12).unwrap();
        let models = vec![a.clone(), b.clone(), a, b];
        let msg = vec![1, 2, 0, 1];
        let bits = ac_encode(&models, &msg).unwrap();
        let mut dec = ArithDecoder::new(&bits);
        // the first symbol encoded is the first one decoded
        assert_eq!(dec.decode(&models[0]), 1);
        assert_eq!(dec.decode(&models[1]), 2);
    }

    proptest! {
        #[test]
        fn roundtrip_and_length_bound(probs in proptest::collection::vec(0.0f64..1.0, 1..20),
                                      raw in proptest::collection::vec(0usize..100, 0..400),
                                      precision in 8u32..=16) {
            prop_assume!(probs.iter().sum::<f64>() > 0.0);
            let pmf = quantize_pmf(&probs, precision).unwrap();
            let msg: Vec<usize> = raw.into_iter().map(|s| s % pmf.num_symbols()).collect();
            let models = vec![pmf.clone(); msg.len()];
            let bits = ac_encode(&models, &msg).unwrap();
            prop_assert_eq!(ac_decode(&models, &bits), msg.clone());
            let info: f64 = msg.iter().map(|&s| pmf.info_bits(s)).sum();
            prop_assert!(bits.len() as f64 <= info + AC_FLUSH_BITS as f64 + 1.0);
        }
    }
}
