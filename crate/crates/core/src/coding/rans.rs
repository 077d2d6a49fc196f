//! Range asymmetric numeral systems (rANS): a stack-ordered streaming code.
//!
//! The state is a 32-bit integer kept in `[L, L * 2^16)` with `L = 2^16`;
//! renormalization moves 16-bit words between the state and the stack.

use rand::Rng;

use super::pmf::QuantizedPmf;
use crate::error::{Error, Result};

pub const RANS_L: u32 = 1 << 16;
pub const RANS_WORD_BITS: u32 = 16;
/// Declared termination overhead: the flushed 32-bit state plus the
/// state's initial occupancy.
pub const RANS_FLUSH_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RansState {
    state: u32,
    stack: Vec<u16>,
}

impl Default for RansState {
    fn default() -> Self {
        Self::new()
    }
}

impl RansState {
    /// Empty coder at the lower bound of the state interval.
    pub fn new() -> Self {
        Self { state: RANS_L, stack: Vec::new() }
    }

    pub fn from_parts(state: u32, stack: Vec<u16>) -> Result<Self> {
        if state < RANS_L {
            return Err(Error::Format(format!("rANS state {state:#x} below lower bound")));
        }
        Ok(Self { state, stack })
    }

    /// A state filled with uniformly random bits: a random head in
    /// `[L, 2^32)` and `words` random stack words.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, words: usize) -> Self {
        let state = rng.gen_range(RANS_L..=u32::MAX);
        let stack = (0..words).map(|_| rng.gen::<u16>()).collect();
        Self { state, stack }
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn stack(&self) -> &[u16] {
        &self.stack
    }

    /// Length of the whole message in binary: stack words plus the
    /// significant bits of the head.
    pub fn bit_len(&self) -> u64 {
        RANS_WORD_BITS as u64 * self.stack.len() as u64 + (32 - self.state.leading_zeros()) as u64
    }

    /// Bits occupied when serialized (32-bit head plus 16 bits per word).
    pub fn serialized_bits(&self) -> u64 {
        32 + RANS_WORD_BITS as u64 * self.stack.len() as u64
    }

    pub fn push(&mut self, symbol: usize, pmf: &QuantizedPmf) -> Result<()> {
        pmf.check_symbol(symbol)?;
        self.push_interval(pmf.cum(symbol), pmf.freq(symbol), pmf.precision());
        Ok(())
    }

    /// Pushes the slot interval `[cum, cum + freq)` out of `2^precision`.
    /// Lets a caller that only kept `(cum, freq)` encode without the PMF.
    pub fn push_interval(&mut self, cum: u32, freq: u32, prec: u32) {
        assert!(freq > 0 && prec <= 16 && cum as u64 + freq as u64 <= 1u64 << prec);
        let f = freq as u64;
        let x_max = ((RANS_L as u64 >> prec) << RANS_WORD_BITS) * f;
        let mut x = self.state as u64;
        while x >= x_max {
            self.stack.push(x as u16);
            x >>= RANS_WORD_BITS;
        }
        x = ((x / f) << prec) + (x % f) + cum as u64;
        debug_assert!((RANS_L as u64..1u64 << 32).contains(&x));
        self.state = x as u32;
    }

    /// Pops the most recently pushed symbol. On error the state is unchanged.
    pub fn pop(&mut self, pmf: &QuantizedPmf) -> Result<usize> {
        let prec = pmf.precision();
        let x = self.state as u64;
        let slot = (x & ((1u64 << prec) - 1)) as u32;
        let symbol = pmf.symbol_for_slot(slot);
        let mut x = pmf.freq(symbol) as u64 * (x >> prec) + slot as u64 - pmf.cum(symbol) as u64;
        if x < RANS_L as u64 {
            let word = *self.stack.last().ok_or(Error::StreamExhausted)?;
            self.stack.pop();
            x = (x << RANS_WORD_BITS) | word as u64;
            debug_assert!(x >= RANS_L as u64);
        }
        self.state = x as u32;
        Ok(symbol)
    }

    /// Head as 4 little-endian bytes followed by the stack words, bottom first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 * self.stack.len());
        out.extend_from_slice(&self.state.to_le_bytes());
        for w in &self.stack {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes.len() % 2 != 0 {
            return Err(Error::Format(format!("rANS stream of {} bytes", bytes.len())));
        }
        let state = u32::from_le_bytes(bytes[..4].try_into().unwrap());
        let stack = bytes[4..].chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        Self::from_parts(state, stack)
    }
}

pub fn rans_push(mut state: RansState, symbol: usize, pmf: &QuantizedPmf) -> Result<RansState> {
    state.push(symbol, pmf)?;
    Ok(state)
}

pub fn rans_pop(mut state: RansState, pmf: &QuantizedPmf) -> Result<(usize, RansState)> {
    let s = state.pop(pmf)?;
    Ok((s, state))
}

/// Encodes a whole message so that it decodes in forward order.
pub fn rans_encode(models: &[QuantizedPmf], message: &[usize]) -> Result<RansState> {
    if models.len() != message.len() {
        return Err(Error::LengthMismatch { models: models.len(), symbols: message.len() });
    }
    let mut st = RansState::new();
    for (s, pmf) in message.iter().zip(models).rev() {
        st.push(*s, pmf)?;
    }
    Ok(st)
}

pub fn rans_decode(models: &[QuantizedPmf], mut state: RansState) -> Result<Vec<usize>> {
    models.iter().map(|pmf| state.pop(pmf)).collect()
}

/// Decoding uniformly random bits yields a sample from `pmf`.
pub fn rans_decode_as_sample(state: &mut RansState, pmf: &QuantizedPmf) -> Result<usize> {
    state.pop(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::pmf::quantize_pmf;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_pop_inverse() {
        let pmf = quantize_pmf(&[0.6, 0.3, 0.1], 12).unwrap();
        for s in 0..3 {
            let st = RansState::new();
            let pushed = rans_push(st.clone(), s, &pmf).unwrap();
            let (sym, back) = rans_pop(pushed, &pmf).unwrap();
            assert_eq!(sym, s);
            assert_eq!(back, st);
        }
    }

    #[test]
    fn pop_on_initial_state_is_exhausted() {
        let pmf = quantize_pmf(&[0.5, 0.5], 12).unwrap();
        let mut st = RansState::new();
        assert_eq!(st.pop(&pmf), Err(Error::StreamExhausted));
        assert_eq!(st, RansState::new());
    }

    #[test]
    fn dyadic_uniform_grows_exactly() {
        for b in 1..=6u32 {
            let pmf = QuantizedPmf::uniform(1 << b, 12).unwrap();
            let mut st = RansState::new();
            let start = st.bit_len();
            let mut rng = ChaCha8Rng::seed_from_u64(b as u64);
            let n = 1000;
            for _ in 0..n {
                st.push(rng.gen_range(0..1usize << b), &pmf).unwrap();
            }
            assert_eq!(st.bit_len() - start, n * b as u64);
        }
    }

    #[test]
    fn skewed_binary_near_information_content() {
        let pmf = quantize_pmf(&[7.0 / 8.0, 1.0 / 8.0], 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let msg: Vec<usize> = (0..10_000).map(|_| usize::from(rng.gen_bool(0.125))).collect();
        let info: f64 = msg.iter().map(|&s| pmf.info_bits(s)).sum();
        let st = rans_encode(&vec![pmf.clone(); msg.len()], &msg).unwrap();
        let total = st.serialized_bits() as f64;
        assert!((total - info).abs() <= 1.0 + RANS_FLUSH_BITS as f64, "total {total} info {info}");
        assert_eq!(rans_decode(&vec![pmf; msg.len()], st).unwrap(), msg);
    }

    #[test]
    fn deterministic_pmf_sample() {
        let pmf = QuantizedPmf::from_freqs(vec![4096], 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = RansState::random(&mut rng, 4);
        for _ in 0..100 {
            assert_eq!(rans_decode_as_sample(&mut st, &pmf).unwrap(), 0);
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let pmf = quantize_pmf(&[0.2, 0.8], 12).unwrap();
        let st = rans_encode(&vec![pmf.clone(); 50], &[1; 50]).unwrap();
        assert_eq!(RansState::from_bytes(&st.to_bytes()).unwrap(), st);
        assert!(RansState::from_bytes(&[1, 2, 3]).is_err());
    }

    proptest! {
        #[test]
        fn stack_order_roundtrip(probs in proptest::collection::vec(0.0f64..1.0, 1..30),
                                 raw in proptest::collection::vec(0usize..100, 0..300),
                                 precision in 8u32..=16) {
            prop_assume!(probs.iter().sum::<f64>() > 0.0);
            let pmf = quantize_pmf(&probs, precision).unwrap();
            let msg: Vec<usize> = raw.into_iter().map(|s| s % pmf.num_symbols()).collect();
            let mut st = RansState::new();
            for &s in &msg {
                st.push(s, &pmf).unwrap();
                prop_assert!(st.state() >= RANS_L);
            }
            // last in, first out
            let mut popped: Vec<usize> = (0..msg.len()).map(|_| st.pop(&pmf).unwrap()).collect();
            popped.reverse();
            prop_assert_eq!(popped, msg);
            prop_assert_eq!(st, RansState::new());
        }
    }
}
