//! Adaptive order-k context models (chain-rule factorization).

use std::collections::HashMap;

use crate::coding::pmf::{quantize_pmf, QuantizedPmf, DEFAULT_PRECISION};

pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Counts of the next symbol given the previous `order` symbols.
///
/// Positions before the start of the sequence are filled with the reserved
/// start symbol `alphabet`, so every context has exactly `order` entries.
#[derive(Debug, Clone)]
pub struct ContextModel {
    order: usize,
    alphabet: usize,
    smoothing: f64,
    precision: u32,
    counts: HashMap<Vec<u32>, Vec<u32>>,
}

impl ContextModel {
    pub fn new(order: usize, alphabet: usize) -> Self {
        Self::with_smoothing(order, alphabet, DEFAULT_SMOOTHING)
    }

    pub fn with_smoothing(order: usize, alphabet: usize, smoothing: f64) -> Self {
        assert!(alphabet >= 1 && smoothing > 0.0);
        Self { order, alphabet, smoothing, precision: DEFAULT_PRECISION, counts: HashMap::new() }
    }

    pub fn with_precision(mut self, precision: u32) -> Self {
        self.precision = precision;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn start_symbol(&self) -> u32 {
        self.alphabet as u32
    }

    /// Context key for the next position given the full history so far.
    pub fn context(&self, history: &[usize]) -> Vec<u32> {
        let mut ctx = vec![self.start_symbol(); self.order];
        let take = history.len().min(self.order);
        for (slot, &s) in ctx[self.order - take..].iter_mut().zip(&history[history.len() - take..]) {
            *slot = s as u32;
        }
        ctx
    }

    pub fn counts(&self, context: &[u32]) -> Option<&[u32]> {
        self.counts.get(context).map(Vec::as_slice)
    }

    /// Smoothed conditional probabilities `(n_s + α) / (n + Mα)`.
    pub fn predict_probs(&self, context: &[u32]) -> Vec<f64> {
        let m = self.alphabet as f64;
        match self.counts.get(context) {
            None => vec![1.0 / m; self.alphabet],
            Some(c) => {
                let n: f64 = c.iter().map(|&x| x as f64).sum();
                c.iter().map(|&x| (x as f64 + self.smoothing) / (n + m * self.smoothing)).collect()
            }
        }
    }

    pub fn predict(&self, context: &[u32]) -> QuantizedPmf {
        quantize_pmf(&self.predict_probs(context), self.precision)
            .expect("smoothed probabilities are strictly positive")
    }

    pub fn update(&mut self, context: &[u32], symbol: usize) {
        assert!(symbol < self.alphabet, "symbol outside alphabet");
        debug_assert_eq!(context.len(), self.order);
        let entry = self.counts.entry(context.to_vec()).or_insert_with(|| vec![0; self.alphabet]);
        entry[symbol] += 1;
    }

    /// `-log2 p(sequence)` under the adaptive model, accumulated through the
    /// chain rule from a fresh copy of `self`.
    pub fn sequence_info_bits(&self, sequence: &[usize]) -> f64 {
        let mut model = self.clone();
        let mut bits = 0.0;
        for i in 0..sequence.len() {
            let ctx = model.context(&sequence[..i]);
            bits -= model.predict_probs(&ctx)[sequence[i]].log2();
            model.update(&ctx, sequence[i]);
        }
        bits
    }
}

pub fn context_predict(model: &ContextModel, context: &[u32]) -> QuantizedPmf {
    model.predict(context)
}

pub fn context_update(model: &mut ContextModel, context: &[u32], symbol: usize) {
    model.update(context, symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::arith::{ArithDecoder, ArithEncoder};
    use crate::models::info::entropy_of;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unseen_context_is_uniform() {
        let m = ContextModel::new(2, 4);
        assert_eq!(m.predict_probs(&[0, 1]), vec![0.25; 4]);
        assert_eq!(m.predict(&[0, 1]).freqs(), &[1024; 4]);
    }

    #[test]
    fn start_symbol_padding() {
        let m = ContextModel::new(3, 5);
        assert_eq!(m.context(&[]), vec![5, 5, 5]);
        assert_eq!(m.context(&[2]), vec![5, 5, 2]);
        assert_eq!(m.context(&[1, 2, 3, 4]), vec![2, 3, 4]);
        assert!(ContextModel::new(0, 3).context(&[1, 2]).is_empty());
    }

    #[test]
    fn repeated_symbol_dominates() {
        let mut m = ContextModel::new(1, 2);
        let c = vec![0u32];
        for _ in 0..100 {
            m.update(&c, 1);
        }
        let p = m.predict_probs(&c)[1];
        assert!((p - 100.1 / 100.2).abs() < 1e-15);
        assert!(p > 0.97);
    }

    #[test]
    fn update_increments_exactly_one_count() {
        let mut m = ContextModel::new(1, 3);
        m.update(&[0], 2);
        m.update(&[0], 2);
        m.update(&[1], 0);
        assert_eq!(m.counts(&[0]).unwrap(), &[0, 0, 2]);
        assert_eq!(m.counts(&[1]).unwrap(), &[1, 0, 0]);
    }

    #[test]
    fn chain_rule_consistency() {
        let m = ContextModel::new(2, 3);
        let seq = [0usize, 2, 2, 1, 0, 2, 2, 2, 1];
        let mut running = m.clone();
        let mut product = 1.0f64;
        for i in 0..seq.len() {
            let ctx = running.context(&seq[..i]);
            product *= running.predict_probs(&ctx)[seq[i]];
            running.update(&ctx, seq[i]);
        }
        assert!((m.sequence_info_bits(&seq) + product.log2()).abs() < 1e-9);
    }

    #[test]
    fn markov_chain_rate_near_conditional_entropy() {
        let transition = [[0.85, 0.1, 0.05], [0.2, 0.7, 0.1], [0.3, 0.3, 0.4]];
        // stationary distribution by power iteration
        let mut pi = [1.0 / 3.0; 3];
        for _ in 0..1000 {
            let mut next = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[j] += pi[i] * transition[i][j];
                }
            }
            pi = next;
        }
        let h_cond: f64 = (0..3).map(|i| pi[i] * entropy_of(&transition[i])).sum();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seq = vec![0usize];
        while seq.len() < 10_000 {
            let row = transition[*seq.last().unwrap()];
            let u: f64 = rng.gen();
            seq.push(if u < row[0] { 0 } else if u < row[0] + row[1] { 1 } else { 2 });
        }

        let mut enc_model = ContextModel::new(1, 3);
        let mut enc = ArithEncoder::new();
        for i in 0..seq.len() {
            let ctx = enc_model.context(&seq[..i]);
            enc.encode(seq[i], &enc_model.predict(&ctx)).unwrap();
            enc_model.update(&ctx, seq[i]);
        }
        let bits = enc.finish();

        let mut dec_model = ContextModel::new(1, 3);
        let mut dec = ArithDecoder::new(&bits);
        let mut out = Vec::new();
        for _ in 0..seq.len() {
            let ctx = dec_model.context(&out);
            let s = dec.decode(&dec_model.predict(&ctx));
            dec_model.update(&ctx, s);
            out.push(s);
        }
        assert_eq!(out, seq);
        let rate = bits.len() as f64 / seq.len() as f64;
        assert!((rate - h_cond).abs() / h_cond < 0.05, "rate {rate} vs H {h_cond}");
    }
}
