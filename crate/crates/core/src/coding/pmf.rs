//! Fixed-point categorical distributions shared bit-exactly by every coder.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 12;
pub const MAX_PRECISION: u32 = 16;

/// Categorical distribution with integer frequencies summing to `2^precision`.
///
/// Every symbol has frequency at least one, so every symbol is encodable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantizedPmf {
    freqs: Vec<u32>,
    cdf: Vec<u32>,
    precision: u32,
}

impl QuantizedPmf {
    /// Builds a PMF from explicit frequencies, validating every invariant.
    pub fn from_freqs(freqs: Vec<u32>, precision: u32) -> Result<Self> {
        check_precision(precision)?;
        if freqs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if freqs.iter().any(|&f| f == 0) {
            return Err(Error::InvalidDistribution("zero frequency".into()));
        }
        let total: u64 = freqs.iter().map(|&f| f as u64).sum();
        if total != 1u64 << precision {
            return Err(Error::InvalidDistribution(format!(
                "frequencies sum to {total}, expected {}",
                1u64 << precision
            )));
        }
        let mut cdf = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u32;
        cdf.push(0);
        for &f in &freqs {
            acc += f;
            cdf.push(acc);
        }
        Ok(Self { freqs, cdf, precision })
    }

    /// Uniform distribution over `num_symbols` symbols (as close as the grid allows).
    pub fn uniform(num_symbols: usize, precision: u32) -> Result<Self> {
        quantize_pmf(&vec![1.0; num_symbols], precision)
    }

    pub fn num_symbols(&self) -> usize {
        self.freqs.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn total(&self) -> u32 {
        1 << self.precision
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    /// Cumulative frequencies, `num_symbols + 1` entries from 0 to `2^precision`.
    pub fn cdf(&self) -> &[u32] {
        &self.cdf
    }

    pub fn freq(&self, symbol: usize) -> u32 {
        self.freqs[symbol]
    }

    pub fn cum(&self, symbol: usize) -> u32 {
        self.cdf[symbol]
    }

    pub fn probability(&self, symbol: usize) -> f64 {
        self.freqs[symbol] as f64 / self.total() as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.num_symbols()).map(|s| self.probability(s)).collect()
    }

    /// Information content `-log2 P(symbol)` in bits.
    pub fn info_bits(&self, symbol: usize) -> f64 {
        self.precision as f64 - (self.freqs[symbol] as f64).log2()
    }

    /// Symbol whose cumulative range contains `slot`, `slot < 2^precision`.
    pub fn symbol_for_slot(&self, slot: u32) -> usize {
        debug_assert!(slot < self.total());
        self.cdf.partition_point(|&c| c <= slot) - 1
    }

    pub fn check_symbol(&self, symbol: usize) -> Result<()> {
        if symbol < self.num_symbols() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol, alphabet: self.num_symbols() })
        }
    }

    /// Entropy of the quantized distribution in bits.
    pub fn entropy_bits(&self) -> f64 {
        (0..self.num_symbols()).map(|s| self.probability(s) * self.info_bits(s)).sum()
    }
}

fn check_precision(precision: u32) -> Result<()> {
    if (1..=MAX_PRECISION).contains(&precision) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "precision {precision} outside 1..={MAX_PRECISION}"
        )))
    }
}

/// Rounds a real distribution onto the `2^precision` grid.
///
/// Frequencies are floored (minimum 1); leftover mass goes to the largest
/// fractional remainders, and any excess created by the minimum-frequency
/// floor is taken one unit at a time from the currently largest frequency.
pub fn quantize_pmf(probs: &[f64], precision: u32) -> Result<QuantizedPmf> {
    check_precision(precision)?;
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution("probabilities must be finite and >= 0".into()));
    }
    let sum: f64 = probs.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidDistribution("all probabilities are zero".into()));
    }
    let total = 1u64 << precision;
    if probs.len() as u64 > total {
        return Err(Error::InvalidParameter(format!(
            "{} symbols do not fit at precision {precision}",
            probs.len()
        )));
    }

    let scaled: Vec<f64> = probs.iter().map(|p| p / sum * total as f64).collect();
    let mut freqs: Vec<u64> = scaled.iter().map(|s| (s.floor() as u64).max(1)).collect();
    let assigned: u64 = freqs.iter().sum();

    if assigned < total {
        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - freqs[a] as f64;
            let rb = scaled[b] - freqs[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut remaining = total - assigned;
        let mut i = 0;
        while remaining > 0 {
            freqs[order[i % order.len()]] += 1;
            remaining -= 1;
            i += 1;
        }
    } else if assigned > total {
        let mut heap: BinaryHeap<(u64, Reverse<usize>)> =
            freqs.iter().enumerate().map(|(i, &f)| (f, Reverse(i))).collect();
        let mut excess = assigned - total;
        while excess > 0 {
            let (f, Reverse(i)) = heap.pop().expect("heap holds every symbol");
            debug_assert!(f > 1);
            freqs[i] = f - 1;
            heap.push((f - 1, Reverse(i)));
            excess -= 1;
        }
    }

    QuantizedPmf::from_freqs(freqs.into_iter().map(|f| f as u32).collect(), precision)
}
