//! Entropy, cross-entropy and KL divergence in bits.

use crate::error::{Error, Result};

/// Categorical distribution over `M` symbols, normalized to within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("probabilities must be finite and >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be >= 0 with positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(m: usize) -> Self {
        Self { probs: vec![1.0 / m as f64; m] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn entropy(p: &Categorical) -> f64 {
    entropy_of(p.probs())
}

pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `-Σ p log2 q`; infinite when `q` misses part of `p`'s support.
pub fn cross_entropy(p: &Categorical, q: &Categorical) -> f64 {
    cross_entropy_of(p.probs(), q.probs())
}

pub fn cross_entropy_of(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "alphabet mismatch");
    let mut h = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            h -= pi * qi.log2();
        }
    }
    h
}

/// `KL(p || q)` in bits; infinite on a support violation.
pub fn kl(p: &Categorical, q: &Categorical) -> f64 {
    kl_of(p.probs(), q.probs())
}

pub fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "alphabet mismatch");
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).log2();
        }
    }
    d.max(0.0)
}

/// Binary entropy `h2(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fair_coin_is_one_bit() {
        assert_eq!(entropy(&Categorical::uniform(2)), 1.0);
    }

    #[test]
    fn cross_entropy_against_uniform() {
        let p = Categorical::new(vec![0.75, 0.25]).unwrap();
        let q = Categorical::uniform(2);
        assert!((cross_entropy(&p, &q) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn support_violation_is_infinite() {
        let p = Categorical::new(vec![0.5, 0.5]).unwrap();
        let q = Categorical::new(vec![1.0, 0.0]).unwrap();
        assert!(kl(&p, &q).is_infinite());
        assert!(cross_entropy(&p, &q).is_infinite());
        assert!(kl(&q, &p).is_finite());
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(Categorical::new(vec![0.5, 0.6]).is_err());
        assert!(Categorical::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn gibbs_inequality(a in proptest::collection::vec(0.01f64..1.0, 2..12),
                            b in proptest::collection::vec(0.01f64..1.0, 2..12)) {
            let n = a.len().min(b.len());
            let p = Categorical::from_weights(&a[..n]).unwrap();
            let q = Categorical::from_weights(&b[..n]).unwrap();
            let d = kl(&p, &q);
            prop_assert!(d >= 0.0);
            prop_assert!((d - (cross_entropy(&p, &q) - entropy(&p))).abs() < 1e-9);
            prop_assert!(kl(&p, &p).abs() < 1e-12);
        }
    }
}
