//! Small statistical helpers used by the Monte-Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS statistic at significance `alpha`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson chi-square goodness-of-fit p-value of `counts` against `probs`.
pub fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::ShapeMismatch("chi-square needs matching vectors of >= 2 cells".into()));
    }
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = n as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// Plug-in entropy (bits) of integer samples.
pub fn empirical_entropy(samples: &[i64]) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for &s in samples {
        *counts.entry(s).or_insert(0u64) += 1;
    }
    let n = samples.len() as f64;
    counts.values().map(|&c| c as f64 / n).map(|p| -p * p.log2()).sum()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = (200..300).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn ks_critical_reference() {
        // c(0.05) = 1.358
        assert!((ks_critical(1, 1, 0.05) / 2f64.sqrt() - 1.3581).abs() < 1e-3);
    }

    #[test]
    fn ks_same_distribution_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..5000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.gen()).collect();
        assert!(ks_statistic(&a, &b) < ks_critical(5000, 5000, 0.001));
    }

    #[test]
    fn chi_square_exact_fit() {
        assert!((chi_square_p_value(&[50, 50], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!(chi_square_p_value(&[90, 10], &[0.5, 0.5]).unwrap() < 1e-10);
    }

    #[test]
    fn entropy_of_balanced_samples() {
        assert!((empirical_entropy(&[0, 1, 2, 3]) - 2.0).abs() < 1e-12);
        assert_eq!(empirical_entropy(&[7; 10]), 0.0);
    }
}
