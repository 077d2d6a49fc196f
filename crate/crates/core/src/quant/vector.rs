//! Codebooks, entropy-constrained VQ and soft-to-hard relaxation.

use rand::Rng;

use crate::error::{Error, Result};

/// `M` codewords in `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    vectors: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

impl Codebook {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if dim == 0 || vectors.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidParameter("codewords must be finite with a common dimension".into()));
        }
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn size(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// Index of the closest codeword (lowest index on ties).
    pub fn nearest(&self, z: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.vectors.iter().enumerate() {
            let d = sq_dist(z, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// `-log2 P(i) + λ‖z - c_i‖²`, minimized over `i` (lowest index on ties).
pub fn ecvq_assign(z: &[f64], codebook: &Codebook, probs: &[f64], lambda: f64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in codebook.vectors.iter().enumerate() {
        let cost = -probs[i].log2() + lambda * sq_dist(z, c);
        if cost < best.1 {
            best = (i, cost);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcvqOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Additive count smoothing of the cell PMF.
    pub smoothing: f64,
}

impl Default for EcvqOptions {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-10, smoothing: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct Ecvq {
    pub codebook: Codebook,
    pub probs: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Per-sample penalized Lagrangian after each alternation.
    pub history: Vec<f64>,
}

impl Ecvq {
    pub fn lagrangian(&self) -> f64 {
        *self.history.last().unwrap()
    }

    /// Mean `-log2 P(i)` of the assignments, bits per vector.
    pub fn rate(&self) -> f64 {
        self.assignments.iter().map(|&i| -self.probs[i].log2()).sum::<f64>() / self.assignments.len() as f64
    }

    /// Mean squared error per vector.
    pub fn distortion(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .zip(&self.assignments)
            .map(|(z, &i)| sq_dist(z, &self.codebook.vectors[i]))
            .sum::<f64>()
            / samples.len() as f64
    }
}

/// k-means++ seeding.
pub fn kmeans_pp<R: Rng + ?Sized>(samples: &[Vec<f64>], m: usize, rng: &mut R) -> Result<Codebook> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut centers = vec![samples[rng.gen_range(0..samples.len())].clone()];
    let mut d2: Vec<f64> = samples.iter().map(|z| sq_dist(z, &centers[0])).collect();
    while centers.len() < m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            d2.iter().position(|&d| {
                u -= d;
                u < 0.0
            })
            .unwrap_or(samples.len() - 1)
        } else {
            rng.gen_range(0..samples.len())
        };
        centers.push(samples[pick].clone());
        for (d, z) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(z, centers.last().unwrap()));
        }
    }
    Codebook::new(centers)
}

/// Uniformly random distinct samples as the initial codebook.
pub fn random_init<R: Rng + ?Sized>(samples: &[Vec<f64>], m: usize, rng: &mut R) -> Result<Codebook> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let idx = rand::seq::index::sample(rng, samples.len(), m.min(samples.len()));
    Codebook::new(idx.iter().map(|i| samples[i].clone()).collect())
}

/// Entropy-constrained VQ from a given codebook.
///
/// Alternates ECVQ assignment, centroid update and cell-PMF update. The PMF
/// is the smoothed frequency `(n_i + α) / (n + Mα)`, which is the exact
/// minimizer once the objective carries the matching `-α Σ log2 P(i)` term,
/// so the recorded objective never increases. Empty cells keep their codeword.
pub fn ecvq_from(samples: &[Vec<f64>], init: Codebook, lambda: f64, opts: EcvqOptions) -> Result<Ecvq> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be >= 0".into()));
    }
    if samples.iter().any(|z| z.len() != init.dim()) {
        return Err(Error::ShapeMismatch("sample and codeword dimensions differ".into()));
    }
    let m = init.size();
    let n = samples.len() as f64;
    let alpha = opts.smoothing;
    let mut codebook = init;
    let mut probs = vec![1.0 / m as f64; m];
    let mut assignments = vec![0usize; samples.len()];
    let mut history = Vec::new();
    let objective = |assign: &[usize], cb: &Codebook, p: &[f64]| {
        let data: f64 = samples
            .iter()
            .zip(assign)
            .map(|(z, &i)| -p[i].log2() + lambda * sq_dist(z, &cb.vectors[i]))
            .sum();
        let prior: f64 = p.iter().map(|q| -alpha * q.log2()).sum();
        (data + prior) / n
    };
    for _ in 0..opts.max_iter {
        for (a, z) in assignments.iter_mut().zip(samples) {
            *a = ecvq_assign(z, &codebook, &probs, lambda).0;
        }
        let dim = codebook.dim();
        let mut sums = vec![vec![0.0; dim]; m];
        let mut counts = vec![0usize; m];
        for (z, &i) in samples.iter().zip(&assignments) {
            counts[i] += 1;
            sums[i].iter_mut().zip(z).for_each(|(s, v)| *s += v);
        }
        let mut vectors = codebook.vectors.clone();
        for i in 0..m {
            if counts[i] > 0 {
                vectors[i] = sums[i].iter().map(|s| s / counts[i] as f64).collect();
            }
        }
        codebook = Codebook::new(vectors)?;
        let denom = n + m as f64 * alpha;
        probs = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
        let value = objective(&assignments, &codebook, &probs);
        let done = history.last().map_or(false, |&prev: &f64| (prev - value).abs() <= opts.tol * prev.abs().max(1.0));
        history.push(value);
        if done {
            break;
        }
    }
    Ok(Ecvq { codebook, probs, assignments, history })
}

/// ECVQ with k-means++ initialization.
pub fn ecvq_fit<R: Rng + ?Sized>(
    samples: &[Vec<f64>],
    m: usize,
    lambda: f64,
    opts: EcvqOptions,
    rng: &mut R,
) -> Result<Ecvq> {
    if m == 0 {
        return Err(Error::InvalidParameter("codebook size must be >= 1".into()));
    }
    let init = kmeans_pp(samples, m, rng)?;
    ecvq_from(samples, init, lambda, opts)
}

/// Softmax of `-σ‖z - c_i‖²`.
pub fn soft_assignment(z: &[f64], codebook: &Codebook, sigma: f64) -> Vec<f64> {
    let logits: Vec<f64> = codebook.vectors.iter().map(|c| -sigma * sq_dist(z, c)).collect();
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `Σ φ_i c_i`.
pub fn soft_quantize(z: &[f64], codebook: &Codebook, sigma: f64) -> Vec<f64> {
    let phi = soft_assignment(z, codebook, sigma);
    let mut out = vec![0.0; codebook.dim()];
    for (w, c) in phi.iter().zip(&codebook.vectors) {
        out.iter_mut().zip(c).for_each(|(o, v)| *o += w * v);
    }
    out
}

/// Geometric annealing `σ_t = σ_0 · r^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annealing {
    pub sigma0: f64,
    pub rate: f64,
}

impl Annealing {
    pub const DEFAULT_RATE: f64 = 1.05;

    pub fn new(sigma0: f64) -> Self {
        Self { sigma0, rate: Self::DEFAULT_RATE }
    }

    pub fn sigma(&self, epoch: u32) -> f64 {
        self.sigma0 * self.rate.powi(epoch as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mixture_2d(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c = if rng.gen_bool(0.4) { [-2.0, 1.0] } else { [2.0, -1.0] };
                let a: f64 = rng.sample(rand_distr::StandardNormal);
                let b: f64 = rng.sample(rand_distr::StandardNormal);
                vec![c[0] + 0.7 * a, c[1] + 0.7 * b]
            })
            .collect()
    }

    #[test]
    fn lagrangian_non_increasing() {
        let data = mixture_2d(2000, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for lambda in [0.01, 0.3, 3.0, 100.0] {
            let fit = ecvq_fit(&data, 8, lambda, EcvqOptions::default(), &mut rng).unwrap();
            assert!(fit.history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{lambda}: {:?}", fit.history);
        }
    }

    #[test]
    fn large_lambda_matches_kmeans_assignment() {
        let data = mixture_2d(500, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fit = ecvq_fit(&data, 4, 1e9, EcvqOptions::default(), &mut rng).unwrap();
        for (z, &a) in data.iter().zip(&fit.assignments) {
            let cb = &fit.codebook;
            let near = cb.nearest(z);
            assert!(a == near || (sq_dist(z, &cb.vectors()[a]) - sq_dist(z, &cb.vectors()[near])).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_lambda_collapses() {
        let data = mixture_2d(500, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fit = ecvq_fit(&data, 8, 1e-6, EcvqOptions::default(), &mut rng).unwrap();
        let first = fit.assignments[0];
        assert!(fit.assignments.iter().all(|&a| a == first));
        assert!(fit.rate() < 1e-3);
    }

    #[test]
    fn soft_limits() {
        let cb = Codebook::new(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 4.0]]).unwrap();
        assert_eq!(soft_quantize(&[9.0, 9.0], &cb, 0.0), vec![2.0, 4.0 / 3.0]);
        let out = soft_quantize(&[1.9, 0.3], &cb, 1e6);
        assert!((out[0] - 2.0).abs() < 1e-6 && out[1].abs() < 1e-6);
        let phi = soft_assignment(&[1.0, 0.0], &cb, 3.0);
        assert!((phi[0] - phi[1]).abs() < 1e-15);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annealing_schedule() {
        let a = Annealing::new(2.0);
        assert_eq!(a.sigma(0), 2.0);
        assert!((a.sigma(10) - 2.0 * 1.05f64.powi(10)).abs() < 1e-12);
    }
}
