//! Uniform, dithered and Lloyd-Max scalar quantization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::density::Density;

/// Rounds to the nearest integer, ties away from zero.
pub fn uniform_quantize(z: &[f64]) -> Vec<i64> {
    z.iter().map(|v| v.round() as i64).collect()
}

/// Shared dither source: both ends seed it identically.
#[derive(Debug, Clone)]
pub struct DitherStream {
    rng: ChaCha8Rng,
}

impl DitherStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Next offset in `[-0.5, 0.5)`.
    pub fn next_offset(&mut self) -> f64 {
        self.rng.gen_range(-0.5..0.5)
    }

    pub fn take(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_offset()).collect()
    }
}

fn check_dither(u: &[f64]) -> Result<()> {
    if let Some(bad) = u.iter().find(|v| !(-0.5..0.5).contains(*v)) {
        return Err(Error::InvalidParameter(format!("dither {bad} outside [-0.5, 0.5)")));
    }
    Ok(())
}

/// `k = round(y - u')`.
pub fn dithered_quantize(y: &[f64], u: &[f64]) -> Result<Vec<i64>> {
    if y.len() != u.len() {
        return Err(Error::ShapeMismatch("dither and signal lengths differ".into()));
    }
    check_dither(u)?;
    Ok(y.iter().zip(u).map(|(y, u)| (y - u).round() as i64).collect())
}

/// `k + u'`.
pub fn dithered_reconstruct(k: &[i64], u: &[f64]) -> Result<Vec<f64>> {
    if k.len() != u.len() {
        return Err(Error::ShapeMismatch("dither and index lengths differ".into()));
    }
    check_dither(u)?;
    Ok(k.iter().zip(u).map(|(&k, u)| k as f64 + u).collect())
}

/// Plug-in estimate of `H(k | u')` in bits, conditioning on `bins` equal-width
/// cells of the dither.
pub fn conditional_entropy_binned(k: &[i64], u: &[f64], bins: usize) -> f64 {
    let mut groups: Vec<Vec<i64>> = vec![Vec::new(); bins];
    for (&k, &u) in k.iter().zip(u) {
        let b = (((u + 0.5) * bins as f64) as usize).min(bins - 1);
        groups[b].push(k);
    }
    let n = k.len() as f64;
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| g.len() as f64 / n * crate::stats::empirical_entropy(g))
        .sum()
}

/// `I[y; y + u] = h(y + u)` for `y ~ N(0, σ²)` and `u ~ U[-0.5, 0.5)`, by
/// numerical integration of the smoothed density.
pub fn dither_mutual_information_gaussian(sigma: f64) -> Result<f64> {
    let d = Density::gaussian(0.0, sigma)?;
    let half = 10.0 * sigma + 1.0;
    let n = 200_000;
    let h = 2.0 * half / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let v = -half + i as f64 * h;
        let f = d.mass(v - 0.5, v + 0.5);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        if f > 0.0 {
            acc -= w * f * f.log2();
        }
    }
    Ok(acc * h)
}

/// Scalar quantizer: cell `i` is `[b_{i-1}, b_i)` with reconstruction `points[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarQuantizer {
    boundaries: Vec<f64>,
    points: Vec<f64>,
}

impl ScalarQuantizer {
    pub fn new(boundaries: Vec<f64>, points: Vec<f64>) -> Result<Self> {
        if points.len() != boundaries.len() + 1 {
            return Err(Error::ShapeMismatch("need one more point than boundaries".into()));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) || points.iter().chain(&boundaries).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("boundaries must be finite and strictly increasing".into()));
        }
        Ok(Self { boundaries, points })
    }

    /// Nearest-neighbour quantizer for sorted distinct points.
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        points.dedup();
        let boundaries = points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::new(boundaries, points)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn levels(&self) -> usize {
        self.points.len()
    }

    pub fn index(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.points[self.index(x)]
    }

    pub fn mse(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| (x - self.quantize(x)).powi(2)).sum::<f64>() / samples.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct LloydMax {
    pub quantizer: ScalarQuantizer,
    /// MSE after each iteration.
    pub history: Vec<f64>,
}

/// Lloyd-Max design. Starts from sample quantiles; an empty cell is reseeded
/// at the sample with the largest distortion. `levels` is capped at the number
/// of distinct samples.
pub fn lloyd_max(samples: &[f64], levels: usize, tol: f64) -> Result<LloydMax> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if levels == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("need levels >= 1 and tol > 0".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if levels >= distinct.len() {
        let q = ScalarQuantizer::from_points(distinct)?;
        return Ok(LloydMax { history: vec![q.mse(samples)], quantizer: q });
    }
    let mut points: Vec<f64> =
        (0..levels).map(|k| sorted[((2 * k + 1) * sorted.len()) / (2 * levels)]).collect();
    points.dedup();
    while points.len() < levels {
        // duplicate quantiles: fill from distinct values not yet used
        let extra = distinct.iter().find(|v| !points.contains(v)).copied().unwrap();
        points.push(extra);
        points.sort_by(f64::total_cmp);
    }
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..10_000 {
        let q = ScalarQuantizer::from_points(points.clone())?;
        let mut sums = vec![0.0; levels];
        let mut counts = vec![0usize; levels];
        let mut worst = (0.0, sorted[0]);
        for &x in &sorted {
            let i = q.index(x);
            sums[i] += x;
            counts[i] += 1;
            let d = (x - q.points[i]).powi(2);
            if d > worst.0 {
                worst = (d, x);
            }
        }
        let mut next: Vec<f64> = (0..levels)
            .map(|i| if counts[i] > 0 { sums[i] / counts[i] as f64 } else { f64::NAN })
            .collect();
        for i in 0..levels {
            if next[i].is_nan() {
                next[i] = worst.1;
                worst.0 = 0.0;
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup();
        while next.len() < levels {
            let extra = distinct.iter().rev().find(|v| !next.contains(v)).copied().unwrap();
            next.push(extra);
            next.sort_by(f64::total_cmp);
        }
        let mse = ScalarQuantizer::from_points(next.clone())?.mse(samples);
        history.push(mse);
        points = next;
        if (prev - mse).abs() < tol {
            break;
        }
        prev = mse;
    }
    Ok(LloydMax { quantizer: ScalarQuantizer::from_points(points)?, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounding_examples() {
        assert_eq!(uniform_quantize(&[0.2, -1.7]), vec![0, -2]);
        assert_eq!(uniform_quantize(&[0.5, -0.5, 2.5]), vec![1, -1, 3]);
        assert_eq!(uniform_quantize(&[3.0, -4.0]), vec![3, -4]);
    }

    proptest! {
        #[test]
        fn rounding_error_at_most_half(z in prop::collection::vec(-1e6f64..1e6, 0..50)) {
            for (x, k) in z.iter().zip(uniform_quantize(&z)) {
                prop_assert!((x - k as f64).abs() <= 0.5);
            }
        }
    }

    #[test]
    fn dither_basics() {
        assert_eq!(dithered_quantize(&[1.3], &[0.0]).unwrap(), vec![1]);
        assert_eq!(dithered_reconstruct(&[1], &[0.0]).unwrap(), vec![1.0]);
        assert!(dithered_quantize(&[1.0], &[0.5]).is_err());
        let mut a = DitherStream::new(3);
        let mut b = DitherStream::new(3);
        assert_eq!(a.take(10), b.take(10));
    }

    #[test]
    fn dither_reconstruction_error_is_bounded() {
        let mut s = DitherStream::new(1);
        let y: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        let u = s.take(y.len());
        let k = dithered_quantize(&y, &u).unwrap();
        let r = dithered_reconstruct(&k, &u).unwrap();
        assert!(y.iter().zip(&r).all(|(a, b)| (a - b).abs() <= 0.5));
    }

    #[test]
    fn gaussian_dither_information() {
        // Large σ: h(y + u) ≈ h(y) = 0.5 log2(2πe σ²)
        let i = dither_mutual_information_gaussian(20.0).unwrap();
        let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 400.0).log2();
        assert!((i - h).abs() < 1e-3, "{i} vs {h}");
    }

    #[test]
    fn lloyd_uniform_two_levels() {
        let samples: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
        let l = lloyd_max(&samples, 2, 1e-12).unwrap();
        let p = l.quantizer.points();
        assert!((p[0] - 0.25).abs() < 1e-3 && (p[1] - 0.75).abs() < 1e-3, "{p:?}");
        assert!((l.quantizer.boundaries()[0] - 0.5).abs() < 1e-3);
        // dense grid search over symmetric point pairs agrees
        let best = (1..500)
            .map(|i| i as f64 / 1000.0)
            .min_by(|a, b| {
                let qa = ScalarQuantizer::from_points(vec![*a, 1.0 - a]).unwrap().mse(&samples);
                let qb = ScalarQuantizer::from_points(vec![*b, 1.0 - b]).unwrap().mse(&samples);
                qa.total_cmp(&qb)
            })
            .unwrap();
        assert!((best - p[0]).abs() < 2e-3);
    }

    #[test]
    fn lloyd_single_level_is_mean() {
        let s = [1.0, 2.0, 6.0];
        let l = lloyd_max(&s, 1, 1e-12).unwrap();
        assert!((l.quantizer.points()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lloyd_many_levels_is_lossless() {
        let s = [1.0, 1.0, 2.0, 5.0];
        let l = lloyd_max(&s, 7, 1e-12).unwrap();
        assert_eq!(l.quantizer.mse(&s), 0.0);
    }

    #[test]
    fn lloyd_mse_non_increasing() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s: Vec<f64> = (0..500).map(|_| rng.gen::<f64>().powi(3) * 10.0).collect();
            let l = lloyd_max(&s, rng.gen_range(2..12), 1e-12).unwrap();
            assert!(l.history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", l.history);
        }
    }
}
