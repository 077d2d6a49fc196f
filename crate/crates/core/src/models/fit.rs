//! Maximum-likelihood fitting and the dequantization bound.

use rand::Rng;

use super::density::{Density, Kernel};
use super::discretized::{bin_edges, bin_mass, DiscretizedDensity};
use super::info::Categorical;
use crate::error::{Error, Result};
use crate::optim::{minimize, OptimOptions, OptimResult};

pub const SCALE_FLOOR: f64 = 1e-4;

/// Smoothed frequency estimate `(n_s + α) / (n + Mα)`.
pub fn fit_categorical(data: &[usize], alphabet: usize, smoothing: f64) -> Result<Categorical> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if alphabet == 0 || smoothing < 0.0 {
        return Err(Error::InvalidParameter("alphabet must be >= 1 and smoothing >= 0".into()));
    }
    let mut counts = vec![0u64; alphabet];
    for &s in data {
        *counts.get_mut(s).ok_or(Error::SymbolOutOfRange { symbol: s, alphabet })? += 1;
    }
    let denom = data.len() as f64 + alphabet as f64 * smoothing;
    Categorical::new(counts.iter().map(|&c| (c as f64 + smoothing) / denom).collect())
}

/// Histogram of integer data over `[min, max]` (values outside are clamped).
fn histogram(data: &[i64], min: i64, max: i64) -> Vec<u64> {
    let mut h = vec![0u64; (max - min + 1) as usize];
    for &x in data {
        h[(x.clamp(min, max) - min) as usize] += 1;
    }
    h
}

fn data_range(data: &[i64]) -> Result<(i64, i64)> {
    let min = *data.iter().min().ok_or(Error::EmptyInput)?;
    let max = *data.iter().max().unwrap();
    Ok(if min == max { (min - 1, max + 1) } else { (min, max) })
}

fn effective_scale(log_scale: f64) -> f64 {
    log_scale.max(SCALE_FLOOR.ln()).exp()
}

/// Mean discretized NLL (bits) of a single location-scale kernel and its
/// gradient with respect to `[loc, log_scale]`.
pub fn kernel_nll(kernel: Kernel, params: &[f64], hist: &[u64], min: i64, max: i64) -> (f64, Vec<f64>) {
    let (loc, ls) = (params[0], params[1]);
    let scale = effective_scale(ls);
    let n: u64 = hist.iter().sum();
    let mut nll = 0.0;
    let mut g = [0.0; 2];
    for (i, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = min + i as i64;
        let (a, b) = bin_edges(x, min, max);
        let m = bin_mass(kernel, loc, scale, a, b);
        let q = m.mass.max(1e-300);
        nll -= c as f64 * q.ln();
        g[0] -= c as f64 * m.d_loc / q;
        if ls > SCALE_FLOOR.ln() {
            g[1] -= c as f64 * m.d_log_scale / q;
        }
    }
    let norm = n as f64 * std::f64::consts::LN_2;
    (nll / norm, vec![g[0] / norm, g[1] / norm])
}

/// Outcome of a gradient-based fit.
#[derive(Debug, Clone)]
pub struct FitReport<M> {
    pub model: M,
    /// Mean NLL of the data under the initial model, bits/symbol.
    pub initial_nll: f64,
    /// Mean NLL under the fitted model, bits/symbol.
    pub nll: f64,
    pub optim: OptimResult,
}

/// Fits a discretized logistic or Gaussian by gradient descent on the
/// discretized log-likelihood. `support` defaults to the data range.
pub fn fit_discretized(
    kernel: Kernel,
    data: &[i64],
    support: Option<(i64, i64)>,
    opts: OptimOptions,
) -> Result<FitReport<DiscretizedDensity>> {
    let (min, max) = match support {
        Some(s) => s,
        None => data_range(data)?,
    };
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hist = histogram(data, min, max);
    let n = data.len() as f64;
    let mean = data.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = data.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(SCALE_FLOOR);
    let scale0 = match kernel {
        Kernel::Logistic => std * 3f64.sqrt() / std::f64::consts::PI,
        Kernel::Gaussian => std,
    };
    let init = vec![mean, scale0.max(SCALE_FLOOR).ln()];
    let result = minimize(init, |p| kernel_nll(kernel, p, &hist, min, max), opts);
    let (loc, scale) = (result.params[0], effective_scale(result.params[1]));
    let density = match kernel {
        Kernel::Logistic => Density::logistic(loc, scale)?,
        Kernel::Gaussian => Density::gaussian(loc, scale)?,
    };
    Ok(FitReport {
        model: DiscretizedDensity::new(density, min, max)?,
        initial_nll: result.initial_value,
        nll: result.value,
        optim: result,
    })
}

/// Mean NLL (bits) of a discretized logistic mixture and its gradient with
/// respect to `[logits; locs; log_scales]`.
pub fn mixture_nll(params: &[f64], hist: &[u64], min: i64, max: i64) -> (f64, Vec<f64>) {
    let k = params.len() / 3;
    let (logits, rest) = params.split_at(k);
    let (locs, log_scales) = rest.split_at(k);
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    let pi: Vec<f64> = e.iter().map(|x| x / z).collect();
    let n: u64 = hist.iter().sum();
    let mut nll = 0.0;
    let mut g = vec![0.0; 3 * k];
    for (i, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = min + i as i64;
        let (a, b) = bin_edges(x, min, max);
        let m: Vec<_> = (0..k)
            .map(|j| bin_mass(Kernel::Logistic, locs[j], effective_scale(log_scales[j]), a, b))
            .collect();
        let q = pi.iter().zip(&m).map(|(p, mj)| p * mj.mass).sum::<f64>().max(1e-300);
        let c = c as f64;
        nll -= c * q.ln();
        for j in 0..k {
            g[j] -= c * pi[j] * (m[j].mass - q) / q;
            g[k + j] -= c * pi[j] * m[j].d_loc / q;
            if log_scales[j] > SCALE_FLOOR.ln() {
                g[2 * k + j] -= c * pi[j] * m[j].d_log_scale / q;
            }
        }
    }
    let norm = n as f64 * std::f64::consts::LN_2;
    g.iter_mut().for_each(|x| *x /= norm);
    (nll / norm, g)
}

/// Fits a `components`-term discretized logistic mixture. Components start at
/// evenly spaced data quantiles.
pub fn fit_logistic_mixture(
    data: &[i64],
    components: usize,
    support: Option<(i64, i64)>,
    opts: OptimOptions,
) -> Result<FitReport<DiscretizedDensity>> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if components == 0 {
        return Err(Error::InvalidParameter("need at least one component".into()));
    }
    let (min, max) = match support {
        Some(s) => s,
        None => data_range(data)?,
    };
    let hist = histogram(data, min, max);
    let mut sorted = data.to_vec();
    sorted.sort_unstable();
    let k = components;
    let spread = ((max - min) as f64 / (4.0 * k as f64)).max(0.5);
    let mut init = vec![0.0; k];
    init.extend((0..k).map(|j| sorted[(sorted.len() - 1) * (2 * j + 1) / (2 * k)] as f64));
    init.extend(std::iter::repeat(spread.ln()).take(k));
    let result = minimize(init, |p| mixture_nll(p, &hist, min, max), opts);
    let p = &result.params;
    let mx = p[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = p[..k].iter().map(|l| (l - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    let density = Density::logistic_mixture(
        e.iter().map(|x| x / z).collect(),
        p[k..2 * k].to_vec(),
        p[2 * k..].iter().map(|&ls| effective_scale(ls)).collect(),
    )?;
    Ok(FitReport {
        model: DiscretizedDensity::new(density, min, max)?,
        initial_nll: result.initial_value,
        nll: result.value,
        optim: result,
    })
}

/// Both sides of the dequantization bound, in bits per datum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DequantizationGap {
    /// Monte-Carlo estimate of `E[-log2 q(x + u)]`, `u ~ U[-0.5, 0.5)`.
    pub noisy_nll: f64,
    /// Exact `mean(-log2 Q(x))` with `Q(x) = F(x + 0.5) - F(x - 0.5)`.
    pub discrete_nll: f64,
    /// Standard error of `noisy_nll - discrete_nll`.
    pub std_err: f64,
}

impl DequantizationGap {
    pub fn gap(&self) -> f64 {
        self.noisy_nll - self.discrete_nll
    }
}

/// Compares the continuous likelihood of dequantized data with the discrete
/// likelihood of the induced PMF.
pub fn dequantization_gap<R: Rng + ?Sized>(
    density: &Density,
    data: &[i64],
    noise_draws: usize,
    rng: &mut R,
) -> Result<DequantizationGap> {
    if data.is_empty() || noise_draws == 0 {
        return Err(Error::EmptyInput);
    }
    let mut diffs = Vec::with_capacity(data.len());
    let mut discrete = 0.0;
    let mut noisy = 0.0;
    for &x in data {
        let xf = x as f64;
        let q = density.mass(xf - 0.5, xf + 0.5);
        let d = -q.log2();
        let mut acc = 0.0;
        for _ in 0..noise_draws {
            let u: f64 = rng.gen_range(-0.5..0.5);
            acc -= density.pdf(xf + u).log2();
        }
        let c = acc / noise_draws as f64;
        discrete += d;
        noisy += c;
        diffs.push(c - d);
    }
    let n = data.len() as f64;
    let mean_diff = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|v| (v - mean_diff).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(DequantizationGap { noisy_nll: noisy / n, discrete_nll: discrete / n, std_err: (var / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::info::{cross_entropy_of, entropy_of};
    use crate::optim::finite_difference;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn categorical_constant_data() {
        let c = fit_categorical(&[0; 50], 4, 0.1).unwrap();
        assert!(c.probs()[0] > 0.99);
        assert!(c.probs()[1..].iter().all(|&p| p > 0.0 && p < 0.01));
        assert_eq!(fit_categorical(&[], 4, 0.1), Err(Error::EmptyInput));
    }

    #[test]
    fn categorical_cross_entropy_respects_gibbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<usize> = (0..5000).map(|_| rng.gen_range(0..3) * rng.gen_range(0..2)).collect();
        let fitted = fit_categorical(&data, 3, 0.1).unwrap();
        let mut counts = [0.0; 3];
        data.iter().for_each(|&s| counts[s] += 1.0);
        let emp: Vec<f64> = counts.iter().map(|c| c / data.len() as f64).collect();
        assert!(cross_entropy_of(&emp, fitted.probs()) >= entropy_of(&emp));
    }

    #[test]
    fn recovers_logistic_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let truth = Density::logistic(3.0, 2.0).unwrap();
        let data: Vec<i64> = (0..100_000).map(|_| truth.sample(&mut rng).round() as i64).collect();
        let fit = fit_discretized(Kernel::Logistic, &data, None, OptimOptions::default()).unwrap();
        let Density::Logistic { loc, scale } = *fit.model.density() else { unreachable!() };
        assert!((loc - 3.0).abs() < 0.05, "loc {loc}");
        assert!((scale - 2.0).abs() < 0.05, "scale {scale}");
        assert!(fit.nll <= fit.initial_nll);
        // Gibbs: fitted cross-entropy is at least the empirical entropy
        let (min, max) = fit.model.support();
        let hist = histogram(&data, min, max);
        let emp: Vec<f64> = hist.iter().map(|&c| c as f64 / data.len() as f64).collect();
        assert!(fit.nll >= entropy_of(&emp) - 1e-12);
    }

    #[test]
    fn constant_data_hits_scale_floor() {
        let fit = fit_discretized(Kernel::Logistic, &[5; 100], None, OptimOptions::default()).unwrap();
        let Density::Logistic { scale, .. } = *fit.model.density() else { unreachable!() };
        assert!(scale >= SCALE_FLOOR);
        assert!(fit.nll < 0.01, "nll {}", fit.nll);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<i64> = (0..500).map(|_| rng.gen_range(-6..9)).collect();
        let hist = histogram(&data, -6, 8);
        for kernel in [Kernel::Logistic, Kernel::Gaussian] {
            for _ in 0..5 {
                let p = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..1.5)];
                let (_, g) = kernel_nll(kernel, &p, &hist, -6, 8);
                let fd = finite_difference(|q| kernel_nll(kernel, q, &hist, -6, 8).0, &p, 1e-6);
                for (a, f) in g.iter().zip(&fd) {
                    assert!((a - f).abs() / a.abs().max(1e-3) < 1e-5, "{kernel:?}: {a} vs {f}");
                }
            }
        }
        for _ in 0..5 {
            let p: Vec<f64> = (0..9)
                .map(|i| if i < 3 { rng.gen_range(-1.0..1.0) } else if i < 6 { rng.gen_range(-5.0..7.0) } else { rng.gen_range(-0.5..1.0) })
                .collect();
            let (_, g) = mixture_nll(&p, &hist, -6, 8);
            let fd = finite_difference(|q| mixture_nll(q, &hist, -6, 8).0, &p, 1e-6);
            for (a, f) in g.iter().zip(&fd) {
                assert!((a - f).abs() / a.abs().max(1e-3) < 1e-5, "mixture: {a} vs {f}");
            }
        }
    }

    #[test]
    fn mixture_fit_beats_single_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = Density::logistic_mixture(vec![0.4, 0.6], vec![-6.0, 5.0], vec![1.0, 1.5]).unwrap();
        let data: Vec<i64> = (0..20_000).map(|_| truth.sample(&mut rng).round() as i64).collect();
        let single = fit_discretized(Kernel::Logistic, &data, None, OptimOptions::default()).unwrap();
        let mix = fit_logistic_mixture(&data, 2, None, OptimOptions::default()).unwrap();
        assert!(mix.nll < single.nll - 0.3, "{} vs {}", mix.nll, single.nll);
        assert!(mix.nll <= mix.initial_nll);
    }

    #[test]
    fn uniform_density_gap_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let density = Density::Uniform { lo: -0.5, hi: 7.5 };
        let data: Vec<i64> = (0..2000).map(|_| rng.gen_range(0..8)).collect();
        let gap = dequantization_gap(&density, &data, 4, &mut rng).unwrap();
        assert!((gap.noisy_nll - 3.0).abs() < 1e-12);
        assert!((gap.discrete_nll - 3.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_gap_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let density = Density::logistic(0.3, 1.2).unwrap();
        let data: Vec<i64> = (0..20_000).map(|_| density.sample(&mut rng).round() as i64).collect();
        let gap = dequantization_gap(&density, &data, 8, &mut rng).unwrap();
        assert!(gap.gap() >= -3.0 * gap.std_err, "gap {} se {}", gap.gap(), gap.std_err);
        assert!(gap.gap() > 0.0);
    }

    #[test]
    fn sharp_density_gap_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // Unit-width box on the data value: all mass in one bin and a flat
        // density over the cell.
        let density = Density::Uniform { lo: 1.5, hi: 2.5 };
        let gap = dequantization_gap(&density, &[2; 100], 4, &mut rng).unwrap();
        assert!(gap.gap().abs() < 1e-12);
        assert!(gap.discrete_nll.abs() < 1e-12);
    }
}
