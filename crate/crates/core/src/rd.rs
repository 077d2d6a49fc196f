//! Information and operational rate-distortion.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::coding::{quantize_pmf, rans_encode};
use crate::error::{Error, Result};
use crate::models::info::Categorical;
use crate::quant::{ecvq_fit, EcvqOptions};

/// Nonnegative distortion `ρ[x][x̂]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: Vec<Vec<f64>>,
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("distortion matrix must be rectangular and nonempty".into()));
        }
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("distortions must be finite and >= 0".into()));
        }
        Ok(Self { rows })
    }

    pub fn hamming(n: usize) -> Self {
        Self { rows: (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i != j))).collect()).collect() }
    }

    /// `(x - x̂)²` between source values and reconstruction values.
    pub fn squared_error(source: &[f64], recon: &[f64]) -> Result<Self> {
        Self::new(source.iter().map(|x| recon.iter().map(|y| (x - y).powi(2)).collect()).collect())
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }
}

/// Row-stochastic `p(x̂ | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("channel must be rectangular and nonempty".into()));
        }
        for r in &rows {
            let s: f64 = r.iter().sum();
            if r.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution("channel rows must be distributions".into()));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect() }
    }

    pub fn binary_symmetric(crossover: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - crossover, crossover], vec![crossover, 1.0 - crossover]])
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn output_marginal(&self, source: &Categorical) -> Vec<f64> {
        let mut q = vec![0.0; self.rows[0].len()];
        for (p, row) in source.probs().iter().zip(&self.rows) {
            q.iter_mut().zip(row).for_each(|(q, w)| *q += p * w);
        }
        q
    }

    pub fn expected_distortion(&self, source: &Categorical, rho: &DistortionMatrix) -> f64 {
        let mut d = 0.0;
        for (x, (p, row)) in source.probs().iter().zip(&self.rows).enumerate() {
            for (y, w) in row.iter().enumerate() {
                d += p * w * rho.get(x, y);
            }
        }
        d
    }
}

fn check_shapes(source: &Categorical, channel_rows: usize, name: &str) -> Result<()> {
    if source.len() != channel_rows {
        return Err(Error::ShapeMismatch(format!("source has {} symbols, {name} has {channel_rows} rows", source.len())));
    }
    Ok(())
}

/// `I[x; x̂]` in bits.
pub fn mutual_information(source: &Categorical, channel: &Channel) -> Result<f64> {
    check_shapes(source, channel.rows.len(), "channel")?;
    let q = channel.output_marginal(source);
    let mut i = 0.0;
    for (p, row) in source.probs().iter().zip(&channel.rows) {
        for (w, qy) in row.iter().zip(&q) {
            if *p > 0.0 && *w > 0.0 {
                i += p * w * (w / qy).log2();
            }
        }
    }
    Ok(i.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BaOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct BaResult {
    pub lambda: f64,
    pub rate: f64,
    pub distortion: f64,
    pub channel: Channel,
    pub iterations: usize,
    /// Rate after each iteration.
    pub rate_history: Vec<f64>,
    /// `I + λD` after each iteration; never increases.
    pub lagrangian_history: Vec<f64>,
}

/// Blahut-Arimoto at slope `λ` (rate in bits): alternates
/// `p(x̂|x) ∝ q(x̂) 2^(-λρ(x,x̂))` and `q(x̂) = Σ_x p(x) p(x̂|x)`.
/// `λ = 0` returns the best single reconstruction (lowest index on ties).
pub fn blahut_arimoto(source: &Categorical, rho: &DistortionMatrix, lambda: f64, opts: BaOptions) -> Result<BaResult> {
    check_shapes(source, rho.inputs(), "distortion matrix")?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("slope must be finite and >= 0, got {lambda}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be > 0".into()));
    }
    let (nx, ny) = (rho.inputs(), rho.outputs());
    let p = source.probs();
    if lambda == 0.0 {
        let cost = |y: usize| (0..nx).map(|x| p[x] * rho.get(x, y)).sum::<f64>();
        let best = (0..ny).fold(0, |b, y| if cost(y) < cost(b) { y } else { b });
        let channel = Channel::new(vec![(0..ny).map(|y| f64::from(u8::from(y == best))).collect(); nx])?;
        let d = cost(best);
        return Ok(BaResult {
            lambda,
            rate: 0.0,
            distortion: d,
            channel,
            iterations: 0,
            rate_history: vec![0.0],
            lagrangian_history: vec![0.0],
        });
    }
    // Shift each row's distortions by its minimum so 2^(-λρ) never underflows
    // entirely; the shift cancels in the row normalization.
    let kernel: Vec<Vec<f64>> = (0..nx)
        .map(|x| {
            let m = (0..ny).map(|y| rho.get(x, y)).fold(f64::INFINITY, f64::min);
            (0..ny).map(|y| (-lambda * (rho.get(x, y) - m)).exp2()).collect()
        })
        .collect();
    let mut q = vec![1.0 / ny as f64; ny];
    let mut rate_history = Vec::new();
    let mut lagrangian_history = Vec::new();
    let mut rows = vec![vec![0.0; ny]; nx];
    for it in 1..=opts.max_iter {
        for x in 0..nx {
            let z: f64 = (0..ny).map(|y| q[y] * kernel[x][y]).sum();
            for y in 0..ny {
                rows[x][y] = q[y] * kernel[x][y] / z;
            }
        }
        let channel = Channel { rows: rows.clone() };
        q = channel.output_marginal(source);
        let rate = mutual_information(source, &channel)?;
        let d = channel.expected_distortion(source, rho);
        let prev = rate_history.last().copied();
        rate_history.push(rate);
        lagrangian_history.push(rate + lambda * d);
        if prev.map_or(false, |r: f64| (r - rate).abs() < opts.tol) {
            return Ok(BaResult {
                lambda,
                rate,
                distortion: d,
                channel,
                iterations: it,
                rate_history,
                lagrangian_history,
            });
        }
    }
    let n = rate_history.len();
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: (rate_history[n - 1] - rate_history[n - 2]).abs() })
}

/// BA points for each slope, computed in parallel, returned in input order.
pub fn ba_curve(source: &Categorical, rho: &DistortionMatrix, lambdas: &[f64], opts: BaOptions) -> Result<Vec<BaResult>> {
    #[cfg(feature = "parallel")]
    let it = lambdas.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = lambdas.iter();
    it.map(|&l| blahut_arimoto(source, rho, l, opts)).collect()
}

/// BA point whose distortion matches `target` by bisection on the slope.
pub fn ba_at_distortion(source: &Categorical, rho: &DistortionMatrix, target: f64, opts: BaOptions) -> Result<BaResult> {
    let zero = blahut_arimoto(source, rho, 0.0, opts)?;
    if target >= zero.distortion {
        return Ok(zero);
    }
    let mut hi = 1.0;
    let mut hi_res = blahut_arimoto(source, rho, hi, opts)?;
    while hi_res.distortion > target {
        if hi > 1e6 {
            return Ok(hi_res);
        }
        hi *= 2.0;
        hi_res = blahut_arimoto(source, rho, hi, opts)?;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let r = blahut_arimoto(source, rho, mid, opts)?;
        if r.distortion > target {
            lo = mid;
        } else {
            hi = mid;
            hi_res = r;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(hi_res)
}

/// One operational or information R-D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    pub lambda: f64,
    pub rate: f64,
    pub distortion: f64,
}

impl From<&BaResult> for RdPoint {
    fn from(r: &BaResult) -> Self {
        Self { lambda: r.lambda, rate: r.rate, distortion: r.distortion }
    }
}

/// True when `point` lies on or above every supporting line of the
/// information curve: `R + λD ≥ R_λ + λD_λ` for each BA point.
pub fn above_information_curve(point: &RdPoint, curve: &[BaResult], tol: f64) -> bool {
    curve.iter().all(|b| point.rate + b.lambda * point.distortion >= b.rate + b.lambda * b.distortion - tol)
}

/// A lossy or lossless codec measurable on scalar data.
pub trait Codec: Sync {
    /// Compresses `data` at trade-off `param`; returns the measured bit count
    /// and the reconstruction.
    fn run(&self, data: &[f64], param: f64) -> Result<(u64, Vec<f64>)>;
}

/// Operational points (bits/sample, MSE) in parameter order.
pub fn rd_sweep<C: Codec>(codec: &C, params: &[f64], data: &[f64]) -> Result<Vec<RdPoint>> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let eval = |&param: &f64| -> Result<RdPoint> {
        let (bits, recon) = codec.run(data, param)?;
        let mse = data.iter().zip(&recon).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / data.len() as f64;
        Ok(RdPoint { lambda: param, rate: bits as f64 / data.len() as f64, distortion: mse })
    };
    #[cfg(feature = "parallel")]
    return params.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    params.iter().map(eval).collect()
}

/// Lossless coding of the data values under their empirical PMF with rANS.
/// Values must be integers; the parameter is ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct LosslessCodec;

impl Codec for LosslessCodec {
    fn run(&self, data: &[f64], _param: f64) -> Result<(u64, Vec<f64>)> {
        let mut alphabet: Vec<i64> = data.iter().map(|v| v.round() as i64).collect();
        alphabet.sort_unstable();
        alphabet.dedup();
        let mut counts = vec![0.0; alphabet.len()];
        let symbols: Vec<usize> = data
            .iter()
            .map(|v| {
                let i = alphabet.binary_search(&(v.round() as i64)).unwrap();
                counts[i] += 1.0;
                i
            })
            .collect();
        let pmf = quantize_pmf(&counts, crate::coding::pmf::MAX_PRECISION.min(14))?;
        let st = rans_encode(&vec![pmf; symbols.len()], &symbols)?;
        let recon = symbols.iter().map(|&i| alphabet[i] as f64).collect();
        Ok((st.serialized_bits(), recon))
    }
}

/// Scalar ECVQ with `levels` cells; the parameter is the slope λ. Indices are
/// coded with rANS under the fitted cell PMF.
#[derive(Debug, Clone, Copy)]
pub struct EcvqCodec {
    pub levels: usize,
    pub seed: u64,
}

impl Codec for EcvqCodec {
    fn run(&self, data: &[f64], lambda: f64) -> Result<(u64, Vec<f64>)> {
        use rand::SeedableRng;
        let samples: Vec<Vec<f64>> = data.iter().map(|&v| vec![v]).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let fit = ecvq_fit(&samples, self.levels, lambda, EcvqOptions::default(), &mut rng)?;
        let pmf = quantize_pmf(&fit.probs, 14)?;
        let st = rans_encode(&vec![pmf; fit.assignments.len()], &fit.assignments)?;
        let recon = fit.assignments.iter().map(|&i| fit.codebook.vectors()[i][0]).collect();
        Ok((st.serialized_bits(), recon))
    }
}
