//! Linear transform codec trained on the noisy-relaxation Lagrangian
//! `E[-log2 p̃(f x + u)] + λ E‖x - g(f x + u)‖²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coding::{QuantizedPmf, RansState};
use crate::error::{Error, Result};
use crate::models::discretized::bin_mass;
use crate::models::{Density, DiscretizedDensity, Kernel};
use crate::optim::{minimize_lbfgs, OptimOptions};

const LN2: f64 = std::f64::consts::LN_2;
/// Probability floor inside `-log2`, keeps far-tail bins finite.
const MASS_FLOOR: f64 = 1e-300;
pub const PRIOR_PRECISION: u32 = 16;
const MAX_BINS: i64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surrogate {
    /// Additive uniform noise in both rate and distortion.
    Noise,
    /// Noise for the rate, rounding with identity derivative for the distortion.
    NoiseSte,
}

/// Analysis `f` (d×N), synthesis `g` (N×d), per-latent logistic prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCodec {
    n: usize,
    d: usize,
    f: Vec<f64>,
    g: Vec<f64>,
    loc: Vec<f64>,
    log_scale: Vec<f64>,
    lambda: f64,
}

impl LinearCodec {
    pub fn from_params(n: usize, d: usize, lambda: f64, params: &[f64]) -> Result<Self> {
        if d == 0 || d > n || params.len() != 2 * n * d + 2 * d {
            return Err(Error::ShapeMismatch(format!("{} params for N = {n}, d = {d}", params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) || !(lambda >= 0.0) {
            return Err(Error::Numeric("non-finite codec parameter".into()));
        }
        let (f, rest) = params.split_at(n * d);
        let (g, rest) = rest.split_at(n * d);
        let (loc, log_scale) = rest.split_at(d);
        Ok(Self { n, d, f: f.to_vec(), g: g.to_vec(), loc: loc.to_vec(), log_scale: log_scale.to_vec(), lambda })
    }

    pub fn params(&self) -> Vec<f64> {
        [&self.f[..], &self.g, &self.loc, &self.log_scale].concat()
    }

    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn latent_dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Row `j` of `f`.
    pub fn analysis_row(&self, j: usize) -> &[f64] {
        &self.f[j * self.n..(j + 1) * self.n]
    }

    pub fn analysis(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d).map(|j| dot(self.analysis_row(j), x)).collect()
    }

    pub fn synthesis(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.g[i * self.d..(i + 1) * self.d], v)).collect()
    }

    pub fn prior(&self, j: usize) -> Result<Density> {
        Density::logistic(self.loc[j], self.log_scale[j].exp())
    }

    /// Integer support of latent `j`: 30 prior scales around the location,
    /// at most 2^14 bins.
    pub fn support(&self, j: usize) -> (i64, i64) {
        let s = self.log_scale[j].exp();
        let half = (30.0 * s).ceil().clamp(1.0, (MAX_BINS / 2) as f64) as i64;
        let c = self.loc[j].round() as i64;
        (c - half, c + half)
    }

    pub fn latent_pmf(&self, j: usize) -> Result<(QuantizedPmf, i64)> {
        let (lo, hi) = self.support(j);
        let pmf = DiscretizedDensity::new(self.prior(j)?, lo, hi)?.quantize(PRIOR_PRECISION)?;
        Ok((pmf, lo))
    }

    /// Rounded latents, clipped to the prior support.
    pub fn quantize(&self, x: &[f64]) -> Vec<i64> {
        self.analysis(x)
            .iter()
            .enumerate()
            .map(|(j, y)| {
                let (lo, hi) = self.support(j);
                (y.round() as i64).clamp(lo, hi)
            })
            .collect()
    }

    pub fn encode(&self, data: &[Vec<f64>]) -> Result<RansState> {
        let pmfs = (0..self.d).map(|j| self.latent_pmf(j)).collect::<Result<Vec<_>>>()?;
        let mut st = RansState::new();
        for x in data.iter().rev() {
            let z = self.quantize(x);
            for j in (0..self.d).rev() {
                st.push((z[j] - pmfs[j].1) as usize, &pmfs[j].0)?;
            }
        }
        Ok(st)
    }

    pub fn decode(&self, mut state: RansState, count: usize) -> Result<Vec<Vec<f64>>> {
        let pmfs = (0..self.d).map(|j| self.latent_pmf(j)).collect::<Result<Vec<_>>>()?;
        (0..count)
            .map(|_| {
                let z = pmfs
                    .iter()
                    .map(|(pmf, lo)| Ok((state.pop(pmf)? as i64 + lo) as f64))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.synthesis(&z))
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Monte-Carlo surrogate loss with a fixed set of noise draws, so that the
/// objective is a deterministic function of the parameters.
pub struct SurrogateObjective<'a> {
    data: &'a [Vec<f64>],
    n: usize,
    d: usize,
    lambda: f64,
    surrogate: Surrogate,
    samples: usize,
    noise: Vec<f64>,
    /// Entries of `f` and `g` held at their initial value.
    frozen: Option<Vec<bool>>,
}

/// Rate and distortion parts of a surrogate evaluation, per vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateTerms {
    pub rate: f64,
    pub distortion: f64,
}

impl<'a> SurrogateObjective<'a> {
    pub fn new(data: &'a [Vec<f64>], d: usize, lambda: f64, surrogate: Surrogate, samples: usize, seed: u64) -> Result<Self> {
        let n = data.first().ok_or(Error::EmptyInput)?.len();
        if data.iter().any(|x| x.len() != n) || n == 0 {
            return Err(Error::ShapeMismatch("vectors of unequal length".into()));
        }
        if d == 0 || d > n || samples == 0 {
            return Err(Error::InvalidParameter(format!("latent dim {d}, {samples} noise samples")));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter("λ must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = (0..data.len() * samples * d).map(|_| rng.gen::<f64>() - 0.5).collect();
        Ok(Self { data, n, d, lambda, surrogate, samples, noise, frozen: None })
    }

    /// Holds the off-diagonal entries of `f` and `g` fixed.
    pub fn diagonal_only(mut self) -> Self {
        let (n, d) = (self.n, self.d);
        let mut frozen = vec![false; 2 * n * d + 2 * d];
        for j in 0..d {
            for k in 0..n {
                frozen[j * n + k] = j != k;
                frozen[n * d + k * d + j] = j != k;
            }
        }
        self.frozen = Some(frozen);
        self
    }

    pub fn num_params(&self) -> usize {
        2 * self.n * self.d + 2 * self.d
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        self.eval(params, false).0
    }

    pub fn terms(&self, params: &[f64]) -> SurrogateTerms {
        let t = self.eval(params, false).2;
        t
    }

    /// Loss and gradient.
    pub fn value_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (v, g, _) = self.eval(params, true);
        (v, g)
    }

    fn eval(&self, params: &[f64], want_grad: bool) -> (f64, Vec<f64>, SurrogateTerms) {
        let (n, d) = (self.n, self.d);
        let f = &params[..n * d];
        let g = &params[n * d..2 * n * d];
        let loc = &params[2 * n * d..2 * n * d + d];
        let ls = &params[2 * n * d + d..];
        let scale: Vec<f64> = ls.iter().map(|v| v.exp()).collect();
        let mut grad = vec![0.0; params.len()];
        let (mut rate, mut dist) = (0.0, 0.0);
        let mut v = vec![0.0; d];
        let mut dv = vec![0.0; d];
        let mut e = vec![0.0; n];
        let w = 1.0 / (self.data.len() * self.samples) as f64;
        for (i, x) in self.data.iter().enumerate() {
            let y: Vec<f64> = (0..d).map(|j| dot(&f[j * n..(j + 1) * n], x)).collect();
            let mut dy = vec![0.0; d];
            let ste = self.surrogate == Surrogate::NoiseSte;
            if ste {
                // distortion from rounded latents, derivative passed straight through
                let r: Vec<f64> = y.iter().map(|t| t.round()).collect();
                let dd = self.distortion_term(g, x, &r, &mut e, &mut dv, &mut grad, self.samples as f64 * w, want_grad);
                dist += dd * self.samples as f64 * w;
                for j in 0..d {
                    dy[j] += dv[j];
                }
            }
            for s in 0..self.samples {
                let u = &self.noise[(i * self.samples + s) * d..(i * self.samples + s + 1) * d];
                for j in 0..d {
                    v[j] = y[j] + u[j];
                    let m = bin_mass(Kernel::Logistic, loc[j], scale[j], v[j] - 0.5, v[j] + 0.5);
                    let p = m.mass.max(MASS_FLOOR);
                    rate -= w * p.log2();
                    if want_grad && m.mass > MASS_FLOOR {
                        let c = -w / (p * LN2);
                        dy[j] += c * m.d_shift;
                        grad[2 * n * d + j] += c * m.d_loc;
                        grad[2 * n * d + d + j] += c * m.d_log_scale;
                    }
                }
                if !ste {
                    let dd = self.distortion_term(g, x, &v, &mut e, &mut dv, &mut grad, w, want_grad);
                    dist += w * dd;
                    for j in 0..d {
                        dy[j] += dv[j];
                    }
                }
            }
            if want_grad {
                for j in 0..d {
                    for k in 0..n {
                        grad[j * n + k] += dy[j] * x[k];
                    }
                }
            }
        }
        if let Some(fr) = &self.frozen {
            for (gi, &z) in grad.iter_mut().zip(fr) {
                if z {
                    *gi = 0.0;
                }
            }
        }
        (rate + self.lambda * dist, grad, SurrogateTerms { rate, distortion: dist })
    }

    /// `‖x - g v‖²`; accumulates `λ w ∂/∂g` into `grad` and leaves
    /// `λ w ∂/∂v` in `dv`.
    #[allow(clippy::too_many_arguments)]
    fn distortion_term(&self, g: &[f64], x: &[f64], v: &[f64], e: &mut [f64], dv: &mut [f64], grad: &mut [f64], w: f64, want_grad: bool) -> f64 {
        let (n, d) = (self.n, self.d);
        let mut sq = 0.0;
        for i in 0..n {
            e[i] = x[i] - dot(&g[i * d..(i + 1) * d], v);
            sq += e[i] * e[i];
        }
        if want_grad {
            let c = -2.0 * self.lambda * w;
            dv.iter_mut().for_each(|t| *t = 0.0);
            for i in 0..n {
                for j in 0..d {
                    grad[n * d + i * d + j] += c * e[i] * v[j];
                    dv[j] += c * e[i] * g[i * d + j];
                }
            }
        }
        sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Random orthonormal rows for `f`, `g = fᵀ`.
    Orthonormal,
    /// `f` and `g` the leading identity block.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub latent_dim: Option<usize>,
    pub surrogate: Surrogate,
    pub noise_samples: usize,
    pub seed: u64,
    pub init: Init,
    /// Train only the diagonal of `f` and `g` (per-dimension scaling).
    pub diagonal_only: bool,
    pub optim: OptimOptions,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            latent_dim: None,
            surrogate: Surrogate::Noise,
            noise_samples: 8,
            seed: 0,
            init: Init::Orthonormal,
            diagonal_only: false,
            optim: OptimOptions { max_iter: 4000, rel_tol: 1e-10, initial_step: 1e-2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub codec: LinearCodec,
    /// Surrogate loss after every accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub terms: SurrogateTerms,
}

/// Random `d × n` matrix with orthonormal rows (Gram-Schmidt).
pub fn random_orthonormal<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut r: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for q in &rows {
            let c = dot(q, &r);
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-8 {
            rows.push(r.iter().map(|v| v / norm).collect());
        }
    }
    rows.concat()
}

pub fn initial_params(data: &[Vec<f64>], d: usize, init: Init, seed: u64) -> Result<Vec<f64>> {
    let n = data.first().ok_or(Error::EmptyInput)?.len();
    let f = match init {
        Init::Orthonormal => random_orthonormal(d, n, &mut ChaCha8Rng::seed_from_u64(seed)),
        Init::Identity => (0..d * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect(),
    };
    let mut g = vec![0.0; n * d];
    for j in 0..d {
        for k in 0..n {
            g[k * d + j] = f[j * n + k];
        }
    }
    let mut loc = vec![0.0; d];
    let mut log_scale = vec![0.0; d];
    for j in 0..d {
        let ys: Vec<f64> = data.iter().map(|x| dot(&f[j * n..(j + 1) * n], x)).collect();
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64;
        loc[j] = m;
        log_scale[j] = (var.sqrt() * 3f64.sqrt() / std::f64::consts::PI).max(0.1).ln();
    }
    Ok([f, g, loc, log_scale].concat())
}

/// Minimizes the surrogate loss by L-BFGS with backtracking.
pub fn train_linear_codec(data: &[Vec<f64>], lambda: f64, opts: &TrainOptions) -> Result<TrainReport> {
    let n = data.first().ok_or(Error::EmptyInput)?.len();
    let d = opts.latent_dim.unwrap_or(n);
    let mut obj = SurrogateObjective::new(data, d, lambda, opts.surrogate, opts.noise_samples, opts.seed)?;
    if opts.diagonal_only {
        obj = obj.diagonal_only();
    }
    let init = initial_params(data, d, opts.init, opts.seed)?;
    let res = minimize_lbfgs(init, |p| obj.value_and_grad(p), 10, opts.optim);
    if !res.value.is_finite() {
        return Err(Error::Numeric("surrogate loss is not finite at the initial point".into()));
    }
    let terms = obj.terms(&res.params);
    Ok(TrainReport {
        codec: LinearCodec::from_params(n, d, lambda, &res.params)?,
        history: res.history,
        converged: res.converged,
        terms,
    })
}

/// Held-out performance with hard rounding and the real coder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueEval {
    /// rANS bits per vector, termination included.
    pub rate: f64,
    /// Mean squared error per vector (summed over dimensions).
    pub distortion: f64,
    /// `Σ -log2 Q(ẑ)` under the quantized prior, per vector.
    pub info_bits: f64,
    /// Surrogate rate and distortion of the same data, one noise draw set.
    pub surrogate: SurrogateTerms,
}

impl TrueEval {
    pub fn lagrangian(&self, lambda: f64) -> f64 {
        self.rate + lambda * self.distortion
    }
}

pub fn eval_codec_true(codec: &LinearCodec, data: &[Vec<f64>]) -> Result<TrueEval> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = data.len() as f64;
    let st = codec.encode(data)?;
    let recon = codec.decode(st.clone(), data.len())?;
    let distortion = data
        .iter()
        .zip(&recon)
        .map(|(x, r)| x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
        / m;
    let pmfs = (0..codec.d).map(|j| codec.latent_pmf(j)).collect::<Result<Vec<_>>>()?;
    let info: f64 = data
        .iter()
        .map(|x| codec.quantize(x).iter().zip(&pmfs).map(|(z, (p, lo))| p.info_bits((z - lo) as usize)).sum::<f64>())
        .sum();
    let obj = SurrogateObjective::new(data, codec.d, codec.lambda.max(f64::MIN_POSITIVE), Surrogate::Noise, 1, 7)?;
    Ok(TrueEval {
        rate: st.serialized_bits() as f64 / m,
        distortion,
        info_bits: info / m,
        surrogate: obj.terms(&codec.params()),
    })
}

/// Correlated Gaussian vectors `x = L ε`, `L Lᵀ = Σ`.
pub fn correlated_gaussian<R: Rng + ?Sized>(cov: &[Vec<f64>], count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let n = cov.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return Err(Error::InvalidParameter("covariance not positive definite".into()));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok((0..count)
        .map(|_| {
            let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            (0..n).map(|i| dot(&l[i][..=i], &eps[..=i])).collect()
        })
        .collect())
}

/// Sample covariance of `f x` over the data.
pub fn latent_covariance(codec: &LinearCodec, data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let ys: Vec<Vec<f64>> = data.iter().map(|x| codec.analysis(x)).collect();
    let d = codec.d;
    let m = ys.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| ys.iter().map(|y| y[j]).sum::<f64>() / m).collect();
    (0..d)
        .map(|a| (0..d).map(|b| ys.iter().map(|y| (y[a] - mean[a]) * (y[b] - mean[b])).sum::<f64>() / m).collect())
        .collect()
}
