//! Two-part and bits-back coding over small latent-variable models.
//!
//! Bits-back item order (encoder): pop `z` under `q(z|x)`, push `x` under
//! `p(x|z)`, push `z` under `p(z)`. The decoder runs the mirror image and
//! returns the items in reverse, leaving the preamble on the stack.

use rand::Rng;

use crate::coding::pmf::{quantize_pmf, QuantizedPmf};
use crate::coding::rans::RansState;
use crate::error::{Error, Result};
use crate::models::density::Density;

pub const BITS_BACK_PRECISION: u32 = 12;

/// Prior `p(z)`, likelihood `p(x|z)` and approximate posterior `q(z|x)` over
/// finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyLatentModel {
    prior: Vec<f64>,
    /// `likelihood[z][x]`
    likelihood: Vec<Vec<f64>>,
    /// `posterior[x][z]`
    posterior: Vec<Vec<f64>>,
}

fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("{what} is not a normalized PMF")));
    }
    Ok(())
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

impl ToyLatentModel {
    pub fn new(prior: Vec<f64>, likelihood: Vec<Vec<f64>>, posterior: Vec<Vec<f64>>) -> Result<Self> {
        check_pmf(&prior, "prior")?;
        if likelihood.len() != prior.len() {
            return Err(Error::ShapeMismatch("one likelihood row per latent".into()));
        }
        let nx = likelihood[0].len();
        for row in &likelihood {
            if row.len() != nx {
                return Err(Error::ShapeMismatch("likelihood rows differ in length".into()));
            }
            check_pmf(row, "likelihood row")?;
        }
        if posterior.len() != nx {
            return Err(Error::ShapeMismatch("one posterior row per symbol".into()));
        }
        for row in &posterior {
            if row.len() != prior.len() {
                return Err(Error::ShapeMismatch("posterior rows must cover the latent alphabet".into()));
            }
            check_pmf(row, "posterior row")?;
        }
        Ok(Self { prior, likelihood, posterior })
    }

    /// Model whose `q(z|x)` is the exact posterior.
    pub fn with_exact_posterior(prior: Vec<f64>, likelihood: Vec<Vec<f64>>) -> Result<Self> {
        let nx = likelihood.first().map_or(0, |r| r.len());
        let posterior = (0..nx)
            .map(|x| {
                let w: Vec<f64> = prior.iter().zip(&likelihood).map(|(pz, row)| pz * row.get(x).copied().unwrap_or(0.0)).collect();
                if w.iter().sum::<f64>() > 0.0 {
                    normalized(&w)
                } else {
                    vec![1.0 / prior.len() as f64; prior.len()]
                }
            })
            .collect();
        Self::new(prior, likelihood, posterior)
    }

    /// Random model with `q` a blend of the exact posterior and a random
    /// distribution (`mix` = 0 keeps `q` exact).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nz: usize, nx: usize, mix: f64) -> Result<Self> {
        let mut draw = |n: usize| normalized(&(0..n).map(|_| rng.gen_range(0.05..1.0)).collect::<Vec<_>>());
        let prior = draw(nz);
        let likelihood: Vec<Vec<f64>> = (0..nz).map(|_| draw(nx)).collect();
        let noise: Vec<Vec<f64>> = (0..nx).map(|_| draw(nz)).collect();
        let exact = Self::with_exact_posterior(prior, likelihood)?;
        let posterior = (0..nx)
            .map(|x| {
                let e = exact.exact_posterior(x);
                e.iter().zip(&noise[x]).map(|(a, b)| (1.0 - mix) * a + mix * b).collect()
            })
            .collect();
        Self::new(exact.prior, exact.likelihood, posterior)
    }

    pub fn num_latents(&self) -> usize {
        self.prior.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.likelihood[0].len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn likelihood(&self, z: usize) -> &[f64] {
        &self.likelihood[z]
    }

    pub fn posterior(&self, x: usize) -> &[f64] {
        &self.posterior[x]
    }

    pub fn marginal(&self, x: usize) -> f64 {
        self.prior.iter().zip(&self.likelihood).map(|(pz, row)| pz * row[x]).sum()
    }

    pub fn exact_posterior(&self, x: usize) -> Vec<f64> {
        let px = self.marginal(x);
        self.prior.iter().zip(&self.likelihood).map(|(pz, row)| pz * row[x] / px).collect()
    }

    /// Draws `(z, x)` from the generative model.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let z = sample_index(&self.prior, rng);
        (z, sample_index(&self.likelihood[z], rng))
    }

    fn check_x(&self, x: usize) -> Result<()> {
        if x >= self.num_symbols() {
            return Err(Error::SymbolOutOfRange { symbol: x, alphabet: self.num_symbols() });
        }
        Ok(())
    }
}

fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// `E_q[-log2 p(z, x)] - H[q(z|x)]` in bits; infinite if `q` puts mass on an
/// impossible configuration.
pub fn nelbo(model: &ToyLatentModel, x: usize) -> f64 {
    let mut total = 0.0;
    for (z, &q) in model.posterior[x].iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let joint = model.prior[z] * model.likelihood[z][x];
        if joint == 0.0 {
            return f64::INFINITY;
        }
        total += q * (q.log2() - joint.log2());
    }
    total
}

/// Latent minimizing `-log2 p(z) - log2 p(x|z)` (lowest index on ties) and that length.
pub fn two_part_length(model: &ToyLatentModel, x: usize) -> Result<(usize, f64)> {
    model.check_x(x)?;
    let mut best: Option<(usize, f64)> = None;
    for z in 0..model.num_latents() {
        let joint = model.prior[z] * model.likelihood[z][x];
        if joint == 0.0 {
            continue;
        }
        let len = -joint.log2();
        if best.map_or(true, |(_, b)| len < b) {
            best = Some((z, len));
        }
    }
    best.ok_or_else(|| Error::Unencodable(format!("no latent explains symbol {x}")))
}

/// Quantized coding tables shared by encoder and decoder.
#[derive(Debug, Clone)]
pub struct CodingTables {
    pub prior: QuantizedPmf,
    pub likelihood: Vec<QuantizedPmf>,
    pub posterior: Vec<QuantizedPmf>,
}

impl CodingTables {
    pub fn new(model: &ToyLatentModel, precision: u32) -> Result<Self> {
        Ok(Self {
            prior: quantize_pmf(&model.prior, precision)?,
            likelihood: model.likelihood.iter().map(|r| quantize_pmf(r, precision)).collect::<Result<_>>()?,
            posterior: model.posterior.iter().map(|r| quantize_pmf(r, precision)).collect::<Result<_>>()?,
        })
    }
}

/// Two-part code of a sequence on a rANS stack; decodes in forward order.
pub fn two_part_encode(model: &ToyLatentModel, xs: &[usize], precision: u32) -> Result<RansState> {
    let tables = CodingTables::new(model, precision)?;
    let mut st = RansState::new();
    for &x in xs.iter().rev() {
        let (z, _) = two_part_length(model, x)?;
        st.push(x, &tables.likelihood[z])?;
        st.push(z, &tables.prior)?;
    }
    Ok(st)
}

pub fn two_part_decode(model: &ToyLatentModel, n: usize, mut st: RansState, precision: u32) -> Result<Vec<usize>> {
    let tables = CodingTables::new(model, precision)?;
    (0..n)
        .map(|_| {
            let z = st.pop(&tables.prior)?;
            st.pop(&tables.likelihood[z])
        })
        .collect()
}

/// Per-item bits-back accounting. Information contents use the quantized
/// coding tables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BitsBackLedger {
    /// Measured shrinkage of the stack while sampling `z`.
    pub aux_bits_consumed: f64,
    pub prior_bits: f64,
    pub likelihood_bits: f64,
    /// `-log2 q(z|x)`.
    pub recovered_bits: f64,
}

impl BitsBackLedger {
    pub fn net_bits(&self) -> f64 {
        self.prior_bits + self.likelihood_bits - self.recovered_bits
    }
}

/// Bits-back chain output.
#[derive(Debug, Clone)]
pub struct BitsBackChain {
    pub state: RansState,
    pub ledger: Vec<BitsBackLedger>,
}

impl BitsBackChain {
    pub fn total_net_bits(&self) -> f64 {
        self.ledger.iter().map(BitsBackLedger::net_bits).sum()
    }
}

pub fn bitsback_encode(
    model: &ToyLatentModel,
    xs: &[usize],
    initial: RansState,
    precision: u32,
) -> Result<BitsBackChain> {
    let tables = CodingTables::new(model, precision)?;
    bitsback_encode_with(&tables, xs, initial)
}

pub fn bitsback_encode_with(tables: &CodingTables, xs: &[usize], initial: RansState) -> Result<BitsBackChain> {
    let mut st = initial;
    let mut ledger = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let q = tables
            .posterior
            .get(x)
            .ok_or(Error::SymbolOutOfRange { symbol: x, alphabet: tables.posterior.len() })?;
        let before = st.bit_len() as f64;
        let z = st.pop(q).map_err(|e| match e {
            Error::StreamExhausted => Error::InitialBitsExhausted { items: i },
            e => e,
        })?;
        let aux_bits_consumed = before - st.bit_len() as f64;
        st.push(x, &tables.likelihood[z])?;
        st.push(z, &tables.prior)?;
        ledger.push(BitsBackLedger {
            aux_bits_consumed,
            prior_bits: tables.prior.info_bits(z),
            likelihood_bits: tables.likelihood[z].info_bits(x),
            recovered_bits: q.info_bits(z),
        });
    }
    Ok(BitsBackChain { state: st, ledger })
}

/// Decodes `n` items; returns them in original order with the recovered preamble.
pub fn bitsback_decode(
    model: &ToyLatentModel,
    n: usize,
    state: RansState,
    precision: u32,
) -> Result<(Vec<usize>, RansState)> {
    let tables = CodingTables::new(model, precision)?;
    bitsback_decode_with(&tables, n, state)
}

pub fn bitsback_decode_with(tables: &CodingTables, n: usize, mut st: RansState) -> Result<(Vec<usize>, RansState)> {
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let z = st.pop(&tables.prior)?;
        let x = st.pop(&tables.likelihood[z])?;
        st.push(z, &tables.posterior[x])?;
        xs.push(x);
    }
    xs.reverse();
    Ok((xs, st))
}

/// Latent bins given by their inner edges; the first and last bins extend
/// to infinity so no mass is lost. Each bin has a representative center.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    edges: Vec<f64>,
    centers: Vec<f64>,
    /// Range outside which mass counts as uncovered.
    range: (f64, f64),
}

impl LatentGrid {
    /// Bins of width `delta` centered at multiples of `delta` covering `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidParameter("grid needs delta > 0 and lo <= hi".into()));
        }
        let (kmin, kmax) = ((lo / delta).round() as i64, (hi / delta).round() as i64);
        let centers: Vec<f64> = (kmin..=kmax).map(|k| k as f64 * delta).collect();
        let edges = (kmin + 1..=kmax).map(|k| (k as f64 - 0.5) * delta).collect();
        Ok(Self { edges, centers, range: ((kmin as f64 - 0.5) * delta, (kmax as f64 + 0.5) * delta) })
    }

    /// `bins` bins of equal mass under `prior`: a uniform grid of width
    /// `1 / bins` in the prior's CDF coordinate. Centers are bin medians.
    pub fn equal_mass(prior: &Density, bins: usize) -> Result<Self> {
        prior.validate()?;
        if bins == 0 {
            return Err(Error::InvalidParameter("need at least one bin".into()));
        }
        let edges = (1..bins).map(|k| quantile(prior, k as f64 / bins as f64)).collect();
        let centers = (0..bins).map(|k| quantile(prior, (k as f64 + 0.5) / bins as f64)).collect();
        Ok(Self { edges, centers, range: (f64::NEG_INFINITY, f64::INFINITY) })
    }

    pub fn num_bins(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }
}

/// Inverse CDF by bisection.
fn quantile(d: &Density, p: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    while d.cdf(lo) > p {
        lo *= 2.0;
    }
    while d.cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Grid PMF of a density; the unbounded outer bins absorb the tails.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPmf {
    pub probs: Vec<f64>,
    /// Mass outside the grid's nominal range.
    pub tail_mass: f64,
}

impl GridPmf {
    pub fn covers(&self, tol: f64) -> bool {
        self.tail_mass <= tol
    }

    /// False when a single bin holds all but `tol` of the mass.
    pub fn resolves(&self, tol: f64) -> bool {
        self.probs.iter().cloned().fold(0.0, f64::max) <= 1.0 - tol
    }
}

pub const COVERAGE_TOLERANCE: f64 = 1e-3;

pub fn discretize_latent_space(density: &Density, grid: &LatentGrid) -> Result<GridPmf> {
    density.validate()?;
    let mut cdf: Vec<f64> = Vec::with_capacity(grid.num_bins() + 1);
    cdf.push(0.0);
    cdf.extend(grid.edges.iter().map(|&e| density.cdf(e)));
    cdf.push(1.0);
    let mut probs: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    let (lo, hi) = grid.range;
    let tail_mass = if lo.is_finite() { density.cdf(lo) } else { 0.0 } + if hi.is_finite() { density.sf(hi) } else { 0.0 };
    Ok(GridPmf { probs, tail_mass })
}

/// Gaussian toy: `z ~ N(0, 1)`, `x | z ~ round(N(a·z, s²))` on `[xmin, xmax]`,
/// with `q(z|x)` the Gaussian posterior of the continuous model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianToy {
    pub gain: f64,
    pub noise: f64,
    pub xmin: i64,
    pub xmax: i64,
}

impl GaussianToy {
    pub fn posterior(&self, x: i64) -> Result<Density> {
        let (a, s2) = (self.gain, self.noise * self.noise);
        let var = s2 / (a * a + s2);
        Density::gaussian(a * x as f64 / (a * a + s2), var.sqrt())
    }

    /// Discrete latent model on `grid`; `x` symbols index `xmin..=xmax`.
    /// Returns the model and the worst posterior tail mass.
    pub fn on_grid(&self, grid: &LatentGrid) -> Result<(ToyLatentModel, f64)> {
        let prior = discretize_latent_space(&Density::gaussian(0.0, 1.0)?, grid)?;
        let likelihood = grid
            .centers()
            .iter()
            .map(|&z| {
                let d = crate::models::DiscretizedDensity::new(
                    Density::gaussian(self.gain * z, self.noise)?,
                    self.xmin,
                    self.xmax,
                )?;
                Ok(d.probs())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst_tail = prior.tail_mass;
        let posterior = (self.xmin..=self.xmax)
            .map(|x| {
                let g = discretize_latent_space(&self.posterior(x)?, grid)?;
                worst_tail = worst_tail.max(g.tail_mass);
                Ok(g.probs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((ToyLatentModel::new(prior.probs, likelihood, posterior)?, worst_tail))
    }

    /// Draws a data symbol index from the continuous generative model.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let e: f64 = rng.sample(rand_distr::StandardNormal);
        let x = (self.gain * z + self.noise * e).round() as i64;
        (x.clamp(self.xmin, self.xmax) - self.xmin) as usize
    }
}
