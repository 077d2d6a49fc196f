//! Gated mixture-of-experts predictor over an integer alphabet.
//!
//! `p(x | ctx) = Σ_k softmax(G ctx)_k · Q_k(x | loc = E_k ctx, scale_k)`, where
//! `Q_k` is a discretized logistic and both gates and expert locations are
//! linear in the previous `window` symbols.

use rand::Rng;

use super::density::Kernel;
use super::discretized::{bin_edges, bin_mass};
use crate::coding::pmf::{quantize_pmf, QuantizedPmf};
use crate::error::{Error, Result};
use crate::optim::{minimize, OptimOptions, OptimResult};

pub const DEFAULT_EXPERTS: usize = 3;
pub const SCALE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GatedMixturePredictor {
    window: usize,
    experts: usize,
    min: i64,
    max: i64,
    /// Gate weights, `experts × (window + 1)`, bias last.
    gate: Vec<f64>,
    /// Expert location weights, `experts × (window + 1)`, bias last.
    loc: Vec<f64>,
    log_scale: Vec<f64>,
}

impl GatedMixturePredictor {
    /// Randomly initialized predictor; expert intercepts are spread over the support.
    pub fn new<R: Rng + ?Sized>(window: usize, experts: usize, min: i64, max: i64, rng: &mut R) -> Result<Self> {
        if experts == 0 || min >= max {
            return Err(Error::InvalidParameter("need >= 1 expert and min < max".into()));
        }
        let width = window + 1;
        let span = (max - min) as f64;
        let mut gate = vec![0.0; experts * width];
        let mut loc = vec![0.0; experts * width];
        for k in 0..experts {
            for j in 0..width {
                gate[k * width + j] = rng.gen_range(-0.1..0.1);
                loc[k * width + j] = rng.gen_range(-0.1..0.1) * span / 2.0;
            }
            loc[k * width + window] =
                min as f64 + span * (k as f64 + 0.5) / experts as f64;
        }
        let log_scale = vec![(span / (4.0 * experts as f64)).max(0.5).ln(); experts];
        Ok(Self { window, experts, min, max, gate, loc, log_scale })
    }

    pub fn from_params(window: usize, experts: usize, min: i64, max: i64, params: &[f64]) -> Result<Self> {
        let width = window + 1;
        if params.len() != 2 * experts * width + experts || experts == 0 || min >= max {
            return Err(Error::InvalidParameter("gated mixture parameter vector has wrong length".into()));
        }
        let (gate, rest) = params.split_at(experts * width);
        let (loc, log_scale) = rest.split_at(experts * width);
        Ok(Self {
            window,
            experts,
            min,
            max,
            gate: gate.to_vec(),
            loc: loc.to_vec(),
            log_scale: log_scale.to_vec(),
        })
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.gate.clone();
        p.extend_from_slice(&self.loc);
        p.extend_from_slice(&self.log_scale);
        p
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn support(&self) -> (i64, i64) {
        (self.min, self.max)
    }

    fn center(&self) -> f64 {
        (self.min + self.max) as f64 / 2.0
    }

    fn half_span(&self) -> f64 {
        (self.max - self.min) as f64 / 2.0
    }

    /// Normalized features of the `window` values preceding position `i`, bias last.
    fn features(&self, seq: &[i64], i: usize) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.window + 1);
        for lag in (1..=self.window).rev() {
            let v = if i >= lag { seq[i - lag] as f64 } else { self.center() };
            f.push((v - self.center()) / self.half_span());
        }
        f.push(1.0);
        f
    }

    fn gates(&self, feats: &[f64]) -> Vec<f64> {
        let width = self.window + 1;
        let logits: Vec<f64> = (0..self.experts)
            .map(|k| self.gate[k * width..(k + 1) * width].iter().zip(feats).map(|(w, f)| w * f).sum())
            .collect();
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }

    fn expert_loc(&self, k: usize, feats: &[f64]) -> f64 {
        let width = self.window + 1;
        self.loc[k * width..(k + 1) * width].iter().zip(feats).map(|(w, f)| w * f).sum()
    }

    fn scale(&self, k: usize) -> f64 {
        self.log_scale[k].max(SCALE_FLOOR.ln()).exp()
    }

    /// Predictive PMF for position `i` of `seq` (only `seq[..i]` is read).
    pub fn predict_probs(&self, seq: &[i64], i: usize) -> Vec<f64> {
        let feats = self.features(seq, i);
        let pi = self.gates(&feats);
        let mut probs = vec![0.0; (self.max - self.min + 1) as usize];
        for k in 0..self.experts {
            let loc = self.expert_loc(k, &feats);
            let scale = self.scale(k);
            for (idx, x) in (self.min..=self.max).enumerate() {
                let (a, b) = bin_edges(x, self.min, self.max);
                probs[idx] += pi[k] * bin_mass(Kernel::Logistic, loc, scale, a, b).mass;
            }
        }
        probs
    }

    pub fn predict(&self, seq: &[i64], i: usize, precision: u32) -> Result<QuantizedPmf> {
        quantize_pmf(&self.predict_probs(seq, i), precision)
    }

    /// Mean negative log-likelihood (bits/symbol) of `seq` and its gradient.
    pub fn nll_and_grad(&self, seq: &[i64]) -> (f64, Vec<f64>) {
        let width = self.window + 1;
        let mut grad = vec![0.0; self.params().len()];
        let (g_gate, rest) = grad.split_at_mut(self.experts * width);
        let (g_loc, g_ls) = rest.split_at_mut(self.experts * width);
        let mut nll = 0.0;
        for (i, &x) in seq.iter().enumerate() {
            let feats = self.features(seq, i);
            let pi = self.gates(&feats);
            let (a, b) = bin_edges(x.clamp(self.min, self.max), self.min, self.max);
            let masses: Vec<_> = (0..self.experts)
                .map(|k| bin_mass(Kernel::Logistic, self.expert_loc(k, &feats), self.scale(k), a, b))
                .collect();
            let p: f64 = pi.iter().zip(&masses).map(|(w, m)| w * m.mass).sum::<f64>().max(1e-300);
            nll -= p.ln();
            for k in 0..self.experts {
                let r = pi[k] * masses[k].mass / p;
                for j in 0..width {
                    g_gate[k * width + j] -= (r - pi[k]) * feats[j];
                    g_loc[k * width + j] -= pi[k] * masses[k].d_loc / p * feats[j];
                }
                if self.log_scale[k] > SCALE_FLOOR.ln() {
                    g_ls[k] -= pi[k] * masses[k].d_log_scale / p;
                }
            }
        }
        let norm = seq.len().max(1) as f64 * std::f64::consts::LN_2;
        grad.iter_mut().for_each(|g| *g /= norm);
        (nll / norm, grad)
    }

    /// Maximum-likelihood fit by gradient descent with line search.
    pub fn fit(&self, seq: &[i64], opts: OptimOptions) -> Result<(Self, OptimResult)> {
        if seq.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (w, k, min, max) = (self.window, self.experts, self.min, self.max);
        let objective = |p: &[f64]| {
            GatedMixturePredictor::from_params(w, k, min, max, p)
                .expect("length preserved")
                .nll_and_grad(seq)
        };
        let result = minimize(self.params(), objective, opts);
        let fitted = Self::from_params(w, k, min, max, &result.params)?;
        Ok((fitted, result))
    }
}
