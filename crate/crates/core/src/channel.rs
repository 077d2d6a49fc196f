//! Minimal random coding: sending a sample of `q` with shared-seed prior
//! candidates and an importance-sampled index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Prior or target distribution for channel simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum SimDist {
    Gaussian { mean: f64, std: f64 },
    /// Finite support; `values` distinct.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl SimDist {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidParameter("gaussian needs finite mean and std > 0".into()));
        }
        Ok(SimDist::Gaussian { mean, std })
    }

    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let s: f64 = probs.iter().sum();
        if values.len() != probs.len() || values.is_empty() || probs.iter().any(|p| *p < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution("discrete distribution needs matching values and probabilities".into()));
        }
        Ok(SimDist::Discrete { values, probs })
    }

    /// Natural log of the density (Gaussian) or mass (discrete).
    pub fn ln_density(&self, z: f64) -> f64 {
        match self {
            SimDist::Gaussian { mean, std } => {
                let t = (z - mean) / std;
                -0.5 * t * t - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            SimDist::Discrete { values, probs } => {
                values.iter().position(|v| *v == z).map_or(f64::NEG_INFINITY, |i| probs[i].ln())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SimDist::Gaussian { mean, std } => mean + std * rng.sample::<f64, _>(rand_distr::StandardNormal),
            SimDist::Discrete { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

/// `KL(q ‖ p)` in bits: closed form for Gaussians, enumeration for discrete pairs.
pub fn kl_bits(q: &SimDist, p: &SimDist) -> Result<f64> {
    match (q, p) {
        (SimDist::Gaussian { mean: mq, std: sq }, SimDist::Gaussian { mean: mp, std: sp }) => {
            let nats = (sp / sq).ln() + (sq * sq + (mq - mp).powi(2)) / (2.0 * sp * sp) - 0.5;
            Ok(nats / std::f64::consts::LN_2)
        }
        (SimDist::Discrete { values, probs }, SimDist::Discrete { .. }) => {
            let mut kl = 0.0;
            for (v, &qv) in values.iter().zip(probs) {
                if qv == 0.0 {
                    continue;
                }
                let lp = p.ln_density(*v);
                if lp == f64::NEG_INFINITY {
                    return Err(Error::Unencodable("target not absolutely continuous w.r.t. prior".into()));
                }
                kl += qv * (qv.ln() - lp);
            }
            Ok(kl.max(0.0) / std::f64::consts::LN_2)
        }
        _ => Err(Error::InvalidParameter("prior and target must be the same kind".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrcConfig {
    pub prior: SimDist,
    pub target: SimDist,
    /// Slack bits `t`.
    pub slack: u32,
    pub seed: u64,
}

impl MrcConfig {
    /// `ceil(KL) + t`, the index length in bits.
    pub fn index_bits(&self) -> Result<u32> {
        let kl = kl_bits(&self.target, &self.prior)?;
        let bits = kl.ceil() as u32 + self.slack;
        if bits > 40 {
            return Err(Error::InvalidParameter(format!("{bits}-bit index is too many candidates")));
        }
        Ok(bits)
    }

    /// `N = 2^(ceil(KL) + t)`.
    pub fn num_candidates(&self) -> Result<u64> {
        Ok(1u64 << self.index_bits()?)
    }

    /// Candidate `n`, drawn from the prior with stream `n` of the shared generator.
    pub fn candidate(&self, n: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(n);
        self.prior.sample(&mut rng)
    }

    pub fn candidates(&self) -> Result<Vec<f64>> {
        let n = self.num_candidates()?;
        #[cfg(feature = "parallel")]
        return Ok((0..n).into_par_iter().map(|i| self.candidate(i)).collect());
        #[cfg(not(feature = "parallel"))]
        Ok((0..n).map(|i| self.candidate(i)).collect())
    }
}

/// Encoded index and its fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MrcPayload {
    pub index: u64,
    pub bits: u32,
}

/// Picks candidate `k` with probability `w_k / Σ w`, `w_n = q(z_n) / p(z_n)`.
pub fn mrc_encode<R: Rng + ?Sized>(cfg: &MrcConfig, rng: &mut R) -> Result<MrcPayload> {
    let bits = cfg.index_bits()?;
    let cands = cfg.candidates()?;
    let logw: Vec<f64> = cands.iter().map(|&z| cfg.target.ln_density(z) - cfg.prior.ln_density(z)).collect();
    let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY || mx.is_nan() {
        return Err(Error::Unencodable("every importance weight is zero".into()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - mx).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut index = w.iter().rposition(|&v| v > 0.0).unwrap() as u64;
    for (i, &v) in w.iter().enumerate() {
        if u < v {
            index = i as u64;
            break;
        }
        u -= v;
    }
    Ok(MrcPayload { index, bits })
}

pub fn mrc_decode(cfg: &MrcConfig, index: u64) -> Result<f64> {
    let n = cfg.num_candidates()?;
    if index >= n {
        return Err(Error::IndexOutOfRange { index, count: n });
    }
    Ok(cfg.candidate(index))
}

/// `I + log2(I + 1) + 5`.
pub fn rcc_cost_bound(mutual_information: f64) -> f64 {
    mutual_information + (mutual_information + 1.0).log2() + 5.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_cfg(seed: u64) -> MrcConfig {
        MrcConfig {
            prior: SimDist::gaussian(0.0, 1.0).unwrap(),
            target: SimDist::gaussian(0.5, 0.8).unwrap(),
            slack: 8,
            seed,
        }
    }

    #[test]
    fn cost_bound_values() {
        assert_eq!(rcc_cost_bound(0.0), 5.0);
        assert_eq!(rcc_cost_bound(1.0), 7.0);
        assert_eq!(rcc_cost_bound(3.0), 10.0);
    }

    #[test]
    fn gaussian_kl_and_candidate_count() {
        let cfg = gauss_cfg(1);
        let kl = kl_bits(&cfg.target, &cfg.prior).unwrap();
        let nats = (1.0f64 / 0.8).ln() + (0.64 + 0.25) / 2.0 - 0.5;
        assert!((kl - nats / std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(cfg.num_candidates().unwrap(), 512);
    }

    #[test]
    fn decoder_matches_encoder_candidates() {
        let cfg = gauss_cfg(42);
        let cands = cfg.candidates().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let p = mrc_encode(&cfg, &mut rng).unwrap();
            assert_eq!(p.bits, 9);
            assert_eq!(mrc_decode(&cfg, p.index).unwrap().to_bits(), cands[p.index as usize].to_bits());
        }
        assert!(matches!(mrc_decode(&cfg, 512), Err(Error::IndexOutOfRange { index: 512, count: 512 })));
    }

    #[test]
    fn seed_changes_candidates() {
        let a = gauss_cfg(1).candidates().unwrap();
        let b = gauss_cfg(2).candidates().unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn equal_prior_and_target_is_uniform() {
        let p = SimDist::gaussian(0.0, 1.0).unwrap();
        let cfg = MrcConfig { prior: p.clone(), target: p, slack: 3, seed: 5 };
        assert_eq!(cfg.num_candidates().unwrap(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0u64; 8];
        for _ in 0..80_000 {
            counts[mrc_encode(&cfg, &mut rng).unwrap().index as usize] += 1;
        }
        let p = crate::stats::chi_square_p_value(&counts, &[0.125; 8]).unwrap();
        assert!(p > 1e-3);
    }

    #[test]
    fn single_candidate() {
        let p = SimDist::gaussian(0.0, 1.0).unwrap();
        let cfg = MrcConfig { prior: p.clone(), target: p, slack: 0, seed: 9 };
        assert_eq!(cfg.num_candidates().unwrap(), 1);
        assert_eq!(mrc_decode(&cfg, 0).unwrap(), cfg.candidate(0));
    }

    #[test]
    fn point_mass_target_is_deterministic() {
        let prior = SimDist::discrete(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4]).unwrap();
        let target = SimDist::discrete(vec![2.0], vec![1.0]).unwrap();
        let cfg = MrcConfig { prior, target, slack: 4, seed: 3 };
        assert_eq!(cfg.index_bits().unwrap(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let k = mrc_encode(&cfg, &mut rng).unwrap().index;
            assert_eq!(mrc_decode(&cfg, k).unwrap(), 2.0);
        }
    }

    #[test]
    fn unreachable_target_is_unencodable() {
        let prior = SimDist::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let target = SimDist::discrete(vec![5.0], vec![1.0]).unwrap();
        let cfg = MrcConfig { prior, target, slack: 2, seed: 0 };
        assert!(matches!(mrc_encode(&cfg, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::Unencodable(_))));
    }
}
