//! Multi-stage residual coder with additive reconstruction:
//! `x̂_t = x̂_{t-1} + Δ_t ẑ_t`, `ẑ_t = round((x - x̂_{t-1}) / Δ_t)`.

use super::band::BandModel;
use crate::coding::RansState;
use crate::error::{Error, Result};
use crate::wire::Reader;

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressiveCoder {
    steps: Vec<f64>,
}

/// Partial reconstruction and how many stages went into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<f64>,
    pub stages: usize,
}

impl ProgressiveCoder {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("need at least one positive step".into()));
        }
        Ok(Self { steps })
    }

    /// `T` stages with step sizes `step0 / 2^t`.
    pub fn halving(step0: f64, stages: usize) -> Result<Self> {
        Self::new((0..stages).map(|t| step0 / (1u64 << t) as f64).collect())
    }

    pub fn num_stages(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// One payload per stage: `count u32 | band model | rANS chunk`.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<Vec<u8>>> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        if x.len() > u32::MAX as usize || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("input must be finite".into()));
        }
        let mut recon = vec![0.0; x.len()];
        let mut out = Vec::with_capacity(self.steps.len());
        for &step in &self.steps {
            let z: Vec<i64> = x.iter().zip(&recon).map(|(a, r)| ((a - r) / step).round() as i64).collect();
            let model = BandModel::fit(&z)?;
            let pmf = model.pmf()?;
            let mut st = RansState::new();
            for v in z.iter().rev() {
                st.push((v - model.min as i64) as usize, &pmf)?;
            }
            let mut payload = (x.len() as u32).to_le_bytes().to_vec();
            model.write(&mut payload);
            payload.extend(st.to_bytes());
            out.push(payload);
            for (r, v) in recon.iter_mut().zip(&z) {
                *r += step * *v as f64;
            }
        }
        Ok(out)
    }

    /// Decodes the first `min(t, payloads.len())` stages; `t = 0` gives zeros.
    pub fn decode(&self, payloads: &[Vec<u8>], t: usize) -> Result<Reconstruction> {
        let stages = t.min(payloads.len()).min(self.steps.len());
        let n = match payloads.first() {
            Some(p) => Reader::new(p).u32()? as usize,
            None => 0,
        };
        let mut values = vec![0.0; n];
        for (payload, &step) in payloads[..stages].iter().zip(&self.steps) {
            let mut r = Reader::new(payload);
            if r.u32()? as usize != n {
                return Err(Error::Format("stage length mismatch".into()));
            }
            let model = BandModel::read(&mut r)?;
            let pmf = model.pmf()?;
            let mut st = RansState::from_bytes(r.take(r.remaining())?)?;
            for v in values.iter_mut() {
                *v += step * (st.pop(&pmf)? as i64 + model.min as i64) as f64;
            }
        }
        Ok(Reconstruction { values, stages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect()
    }

    #[test]
    fn zero_stages_gives_zeros() {
        let x = uniform(100, 1);
        let c = ProgressiveCoder::halving(8.0, 3).unwrap();
        let p = c.encode(&x).unwrap();
        assert_eq!(c.decode(&p, 0).unwrap(), Reconstruction { values: vec![0.0; 100], stages: 0 });
    }

    #[test]
    fn single_stage_is_plain_quantization() {
        let x = uniform(500, 2);
        let c = ProgressiveCoder::halving(4.0, 1).unwrap();
        let r = c.decode(&c.encode(&x).unwrap(), 1).unwrap();
        for (a, b) in x.iter().zip(&r.values) {
            assert_eq!(*b, 4.0 * (a / 4.0).round());
        }
    }

    #[test]
    fn halving_steps_quarter_the_error() {
        let x = uniform(20_000, 3);
        let c = ProgressiveCoder::halving(4.0, 5).unwrap();
        let p = c.encode(&x).unwrap();
        let mut last = f64::INFINITY;
        for t in 1..=5 {
            let r = c.decode(&p, t).unwrap();
            let d = mse(&x, &r.values).unwrap();
            let step = 4.0 / (1 << (t - 1)) as f64;
            assert!((d / (step * step / 12.0) - 1.0).abs() < 0.05, "stage {t}: {d}");
            if t > 1 {
                assert!((last / d - 4.0).abs() < 0.3, "stage {t}: ratio {}", last / d);
            }
            last = d;
        }
    }

    #[test]
    fn missing_stages_decode_prefix() {
        let x = uniform(300, 4);
        let c = ProgressiveCoder::halving(2.0, 4).unwrap();
        let p = c.encode(&x).unwrap();
        let full = c.decode(&p[..2], 2).unwrap();
        let r = c.decode(&p[..2], 4).unwrap();
        assert_eq!(r, full);
        assert_eq!(r.stages, 2);
    }

    #[test]
    fn distortion_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) * 30.0).collect();
        let c = ProgressiveCoder::new(vec![10.0, 7.0, 3.0, 2.5, 0.5]).unwrap();
        let p = c.encode(&x).unwrap();
        let ds: Vec<f64> = (0..=5).map(|t| mse(&x, &c.decode(&p, t).unwrap().values).unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[1] <= w[0]), "{ds:?}");
    }

    #[test]
    fn bad_inputs() {
        assert!(ProgressiveCoder::new(vec![]).is_err());
        assert!(ProgressiveCoder::new(vec![1.0, -1.0]).is_err());
        let c = ProgressiveCoder::halving(1.0, 2).unwrap();
        assert!(c.encode(&[]).is_err());
        let p = c.encode(&[1.0, 2.0]).unwrap();
        assert!(c.decode(&[p[0][..3].to_vec()], 1).is_err());
    }
}
