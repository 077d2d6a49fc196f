//! Versioned little-endian model serialization.
//!
//! Layout: version u8 | family u8 | min i64 | max i64 | count u32 | count × f64.

use super::density::Density;
use super::discretized::DiscretizedDensity;
use super::gated::GatedMixturePredictor;
use super::info::Categorical;
use crate::error::{Error, Result};

pub const BLOB_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Family {
    Categorical = 1,
    Logistic = 2,
    Gaussian = 3,
    LogisticMixture = 4,
    Uniform = 5,
    GatedMixture = 6,
}

impl Family {
    fn from_u8(tag: u8) -> Result<Self> {
        Ok(match tag {
            1 => Family::Categorical,
            2 => Family::Logistic,
            3 => Family::Gaussian,
            4 => Family::LogisticMixture,
            5 => Family::Uniform,
            6 => Family::GatedMixture,
            t => return Err(Error::Format(format!("unknown model family {t}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Categorical => "categorical",
            Family::Logistic => "logistic",
            Family::Gaussian => "gaussian",
            Family::LogisticMixture => "logistic-mixture",
            Family::Uniform => "uniform",
            Family::GatedMixture => "gated-mixture",
        }
    }
}

/// Serializable model description: family, integer support and a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlob {
    pub family: Family,
    pub support: (i64, i64),
    pub params: Vec<f64>,
}

impl ModelBlob {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(22 + 8 * self.params.len());
        out.push(BLOB_VERSION);
        out.push(self.family as u8);
        out.extend_from_slice(&self.support.0.to_le_bytes());
        out.extend_from_slice(&self.support.1.to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Parses a blob and returns it with the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let take = |at: usize, n: usize| -> Result<&[u8]> {
            bytes.get(at..at + n).ok_or_else(|| Error::Format("model blob truncated".into()))
        };
        let version = *take(0, 1)?.first().unwrap();
        if version > BLOB_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        if version == 0 {
            return Err(Error::Format("model blob version 0".into()));
        }
        let family = Family::from_u8(take(1, 1)?[0])?;
        let min = i64::from_le_bytes(take(2, 8)?.try_into().unwrap());
        let max = i64::from_le_bytes(take(10, 8)?.try_into().unwrap());
        let count = u32::from_le_bytes(take(18, 4)?.try_into().unwrap()) as usize;
        let raw = take(22, count.checked_mul(8).ok_or_else(|| Error::Format("parameter count overflow".into()))?)?;
        let params = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((Self { family, support: (min, max), params }, 22 + 8 * count))
    }

    /// Categorical over symbols `0..M`.
    pub fn from_categorical(c: &Categorical) -> Self {
        Self { family: Family::Categorical, support: (0, c.len() as i64 - 1), params: c.probs().to_vec() }
    }

    pub fn to_categorical(&self) -> Result<Categorical> {
        self.expect(Family::Categorical)?;
        Categorical::new(self.params.clone())
    }

    pub fn from_discretized(d: &DiscretizedDensity) -> Self {
        let (family, params) = match d.density() {
            Density::Logistic { loc, scale } => (Family::Logistic, vec![*loc, *scale]),
            Density::Gaussian { loc, scale } => (Family::Gaussian, vec![*loc, *scale]),
            Density::LogisticMixture { weights, locs, scales } => {
                let mut p = weights.clone();
                p.extend_from_slice(locs);
                p.extend_from_slice(scales);
                (Family::LogisticMixture, p)
            }
            Density::Uniform { lo, hi } => (Family::Uniform, vec![*lo, *hi]),
        };
        Self { family, support: d.support(), params }
    }

    pub fn to_discretized(&self) -> Result<DiscretizedDensity> {
        let p = &self.params;
        let bad = || Error::Format(format!("{} blob has {} parameters", self.family.name(), p.len()));
        let density = match self.family {
            Family::Logistic if p.len() == 2 => Density::logistic(p[0], p[1])?,
            Family::Gaussian if p.len() == 2 => Density::gaussian(p[0], p[1])?,
            Family::Uniform if p.len() == 2 => Density::Uniform { lo: p[0], hi: p[1] },
            Family::LogisticMixture if p.len() % 3 == 0 && !p.is_empty() => {
                let k = p.len() / 3;
                Density::logistic_mixture(p[..k].to_vec(), p[k..2 * k].to_vec(), p[2 * k..].to_vec())?
            }
            Family::Categorical | Family::GatedMixture => {
                return Err(Error::Format(format!("{} is not a discretized density", self.family.name())))
            }
            _ => return Err(bad()),
        };
        DiscretizedDensity::new(density, self.support.0, self.support.1)
    }

    /// Gated predictor; window and expert count lead the parameter vector.
    pub fn from_gated(g: &GatedMixturePredictor) -> Self {
        let mut params = vec![g.window() as f64, g.experts() as f64];
        params.extend(g.params());
        Self { family: Family::GatedMixture, support: g.support(), params }
    }

    pub fn to_gated(&self) -> Result<GatedMixturePredictor> {
        self.expect(Family::GatedMixture)?;
        if self.params.len() < 2 {
            return Err(Error::Format("gated blob too short".into()));
        }
        let (window, experts) = (self.params[0] as usize, self.params[1] as usize);
        GatedMixturePredictor::from_params(window, experts, self.support.0, self.support.1, &self.params[2..])
            .map_err(|e| Error::Format(e.to_string()))
    }

    fn expect(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::Format(format!("expected {} blob, found {}", family.name(), self.family.name())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_layout() {
        let d = DiscretizedDensity::new(Density::logistic(0.5, 2.0).unwrap(), -2, 3).unwrap();
        let bytes = ModelBlob::from_discretized(&d).to_bytes();
        let mut expect = vec![1u8, 2];
        expect.extend_from_slice(&(-2i64).to_le_bytes());
        expect.extend_from_slice(&3i64.to_le_bytes());
        expect.extend_from_slice(&[2, 0, 0, 0]);
        expect.extend_from_slice(&0.5f64.to_le_bytes());
        expect.extend_from_slice(&2.0f64.to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn roundtrips() {
        let c = Categorical::new(vec![0.25, 0.5, 0.25]).unwrap();
        let b = ModelBlob::from_categorical(&c).to_bytes();
        assert_eq!(ModelBlob::from_bytes(&b).unwrap().0.to_categorical().unwrap(), c);

        let m = DiscretizedDensity::new(
            Density::logistic_mixture(vec![0.3, 0.7], vec![-1.0, 4.0], vec![0.5, 1.5]).unwrap(),
            -10,
            10,
        )
        .unwrap();
        let (blob, used) = ModelBlob::from_bytes(&ModelBlob::from_discretized(&m).to_bytes()).unwrap();
        assert_eq!(used, 22 + 6 * 8);
        assert_eq!(blob.to_discretized().unwrap(), m);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GatedMixturePredictor::new(2, 3, 0, 15, &mut rng).unwrap();
        let (blob, _) = ModelBlob::from_bytes(&ModelBlob::from_gated(&g).to_bytes()).unwrap();
        assert_eq!(blob.to_gated().unwrap(), g);
    }

    #[test]
    fn rejects_bad_input() {
        let c = Categorical::uniform(2);
        let mut b = ModelBlob::from_categorical(&c).to_bytes();
        assert!(matches!(ModelBlob::from_bytes(&b[..10]), Err(Error::Format(_))));
        b[0] = 2;
        assert_eq!(ModelBlob::from_bytes(&b), Err(Error::UnsupportedVersion(2)));
        b[0] = 1;
        b[1] = 99;
        assert!(matches!(ModelBlob::from_bytes(&b), Err(Error::Format(_))));
    }
}
