//! Continuous densities with closed-form CDFs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use libm::erfc;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard logistic CDF (sigmoid), evaluated stably for large |t|.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn normal_cdf_std(t: f64) -> f64 {
    0.5 * erfc(-t / SQRT_2)
}

pub fn normal_pdf_std(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Location-scale kernel shared by the logistic and Gaussian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Logistic,
    Gaussian,
}

impl Kernel {
    pub fn cdf(self, t: f64) -> f64 {
        match self {
            Kernel::Logistic => sigmoid(t),
            Kernel::Gaussian => normal_cdf_std(t),
        }
    }

    /// `1 - cdf(t)` without cancellation.
    pub fn sf(self, t: f64) -> f64 {
        self.cdf(-t)
    }

    pub fn pdf(self, t: f64) -> f64 {
        match self {
            Kernel::Logistic => {
                let e = (-t.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Kernel::Gaussian => normal_pdf_std(t),
        }
    }

    /// Mass of `[a, b)` in standardized coordinates, free of cancellation in both tails.
    pub fn interval_mass(self, a: f64, b: f64) -> f64 {
        if a >= 0.0 {
            self.sf(a) - self.sf(b)
        } else {
            self.cdf(b) - self.cdf(a)
        }
    }

    pub fn sample_std<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Kernel::Logistic => {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                (u / (1.0 - u)).ln()
            }
            Kernel::Gaussian => StandardNormal.sample(rng),
        }
    }
}

/// A univariate density.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Logistic { loc: f64, scale: f64 },
    Gaussian { loc: f64, scale: f64 },
    /// Mixture of logistic components; weights sum to one.
    LogisticMixture { weights: Vec<f64>, locs: Vec<f64>, scales: Vec<f64> },
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
}

impl Density {
    pub fn logistic(loc: f64, scale: f64) -> Result<Self> {
        let d = Density::Logistic { loc, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(loc: f64, scale: f64) -> Result<Self> {
        let d = Density::Gaussian { loc, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn logistic_mixture(weights: Vec<f64>, locs: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        let d = Density::LogisticMixture { weights, locs, scales };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad_scale = |s: f64| !(s > 0.0 && s.is_finite());
        match self {
            Density::Logistic { loc, scale } | Density::Gaussian { loc, scale } => {
                if bad_scale(*scale) {
                    return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
                }
                if !loc.is_finite() {
                    return Err(Error::InvalidParameter("location must be finite".into()));
                }
            }
            Density::LogisticMixture { weights, locs, scales } => {
                if weights.is_empty() || weights.len() != locs.len() || locs.len() != scales.len() {
                    return Err(Error::InvalidParameter("mixture parameter lengths differ".into()));
                }
                if scales.iter().any(|&s| bad_scale(s)) {
                    return Err(Error::InvalidParameter("mixture scales must be > 0".into()));
                }
                let sum: f64 = weights.iter().sum();
                if weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("mixture weights must be a distribution".into()));
                }
            }
            Density::Uniform { lo, hi } => {
                if !(hi > lo) {
                    return Err(Error::InvalidParameter("uniform needs lo < hi".into()));
                }
            }
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density::Logistic { loc, scale } => Kernel::Logistic.cdf((x - loc) / scale),
            Density::Gaussian { loc, scale } => Kernel::Gaussian.cdf((x - loc) / scale),
            Density::LogisticMixture { weights, locs, scales } => weights
                .iter()
                .zip(locs.iter().zip(scales))
                .map(|(w, (l, s))| w * Kernel::Logistic.cdf((x - l) / s))
                .sum(),
            Density::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Density::Logistic { loc, scale } => Kernel::Logistic.sf((x - loc) / scale),
            Density::Gaussian { loc, scale } => Kernel::Gaussian.sf((x - loc) / scale),
            Density::LogisticMixture { weights, locs, scales } => weights
                .iter()
                .zip(locs.iter().zip(scales))
                .map(|(w, (l, s))| w * Kernel::Logistic.sf((x - l) / s))
                .sum(),
            Density::Uniform { .. } => 1.0 - self.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::Logistic { loc, scale } => Kernel::Logistic.pdf((x - loc) / scale) / scale,
            Density::Gaussian { loc, scale } => Kernel::Gaussian.pdf((x - loc) / scale) / scale,
            Density::LogisticMixture { weights, locs, scales } => weights
                .iter()
                .zip(locs.iter().zip(scales))
                .map(|(w, (l, s))| w * Kernel::Logistic.pdf((x - l) / s) / s)
                .sum(),
            Density::Uniform { lo, hi } => {
                if (*lo..*hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability of `[a, b)`, computed without catastrophic cancellation.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let m = match self {
            Density::Logistic { loc, scale } => {
                Kernel::Logistic.interval_mass((a - loc) / scale, (b - loc) / scale)
            }
            Density::Gaussian { loc, scale } => {
                Kernel::Gaussian.interval_mass((a - loc) / scale, (b - loc) / scale)
            }
            Density::LogisticMixture { weights, locs, scales } => weights
                .iter()
                .zip(locs.iter().zip(scales))
                .map(|(w, (l, s))| w * Kernel::Logistic.interval_mass((a - l) / s, (b - l) / s))
                .sum(),
            Density::Uniform { .. } => self.cdf(b) - self.cdf(a),
        };
        m.max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Density::Logistic { loc, scale } => loc + scale * Kernel::Logistic.sample_std(rng),
            Density::Gaussian { loc, scale } => loc + scale * Kernel::Gaussian.sample_std(rng),
            Density::LogisticMixture { weights, locs, scales } => {
                let mut u: f64 = rng.gen();
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        k = i;
                        break;
                    }
                    u -= w;
                }
                locs[k] + scales[k] * Kernel::Logistic.sample_std(rng)
            }
            Density::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
        }
    }

    pub fn is_symmetric_about(&self, c: f64) -> bool {
        match self {
            Density::Logistic { loc, .. } | Density::Gaussian { loc, .. } => *loc == c,
            Density::Uniform { lo, hi } => (lo + hi) / 2.0 == c,
            Density::LogisticMixture { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_tails() {
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_pdf_matches_derivative_of_cdf() {
        for &t in &[-30.0, -2.0, 0.0, 0.7, 15.0] {
            let h = 1e-6;
            let fd = (sigmoid(t + h) - sigmoid(t - h)) / (2.0 * h);
            assert!((Kernel::Logistic.pdf(t) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_cdf_reference_values() {
        assert!((normal_cdf_std(0.0) - 0.5).abs() < 1e-15);
        let v = normal_cdf_std(1.959_963_984_540_054); assert!((v - 0.975).abs() < 1e-12, "{v:e}");
        assert!(normal_cdf_std(-40.0) >= 0.0);
    }

    #[test]
    fn tail_mass_is_positive_and_accurate() {
        let d = Density::logistic(0.0, 1.0).unwrap();
        let m = d.mass(39.5, 40.5);
        let exact = (-39.5f64).exp() - (-40.5f64).exp();
        assert!((m - exact).abs() / exact < 1e-6, "{m} vs {exact}");
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(Density::logistic(0.0, 0.0).is_err());
        assert!(Density::gaussian(0.0, -1.0).is_err());
        assert!(Density::logistic_mixture(vec![0.5, 0.6], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }
}
