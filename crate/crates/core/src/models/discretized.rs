//! Integer PMFs induced by continuous densities through CDF differences.

use super::density::{Density, Kernel};
use crate::coding::pmf::{quantize_pmf, QuantizedPmf};
use crate::error::{Error, Result};

/// Discretized density over the integer support `[min, max]`.
///
/// Interior bins hold `F(x + 0.5) - F(x - 0.5)`; the two edge bins absorb
/// the tails so the PMF is normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDensity {
    density: Density,
    min: i64,
    max: i64,
}

impl DiscretizedDensity {
    pub fn new(density: Density, min: i64, max: i64) -> Result<Self> {
        density.validate()?;
        if min >= max {
            return Err(Error::InvalidParameter(format!("support [{min}, {max}] needs min < max")));
        }
        Ok(Self { density, min, max })
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn support(&self) -> (i64, i64) {
        (self.min, self.max)
    }

    pub fn num_bins(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn contains(&self, x: i64) -> bool {
        (self.min..=self.max).contains(&x)
    }

    pub fn pmf(&self, x: i64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let xf = x as f64;
        if x == self.min {
            self.density.cdf(xf + 0.5)
        } else if x == self.max {
            self.density.sf(xf - 0.5)
        } else {
            self.density.mass(xf - 0.5, xf + 0.5)
        }
    }

    pub fn probs(&self) -> Vec<f64> {
        (self.min..=self.max).map(|x| self.pmf(x)).collect()
    }

    /// Fixed-point version for the coders; symbol `i` is the value `min + i`.
    pub fn quantize(&self, precision: u32) -> Result<QuantizedPmf> {
        quantize_pmf(&self.probs(), precision)
    }

    pub fn symbol_of(&self, x: i64) -> Result<usize> {
        if self.contains(x) {
            Ok((x - self.min) as usize)
        } else {
            Err(Error::SymbolOutOfRange { symbol: x.unsigned_abs() as usize, alphabet: self.num_bins() })
        }
    }

    pub fn value_of(&self, symbol: usize) -> i64 {
        self.min + symbol as i64
    }
}

pub fn discretize(density: Density, min: i64, max: i64) -> Result<DiscretizedDensity> {
    DiscretizedDensity::new(density, min, max)
}

/// Mass of `[a, b)` for a location-scale kernel and its derivatives with
/// respect to the location and the log-scale. Infinite endpoints are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinMass {
    pub mass: f64,
    pub d_loc: f64,
    pub d_log_scale: f64,
    /// Derivative with respect to a common shift of both endpoints.
    pub d_shift: f64,
}

pub fn bin_mass(kernel: Kernel, loc: f64, scale: f64, a: f64, b: f64) -> BinMass {
    let ta = (a - loc) / scale;
    let tb = (b - loc) / scale;
    let mass = if a == f64::NEG_INFINITY {
        kernel.cdf(tb)
    } else if b == f64::INFINITY {
        kernel.sf(ta)
    } else {
        kernel.interval_mass(ta, tb)
    };
    let (ga, gta) = if ta.is_finite() { (kernel.pdf(ta), kernel.pdf(ta) * ta) } else { (0.0, 0.0) };
    let (gb, gtb) = if tb.is_finite() { (kernel.pdf(tb), kernel.pdf(tb) * tb) } else { (0.0, 0.0) };
    BinMass {
        mass: mass.max(0.0),
        d_loc: -(gb - ga) / scale,
        d_log_scale: -(gtb - gta),
        d_shift: (gb - ga) / scale,
    }
}

/// Bin edges of the folded support for integer `x` in `[min, max]`.
pub fn bin_edges(x: i64, min: i64, max: i64) -> (f64, f64) {
    let a = if x <= min { f64::NEG_INFINITY } else { x as f64 - 0.5 };
    let b = if x >= max { f64::INFINITY } else { x as f64 + 0.5 };
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::density::sigmoid;

    #[test]
    fn logistic_center_bin() {
        let d = discretize(Density::logistic(0.0, 1.0).unwrap(), -10, 10).unwrap();
        let expected = sigmoid(0.5) - sigmoid(-0.5);
        assert!((d.pmf(0) - expected).abs() < 1e-15);
        assert!((d.pmf(0) - 0.244_918_662_403_709_1).abs() < 1e-12);
    }

    #[test]
    fn symmetric_density_gives_symmetric_bins() {
        for density in [Density::logistic(0.0, 2.3).unwrap(), Density::gaussian(0.0, 1.7).unwrap()] {
            let d = discretize(density, -8, 8).unwrap();
            for k in 1..8 {
                assert!((d.pmf(k) - d.pmf(-k)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tails_fold_into_edges() {
        let densities = [
            Density::logistic(0.3, 0.7).unwrap(),
            Density::gaussian(5.0, 3.0).unwrap(),
            Density::logistic_mixture(vec![0.3, 0.7], vec![-4.0, 2.0], vec![0.5, 1.5]).unwrap(),
        ];
        for density in densities {
            let d = discretize(density, -2, 2).unwrap();
            let sum: f64 = d.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
            assert!(d.probs().iter().all(|&p| p >= 0.0));
            let q = d.quantize(12).unwrap();
            assert_eq!(q.freqs().iter().sum::<u32>(), 4096);
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(discretize(Density::Logistic { loc: 0.0, scale: 0.0 }, -1, 1).is_err());
        assert!(discretize(Density::logistic(0.0, 1.0).unwrap(), 2, 2).is_err());
    }

    #[test]
    fn bin_mass_gradients_match_finite_differences() {
        for kernel in [Kernel::Logistic, Kernel::Gaussian] {
            for &(a, b) in &[(-0.5, 0.5), (f64::NEG_INFINITY, -1.5), (2.5, f64::INFINITY), (3.5, 4.5)] {
                let (loc, scale) = (0.4, 1.3);
                let g = bin_mass(kernel, loc, scale, a, b);
                let h = 1e-6;
                let m = |l: f64, s: f64| bin_mass(kernel, l, s, a, b).mass;
                let fd_loc = (m(loc + h, scale) - m(loc - h, scale)) / (2.0 * h);
                let fd_ls = (m(loc, scale * h.exp()) - m(loc, scale * (-h).exp())) / (2.0 * h);
                assert!((g.d_loc - fd_loc).abs() < 1e-8, "{kernel:?} {a} {b}");
                assert!((g.d_log_scale - fd_ls).abs() < 1e-8, "{kernel:?} {a} {b}");
            }
        }
    }
}
