//! Training-time surrogates: stochastic binarization and the noisy density.

use rand::Rng;

use crate::models::density::{Density, Kernel};
use crate::models::discretized::bin_mass;

/// Draws `+1` with probability `(1 + z) / 2`, else `-1`. Inputs outside
/// `[-1, 1]` are clamped; the flag reports whether that happened.
pub fn stochastic_binarize<R: Rng + ?Sized>(z: f64, rng: &mut R) -> (f64, bool) {
    let c = z.clamp(-1.0, 1.0);
    let v = if rng.gen::<f64>() < (1.0 + c) / 2.0 { 1.0 } else { -1.0 };
    (v, c != z)
}

/// Straight-through surrogate derivative.
pub fn ste_derivative() -> f64 {
    1.0
}

/// `p̃ = p * U[-0.5, 0.5)`, i.e. `p̃(v) = F(v + 0.5) - F(v - 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDensity {
    base: Density,
}

pub fn noisy_relax(base: Density) -> NoisyDensity {
    NoisyDensity { base }
}

impl NoisyDensity {
    pub fn base(&self) -> &Density {
        &self.base
    }

    pub fn pdf(&self, v: f64) -> f64 {
        self.base.mass(v - 0.5, v + 0.5)
    }

    /// `-log2 p̃` summed over dimensions, one value per entry.
    pub fn bits(&self, v: &[f64]) -> f64 {
        v.iter().map(|&x| -self.pdf(x).log2()).sum()
    }

    /// `(p̃, ∂p̃/∂v, ∂p̃/∂loc, ∂p̃/∂log_scale)` for logistic and Gaussian bases.
    pub fn pdf_and_grads(&self, v: f64) -> Option<(f64, f64, f64, f64)> {
        let (kernel, loc, scale) = match self.base {
            Density::Logistic { loc, scale } => (Kernel::Logistic, loc, scale),
            Density::Gaussian { loc, scale } => (Kernel::Gaussian, loc, scale),
            _ => return None,
        };
        let m = bin_mass(kernel, loc, scale, v - 0.5, v + 0.5);
        Some((m.mass, -m.d_loc, m.d_loc, m.d_log_scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::discretized::DiscretizedDensity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binarize_endpoints_and_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| stochastic_binarize(1.0, &mut rng).0 == 1.0));
        assert!((0..100).all(|_| stochastic_binarize(-1.0, &mut rng).0 == -1.0));
        assert_eq!(stochastic_binarize(3.0, &mut rng), (1.0, true));
        assert_eq!(ste_derivative(), 1.0);
    }

    #[test]
    fn binarize_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for z in [0.0, 0.5, -0.3] {
            let m: f64 = (0..100_000).map(|_| stochastic_binarize(z, &mut rng).0).sum::<f64>() / 1e5;
            assert!((m - z).abs() < 0.01, "{z}: {m}");
        }
    }

    #[test]
    fn agrees_with_discretized_pmf_on_integers() {
        let base = Density::logistic(0.3, 1.1).unwrap();
        let noisy = noisy_relax(base.clone());
        let disc = DiscretizedDensity::new(base, -50, 50).unwrap();
        for k in -3..=3 {
            assert!((noisy.pdf(k as f64) - disc.pmf(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn loc_gradient_matches_finite_difference() {
        for v in [-2.3, 0.0, 0.7, 4.1] {
            let (_, dv, dloc, dls) = noisy_relax(Density::logistic(0.4, 0.8).unwrap()).pdf_and_grads(v).unwrap();
            let h = 1e-6;
            let f = |loc: f64, s: f64| noisy_relax(Density::logistic(loc, s).unwrap()).pdf(v);
            let fd_loc = (f(0.4 + h, 0.8) - f(0.4 - h, 0.8)) / (2.0 * h);
            let fd_ls = (f(0.4, 0.8 * h.exp()) - f(0.4, 0.8 * (-h).exp())) / (2.0 * h);
            let nd = noisy_relax(Density::logistic(0.4, 0.8).unwrap());
            let fd_v = (nd.pdf(v + h) - nd.pdf(v - h)) / (2.0 * h);
            assert!((dloc - fd_loc).abs() / fd_loc.abs().max(1e-3) < 1e-5);
            assert!((dls - fd_ls).abs() / fd_ls.abs().max(1e-3) < 1e-5);
            assert!((dv - fd_v).abs() / fd_v.abs().max(1e-3) < 1e-5);
        }
    }

    #[test]
    fn noisy_bits_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = Density::logistic(0.0, 1.5).unwrap();
        let noisy = noisy_relax(base.clone());
        for _ in 0..50 {
            let z: f64 = rng.gen_range(-6.0..6.0);
            let mc: f64 = (0..2000).map(|_| noisy.bits(&[z + rng.gen_range(-0.5..0.5)])).sum::<f64>() / 2000.0;
            let k = z.round();
            let q = base.mass(k - 0.5, k + 0.5);
            assert!(mc >= -q.log2() - 1.0);
        }
    }
}
